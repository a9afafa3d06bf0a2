/* Copyright 2026 The pixda Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef PIXDA_TESTS_ORACLES_HPP_
#define PIXDA_TESTS_ORACLES_HPP_

// Brute-force scalar reference implementations, written pixel by pixel in
// long double without sharing code with the library.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "pixda/losses.hpp"
#include "pixda/tensor.hpp"

namespace pixda::oracle {

using Real = long double;

inline Real clamp_low(Real p) { return p < 1e-7L ? 1e-7L : (p > 1.0L ? 1.0L : p); }
inline Real clamp_open(Real p) { return p < 1e-7L ? 1e-7L : (p > 1.0L - 1e-7L ? 1.0L - 1e-7L : p); }

inline Real focal(const ProbMap& probs, const LabelMap& labels, Real alpha, Real gamma) {
  Real sum = 0;
  long valid = 0;
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      const int c = labels.values.at(y, x);
      if (c == labels.ignore_index) continue;
      const Real p = clamp_low(probs.at(c, y, x));
      sum += -alpha * std::pow(1.0L - p, gamma) * std::log(p);
      ++valid;
    }
  }
  return sum / valid;
}

inline Real s_value(const ProbMap& probs, const LabelMap& labels, int y, int x) {
  const int c = labels.values.at(y, x);
  if (c == labels.ignore_index) return 0;
  return -std::log(clamp_low(probs.at(c, y, x)));
}

// Counts same-class pixels by a full scan per pixel.
inline Real b_value(const LabelMap& labels, int y, int x) {
  const int c = labels.values.at(y, x);
  if (c == labels.ignore_index) return 0;
  long same = 0, valid = 0;
  for (int yy = 0; yy < labels.height(); ++yy) {
    for (int xx = 0; xx < labels.width(); ++xx) {
      const int k = labels.values.at(yy, xx);
      if (k == labels.ignore_index) continue;
      ++valid;
      if (k == c) ++same;
    }
  }
  return 1.0L - static_cast<Real>(same) / valid;
}

inline Real pixel_discriminator(const RealMap& d_src, const RealMap& d_tgt) {
  Real sum = 0;
  const int h = d_src.dim(0), w = d_src.dim(1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      sum += std::log(clamp_open(d_src.at(y, x))) + std::log(1.0L - clamp_open(d_tgt.at(y, x)));
    }
  }
  return -sum / (h * w);
}

inline Real pixadv(const RealMap& d_tgt, const RealMap& s, const RealMap& b) {
  Real sum = 0;
  const int h = d_tgt.dim(0), w = d_tgt.dim(1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      sum += static_cast<Real>(s.at(y, x)) * b.at(y, x) * std::log(clamp_open(d_tgt.at(y, x)));
    }
  }
  return -sum / (h * w);
}

inline Real global_discriminator(Real dg_src, Real dg_tgt) {
  return -std::log(clamp_open(dg_src)) - std::log(1.0L - clamp_open(dg_tgt));
}

// -sum_c softmax(t / tau)_c log softmax(s)_c averaged over pixels, with the
// softmax written as exp / sum(exp).
inline Real kd(const Array<double>& teacher, const Array<double>& student, Real tau) {
  const int c = student.dim(0), h = student.dim(1), w = student.dim(2);
  Real total = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Real zt = 0, zs = 0;
      for (int k = 0; k < c; ++k) {
        zt += std::exp(teacher.at(k, y, x) / tau);
        zs += std::exp(static_cast<Real>(student.at(k, y, x)));
      }
      for (int k = 0; k < c; ++k) {
        const Real q = std::exp(teacher.at(k, y, x) / tau) / zt;
        const Real s = std::exp(static_cast<Real>(student.at(k, y, x))) / zs;
        total += -q * std::log(s);
      }
    }
  }
  return total / (h * w);
}

using Spectrum = std::vector<std::complex<Real>>;

// Direct O(H^2 W^2) transform of channel c of a (C, H, W) image.
inline Spectrum dft(const Tensor& img, int c) {
  const int h = img.dim(1), w = img.dim(2);
  Spectrum out(static_cast<std::size_t>(h) * w);
  const Real two_pi = 2.0L * std::numbers::pi_v<Real>;
  for (int u = 0; u < h; ++u) {
    for (int v = 0; v < w; ++v) {
      std::complex<Real> s = 0;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const Real a = -two_pi * (static_cast<Real>(u) * y / h + static_cast<Real>(v) * x / w);
          s += static_cast<Real>(img.at(c, y, x)) * std::polar(1.0L, a);
        }
      }
      out[static_cast<std::size_t>(u) * w + v] = s;
    }
  }
  return out;
}

}  // namespace pixda::oracle

#endif  // PIXDA_TESTS_ORACLES_HPP_
