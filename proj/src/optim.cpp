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
#include "pixda/optim.hpp"

#include <cmath>

namespace pixda {

double poly_lr(double base, long iter, long max_iter, double power) {
  if (max_iter <= 0 || iter >= max_iter) return 0.0;
  if (iter <= 0) return base;
  return base * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(max_iter), power);
}

Sgd::Sgd(std::vector<Parameter*> params, const SgdSettings& settings)
    : params_(std::move(params)), settings_(settings) {
  velocity_.reserve(params_.size());
  for (const Parameter* p : params_) velocity_.emplace_back(p->value.shape());
}

void Sgd::step(double lr) {
  const float mom = static_cast<float>(settings_.momentum);
  const float wd = static_cast<float>(settings_.weight_decay);
  const float rate = static_cast<float>(lr);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& w = params_[k]->value;
    const Tensor& g = params_[k]->grad;
    Tensor& v = velocity_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const float d = g[i] + wd * w[i];
      v[i] = started_ ? mom * v[i] + d : d;
      w[i] -= rate * v[i];
    }
  }
  started_ = true;
}

Adam::Adam(std::vector<Parameter*> params, const AdamSettings& settings)
    : params_(std::move(params)), settings_(settings) {
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step(double lr) {
  ++t_;
  const double b1 = settings_.beta1, b2 = settings_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const float step = static_cast<float>(lr / c1);
  const float sqrt_c2 = static_cast<float>(std::sqrt(c2));
  const float eps = static_cast<float>(settings_.eps);
  const float fb1 = static_cast<float>(b1), fb2 = static_cast<float>(b2);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& w = params_[k]->value;
    const Tensor& g = params_[k]->grad;
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = fb1 * m[i] + (1.0f - fb1) * g[i];
      v[i] = fb2 * v[i] + (1.0f - fb2) * g[i] * g[i];
      w[i] -= step * m[i] / (std::sqrt(v[i]) / sqrt_c2 + eps);
    }
  }
}

}  // namespace pixda
