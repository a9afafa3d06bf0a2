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
#include "pixda/eval.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace pixda {
namespace {

using i128 = __int128;

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

struct Fraction {
  i128 num = 0;
  i128 den = 1;
};

bool mul_ok(i128 a, i128 b, i128& out) { return !__builtin_mul_overflow(a, b, &out); }

// Sum of fractions; false on overflow.
bool add_exact(Fraction& acc, const Fraction& f) {
  const i128 g = gcd128(acc.den, f.den);
  i128 a, b, den;
  if (!mul_ok(acc.num, f.den / g, a) || !mul_ok(f.num, acc.den / g, b) ||
      !mul_ok(acc.den, f.den / g, den)) {
    return false;
  }
  i128 num;
  if (__builtin_add_overflow(a, b, &num)) return false;
  const i128 r = gcd128(num, den);
  acc = {num / (r == 0 ? 1 : r), den / (r == 0 ? 1 : r)};
  return true;
}

int bit_length(unsigned __int128 v) {
  int n = 0;
  while (v != 0) {
    v >>= 1;
    ++n;
  }
  return n;
}

// num / den rounded to nearest double, ties to even. Long division yields 55
// significant quotient bits plus a sticky bit. Requires 0 <= num and
// 0 < den < 2^125.
double to_double(i128 num, i128 den) {
  if (num == 0) return 0.0;
  using u128 = unsigned __int128;
  u128 q = static_cast<u128>(num / den);
  i128 rem = num % den;
  int exp = 0;
  bool sticky = false;
  while (bit_length(q) > 55) {
    sticky |= (q & 1) != 0;
    q >>= 1;
    ++exp;
  }
  while (bit_length(q) < 55 && exp > -1100) {
    rem *= 2;
    q <<= 1;
    if (rem >= den) {
      rem -= den;
      q |= 1;
    }
    --exp;
  }
  sticky |= rem != 0;
  const bool round = (q & 2) != 0;
  sticky |= (q & 1) != 0;
  q >>= 2;
  exp += 2;
  if (round && (sticky || (q & 1) != 0)) ++q;
  return std::ldexp(static_cast<double>(static_cast<std::uint64_t>(q)), exp);
}

std::optional<double> mean_of(const std::vector<Fraction>& fs) {
  if (fs.empty()) return std::nullopt;
  Fraction acc;
  bool exact = true;
  for (const auto& f : fs) {
    if (!add_exact(acc, f)) {
      exact = false;
      break;
    }
  }
  const i128 n = static_cast<i128>(fs.size());
  i128 den;
  if (exact && mul_ok(acc.den, n, den) && den < (i128{1} << 124)) {
    const i128 g = gcd128(acc.num, den);
    return to_double(acc.num / g, den / g);
  }
  long double s = 0.0L;
  for (const auto& f : fs) {
    s += static_cast<long double>(f.num) / static_cast<long double>(f.den);
  }
  return static_cast<double>(s / static_cast<long double>(fs.size()));
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes),
      counts_(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes), 0) {
  if (classes < 0) throw InvalidArgument("ConfusionMatrix: negative class count");
}

void ConfusionMatrix::accumulate(const LabelMap& prediction, const LabelMap& truth) {
  if (!prediction.values.same_shape(truth.values)) {
    throw_shape_mismatch("accumulate", prediction.values.shape(), truth.values.shape());
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::int32_t p = prediction.values[i];
    if (p == prediction.ignore_index || p == truth.ignore_index) {
      throw InvalidArgument("accumulate: prediction contains the ignore sentinel");
    }
    if (p < 0 || p >= classes_) {
      throw InvalidArgument("accumulate: predicted class " + std::to_string(p) +
                            " outside [0, " + std::to_string(classes_) + ")");
    }
  }
  truth.check_classes(classes_);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!truth.is_valid(i)) continue;
    ++at(truth.values[i], prediction.values[i]);
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) {
    throw InvalidArgument("ConfusionMatrix: class counts differ");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

MetricsReport report(const ConfusionMatrix& confusion, const ClassPartition& partition,
                     ZeroUnionPolicy policy) {
  const int c = confusion.classes();
  for (const auto* set : {&partition.well, &partition.under}) {
    for (int k : *set) {
      if (k < 0 || k >= c) {
        throw InvalidArgument("report: partition class " + std::to_string(k) +
                              " outside [0, " + std::to_string(c) + ")");
      }
    }
  }
  MetricsReport r{confusion, {}, std::nullopt, std::nullopt, std::nullopt, partition, policy};
  std::vector<std::optional<Fraction>> iou(static_cast<std::size_t>(c));
  r.per_class_iou.resize(static_cast<std::size_t>(c));
  for (int k = 0; k < c; ++k) {
    std::int64_t tp = confusion.at(k, k), fp = 0, fn = 0;
    for (int j = 0; j < c; ++j) {
      if (j == k) continue;
      fp += confusion.at(j, k);
      fn += confusion.at(k, j);
    }
    const std::int64_t uni = tp + fp + fn;
    if (uni > 0) {
      const i128 g = gcd128(tp, uni);
      const Fraction f = tp == 0 ? Fraction{0, 1} : Fraction{tp / g, uni / g};
      iou[static_cast<std::size_t>(k)] = f;
      r.per_class_iou[static_cast<std::size_t>(k)] = to_double(f.num, f.den);
    } else if (policy == ZeroUnionPolicy::kReportZero) {
      iou[static_cast<std::size_t>(k)] = Fraction{0, 1};
      r.per_class_iou[static_cast<std::size_t>(k)] = 0.0;
    }
  }
  auto collect = [&](auto&& classes) {
    std::vector<Fraction> fs;
    for (int k : classes) {
      if (iou[static_cast<std::size_t>(k)]) fs.push_back(*iou[static_cast<std::size_t>(k)]);
    }
    return fs;
  };
  std::vector<int> all(static_cast<std::size_t>(c));
  std::iota(all.begin(), all.end(), 0);
  r.miou = mean_of(collect(all));
  r.miou_well = mean_of(collect(partition.well));
  r.miou_under = mean_of(collect(partition.under));
  return r;
}

LabelMap resize_nearest(const LabelMap& labels, int height, int width) {
  if (labels.height() == height && labels.width() == width) return labels;
  LabelMap out(height, width, 0, labels.ignore_index);
  for (int y = 0; y < height; ++y) {
    const int sy = static_cast<int>(static_cast<long>(y) * labels.height() / height);
    for (int x = 0; x < width; ++x) {
      const int sx = static_cast<int>(static_cast<long>(x) * labels.width() / width);
      out.values.at(y, x) = labels.values.at(sy, sx);
    }
  }
  return out;
}

std::string policy_name(ZeroUnionPolicy policy) {
  return policy == ZeroUnionPolicy::kExclude ? "exclude" : "report_zero";
}

ZeroUnionPolicy parse_policy(const std::string& name) {
  if (name == "exclude") return ZeroUnionPolicy::kExclude;
  if (name == "report_zero") return ZeroUnionPolicy::kReportZero;
  throw InvalidArgument("unknown zero-union policy '" + name +
                        "' (expected exclude or report_zero)");
}

std::string render_iou_svg(const MetricsReport& report,
                           std::span<const std::string> class_names) {
  const int c = static_cast<int>(report.per_class_iou.size());
  const int bar_h = 18, gap = 6, left = 120, plot_w = 300;
  const int height = 40 + c * (bar_h + gap);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + plot_w + 80
    << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  char buf[64];
  if (report.miou) {
    std::snprintf(buf, sizeof buf, "%.2f", *report.miou * 100.0);
    s << "  <text x=\"10\" y=\"20\">mIoU " << buf << "</text>\n";
  } else {
    s << "  <text x=\"10\" y=\"20\">mIoU n/a</text>\n";
  }
  for (int k = 0; k < c; ++k) {
    const int y = 30 + k * (bar_h + gap);
    const std::string name = k < static_cast<int>(class_names.size())
                                 ? class_names[static_cast<std::size_t>(k)]
                                 : "class " + std::to_string(k);
    s << "  <text x=\"10\" y=\"" << y + 13 << "\">" << name << "</text>\n";
    const auto& v = report.per_class_iou[static_cast<std::size_t>(k)];
    if (v) {
      const int w = static_cast<int>(*v * plot_w + 0.5);
      std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
      s << "  <rect x=\"" << left << "\" y=\"" << y << "\" width=\"" << w
        << "\" height=\"" << bar_h << "\" fill=\"#4a7ab5\"/>\n"
        << "  <text x=\"" << left + w + 6 << "\" y=\"" << y + 13 << "\">" << buf
        << "</text>\n";
    } else {
      s << "  <text x=\"" << left << "\" y=\"" << y + 13 << "\">absent</text>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace pixda
