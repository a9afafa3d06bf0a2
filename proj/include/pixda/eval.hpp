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
#ifndef PIXDA_EVAL_HPP_
#define PIXDA_EVAL_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pixda/tensor.hpp"

namespace pixda {

// Rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes = 0);

  // Adds one count per pixel whose truth is not the ignore index. Throws
  // InvalidArgument when the prediction holds the ignore sentinel or a class
  // outside [0, C).
  void accumulate(const LabelMap& prediction, const LabelMap& truth);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  int classes() const { return classes_; }
  std::int64_t at(int truth, int pred) const {
    return counts_[static_cast<std::size_t>(truth) * classes_ + pred];
  }
  std::int64_t& at(int truth, int pred) {
    return counts_[static_cast<std::size_t>(truth) * classes_ + pred];
  }
  std::int64_t total() const;
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int classes_;
  std::vector<std::int64_t> counts_;
};

struct ClassPartition {
  std::vector<int> well;
  std::vector<int> under;
};

enum class ZeroUnionPolicy {
  kExclude,     // classes with no truth and no prediction leave every mean
  kReportZero,  // such classes score 0 and stay in the means
};

struct MetricsReport {
  ConfusionMatrix confusion;
  std::vector<std::optional<double>> per_class_iou;  // nullopt: zero union
  std::optional<double> miou;
  std::optional<double> miou_well;
  std::optional<double> miou_under;
  ClassPartition partition;
  ZeroUnionPolicy policy = ZeroUnionPolicy::kExclude;
};

// IoU_c = TP / (TP + FP + FN). Means are computed from exact fractions and
// rounded once.
MetricsReport report(const ConfusionMatrix& confusion,
                     const ClassPartition& partition,
                     ZeroUnionPolicy policy = ZeroUnionPolicy::kExclude);

// Upsamples a prediction to the truth resolution by nearest neighbour.
LabelMap resize_nearest(const LabelMap& labels, int height, int width);

std::string policy_name(ZeroUnionPolicy policy);
ZeroUnionPolicy parse_policy(const std::string& name);

// Horizontal bar chart of per-class IoU as a standalone SVG document.
std::string render_iou_svg(const MetricsReport& report,
                           std::span<const std::string> class_names = {});

}  // namespace pixda

#endif  // PIXDA_EVAL_HPP_
