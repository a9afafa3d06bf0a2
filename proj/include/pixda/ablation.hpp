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
#ifndef PIXDA_ABLATION_HPP_
#define PIXDA_ABLATION_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pixda/config.hpp"
#include "pixda/data.hpp"
#include "pixda/eval.hpp"

namespace pixda {

// Source set, pool of labelled target images and the held-out evaluation
// set. An empty eval set means "the target pool minus the selected shots".
struct Domains {
  std::vector<LabeledImage> source;
  std::vector<LabeledImage> target_pool;
  std::vector<LabeledImage> eval;
};

// Throws DataError for missing or unreadable inputs.
Domains load_domains(const DataSettings& data);

struct Split {
  std::vector<LabeledImage> shots;
  std::vector<LabeledImage> eval;
};
Split split_for_seed(const Domains& domains, int k_shot, std::uint64_t seed);

// Recognised variant names, in table order.
const std::vector<std::string>& ablation_variants();

struct VariantRow {
  std::string variant;
  std::vector<double> miou;      // per seed, in points
  std::vector<double> rare_iou;  // per seed, mean IoU over the rare classes, in points
  double median_miou = 0.0;
  std::optional<double> median_rare_iou;
};

struct OrderingVerdict {
  std::string lhs;
  std::string relation;  // ">" or ">="
  std::string rhs;
  double margin = 0.0;   // lhs median must exceed rhs median + margin
  std::string metric;    // "miou" or "rare_iou"
  double lhs_value = 0.0;
  double rhs_value = 0.0;
  bool pass = false;
};

struct AblationReport {
  std::vector<std::uint64_t> seeds;
  std::vector<VariantRow> rows;
  std::vector<OrderingVerdict> verdicts;

  const VariantRow* row(const std::string& variant) const;
};

using Progress = std::function<void(const std::string& variant, std::uint64_t seed, double miou)>;

// Runs every requested variant for every seed. Pretraining is shared per seed
// and the selection teacher is shared by the fine-tuning variants. Throws
// ConfigError on an unknown variant name.
AblationReport run_ablation(const AblationConfig& config, const Domains& domains,
                            const Progress& progress = {});

// Verdicts over whichever of the fixed orderings have both sides present.
std::vector<OrderingVerdict> ordering_verdicts(const std::vector<VariantRow>& rows);

double median(std::vector<double> values);

Json to_json(const AblationReport& report);
std::string format_table(const AblationReport& report);

}  // namespace pixda

#endif  // PIXDA_ABLATION_HPP_
