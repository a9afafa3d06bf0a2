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
#include "pixda/ablation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "pixda/trainer.hpp"

namespace pixda {
namespace {

std::optional<AdversarialVariant> adversarial_of(const std::string& name) {
  using T = AdvTerm;
  if (name == "none") return joint_training_variant();
  if (name == "image_wise") return AdversarialVariant{T::kImageWise, false, false, false, true};
  if (name == "pixel_wise") return AdversarialVariant{T::kPixelWise, false, false, false, true};
  if (name == "pixel_b") return AdversarialVariant{T::kPixelWise, false, true, false, true};
  if (name == "pixel_s") return AdversarialVariant{T::kPixelWise, true, false, false, true};
  if (name == "pixadv") return AdversarialVariant{T::kPixelWise, true, true, false, true};
  if (name == "pixadv_selection") return pixda_variant();
  return std::nullopt;
}

double points(const std::optional<double>& v) { return v ? 100.0 * *v : 0.0; }

}  // namespace

Domains load_domains(const DataSettings& data) {
  Domains d;
  if (data.toy_dir) {
    ToyDataset toy = read_toy_dataset(*data.toy_dir);
    d.source = std::move(toy.source);
    d.target_pool = std::move(toy.target);
  } else if (data.generate) {
    const auto& g = *data.generate;
    ToyPair pair = generate_toy_pair(g.spec, g.n_source, g.n_target, g.n_cities);
    d.source = std::move(pair.source);
    d.target_pool = std::move(pair.target);
  } else if (data.cityscapes) {
    const auto& c = *data.cityscapes;
    d.source = load_cityscapes_format(c.source_images, c.source_labels);
    d.target_pool = load_cityscapes_format(c.target_images, c.target_labels);
    d.eval = load_cityscapes_format(c.eval_images, c.eval_labels);
  } else {
    throw ConfigError("data: no data source configured");
  }
  if (d.source.empty()) throw DataError("source set is empty");
  if (d.target_pool.empty()) throw DataError("target set is empty");
  return d;
}

Split split_for_seed(const Domains& domains, int k_shot, std::uint64_t seed) {
  Split s;
  s.shots = kshot_select(domains.target_pool, k_shot, seed);
  s.eval = domains.eval.empty() ? exclude(domains.target_pool, s.shots) : domains.eval;
  if (s.eval.empty()) throw DataError("no target images left for evaluation");
  return s;
}

const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> names{
      "source_only", "none",   "image_wise",       "pixel_wise",          "pixel_b",
      "pixel_s",     "pixadv", "pixadv_selection", "pixadv_selection_ft", "pixda"};
  return names;
}

const VariantRow* AblationReport::row(const std::string& variant) const {
  for (const auto& r : rows) {
    if (r.variant == variant) return &r;
  }
  return nullptr;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

AblationReport run_ablation(const AblationConfig& config, const Domains& domains,
                            const Progress& progress) {
  config.validate();
  const auto& known = ablation_variants();
  for (const auto& v : config.variants) {
    if (std::find(known.begin(), known.end(), v) == known.end()) {
      std::string list;
      for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
      throw ConfigError("variants: unknown variant '" + v + "' (valid: " + list + ")");
    }
  }

  AblationReport report;
  report.seeds = config.seeds;
  for (const auto& v : config.variants) report.rows.push_back({v, {}, {}, 0.0, std::nullopt});

  for (std::uint64_t seed : config.seeds) {
    TrainConfig cfg = config.train;
    cfg.seed = seed;
    const Split split = split_for_seed(domains, config.k_shot, seed);
    std::optional<Checkpoint> pretrained, teacher;
    auto pretrain = [&]() -> const Checkpoint& {
      if (!pretrained) pretrained = pretrain_source(cfg, domains.source);
      return *pretrained;
    };
    auto selection_teacher = [&]() -> const Checkpoint& {
      if (!teacher) {
        teacher = train_adversarial(cfg, pixda_variant(), pretrain(), domains.source, split.shots);
      }
      return *teacher;
    };

    for (auto& row : report.rows) {
      Checkpoint result;
      if (row.variant == "source_only") {
        result = pretrain();
      } else if (row.variant == "pixadv_selection") {
        result = selection_teacher();
      } else if (row.variant == "pixadv_selection_ft") {
        TrainConfig naive = cfg;
        naive.lambda_kd = 0.0;
        result = finetune_kd(naive, selection_teacher(), split.shots);
      } else if (row.variant == "pixda") {
        result = finetune_kd(cfg, selection_teacher(), split.shots);
      } else {
        result = train_adversarial(cfg, *adversarial_of(row.variant), pretrain(), domains.source,
                                   split.shots);
      }
      const MetricsReport m = evaluate(result, split.eval, config.partition);
      row.miou.push_back(points(m.miou));
      if (!config.rare_classes.empty()) {
        double sum = 0.0;
        for (int c : config.rare_classes) sum += points(m.per_class_iou.at(static_cast<std::size_t>(c)));
        row.rare_iou.push_back(sum / static_cast<double>(config.rare_classes.size()));
      }
      if (progress) progress(row.variant, seed, row.miou.back());
    }
  }
  for (auto& row : report.rows) {
    row.median_miou = median(row.miou);
    if (!row.rare_iou.empty()) row.median_rare_iou = median(row.rare_iou);
  }
  report.verdicts = ordering_verdicts(report.rows);
  return report;
}

std::vector<OrderingVerdict> ordering_verdicts(const std::vector<VariantRow>& rows) {
  struct Rule {
    const char* lhs;
    const char* relation;
    const char* rhs;
    double margin;
    const char* metric;
  };
  // Adversarial-term ordering, pipeline-component ordering, rare-class gap.
  static const Rule rules[] = {
      {"image_wise", ">", "none", 0.0, "miou"},
      {"pixel_wise", ">", "image_wise", 0.0, "miou"},
      {"pixadv", ">=", "pixel_b", 0.5, "miou"},
      {"pixadv", ">=", "pixel_s", 0.5, "miou"},
      {"pixadv_selection", ">=", "pixadv", -0.2, "miou"},
      {"pixadv_selection_ft", ">=", "pixadv_selection", -0.2, "miou"},
      {"pixda", ">=", "pixadv_selection_ft", -0.2, "miou"},
      {"pixda", ">", "pixadv", 0.0, "miou"},
      {"pixda", ">=", "image_wise", 2.0, "rare_iou"},
  };
  auto find = [&](const std::string& name) -> const VariantRow* {
    for (const auto& r : rows) {
      if (r.variant == name) return &r;
    }
    return nullptr;
  };
  std::vector<OrderingVerdict> out;
  for (const auto& rule : rules) {
    const VariantRow* l = find(rule.lhs);
    const VariantRow* r = find(rule.rhs);
    if (!l || !r) continue;
    OrderingVerdict v{rule.lhs, rule.relation, rule.rhs, rule.margin, rule.metric, 0.0, 0.0, false};
    if (v.metric == "rare_iou") {
      if (!l->median_rare_iou || !r->median_rare_iou) continue;
      v.lhs_value = *l->median_rare_iou;
      v.rhs_value = *r->median_rare_iou;
    } else {
      v.lhs_value = l->median_miou;
      v.rhs_value = r->median_miou;
    }
    v.pass = v.relation == ">" ? v.lhs_value > v.rhs_value + v.margin
                               : v.lhs_value >= v.rhs_value + v.margin;
    out.push_back(v);
  }
  return out;
}

Json to_json(const AblationReport& report) {
  Json j;
  j["seeds"] = report.seeds;
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json row{{"variant", r.variant}, {"miou", r.miou}, {"median_miou", r.median_miou}};
    if (!r.rare_iou.empty()) {
      row["rare_iou"] = r.rare_iou;
      row["median_rare_iou"] = *r.median_rare_iou;
    }
    rows.push_back(row);
  }
  j["rows"] = rows;
  Json verdicts = Json::array();
  for (const auto& v : report.verdicts) {
    verdicts.push_back({{"lhs", v.lhs},
                        {"relation", v.relation},
                        {"rhs", v.rhs},
                        {"margin", v.margin},
                        {"metric", v.metric},
                        {"lhs_value", v.lhs_value},
                        {"rhs_value", v.rhs_value},
                        {"pass", v.pass}});
  }
  j["verdicts"] = verdicts;
  return j;
}

std::string format_table(const AblationReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-22s %12s %14s\n", "variant", "median mIoU", "median rare");
  out << line;
  for (const auto& r : report.rows) {
    if (r.median_rare_iou) {
      std::snprintf(line, sizeof(line), "%-22s %12.2f %14.2f\n", r.variant.c_str(), r.median_miou,
                    *r.median_rare_iou);
    } else {
      std::snprintf(line, sizeof(line), "%-22s %12.2f %14s\n", r.variant.c_str(), r.median_miou, "-");
    }
    out << line;
  }
  for (const auto& v : report.verdicts) {
    std::snprintf(line, sizeof(line), "%s %s %s %s %+.2f (%s: %.2f vs %.2f)\n",
                  v.pass ? "PASS" : "FAIL", v.lhs.c_str(), v.relation.c_str(), v.rhs.c_str(),
                  v.margin, v.metric.c_str(), v.lhs_value, v.rhs_value);
    out << line;
  }
  return out.str();
}

}  // namespace pixda
