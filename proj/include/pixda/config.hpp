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
#ifndef PIXDA_CONFIG_HPP_
#define PIXDA_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pixda/data.hpp"
#include "pixda/eval.hpp"
#include "pixda/losses.hpp"
#include "pixda/models.hpp"
#include "pixda/optim.hpp"

namespace pixda {

using Json = nlohmann::ordered_json;

struct PretrainSettings {
  int epochs = 4;
  double lr = 0.01;
};

// Every hyperparameter of the three training phases.
struct TrainConfig {
  double lambda_adv = 0.1;
  double lambda_kd = 0.5;
  double tau = 0.5;
  FocalParams focal{};
  double delta0 = 0.4;
  double delta_max = 1.0 - 1e-6;
  SgdSettings seg_optimizer{};
  AdamSettings disc_optimizer{};
  int batch_size = 4;
  int kd_iterations = 200;
  double finetune_lr = 2.5e-4;
  int max_adv_epochs = 4;
  // 0: one pass over the retained source subset per epoch.
  int iterations_per_epoch = 0;
  std::uint64_t seed = 0;
  PretrainSettings pretrain{};
  double fda_beta = 0.01;
  SegmenterConfig model{};

  // Throws ConfigError naming the first invalid field.
  void validate() const;
};

enum class Method {
  kPixDA,
  kSourceOnly,
  kJointTraining,
  kFineTuning,
  kImageWiseAdversarial,
};

std::string method_name(Method m);
// Throws ConfigError listing the valid names.
Method parse_method(const std::string& name);

struct GenerateSettings {
  ToySceneSpec spec{};
  int n_source = 200;
  int n_target = 60;
  int n_cities = 3;
};

// Exactly one of the three sources is set.
struct DataSettings {
  std::optional<std::filesystem::path> toy_dir;
  std::optional<GenerateSettings> generate;
  struct Cityscapes {
    std::filesystem::path source_images, source_labels;
    std::filesystem::path target_images, target_labels;
    std::filesystem::path eval_images, eval_labels;
  };
  std::optional<Cityscapes> cityscapes;
};

struct RunConfig {
  Method method = Method::kPixDA;
  TrainConfig train{};
  DataSettings data{};
  int k_shot = 1;
  ClassPartition partition{};
  ZeroUnionPolicy zero_union = ZeroUnionPolicy::kExclude;
  std::vector<std::string> class_names;
  std::optional<std::filesystem::path> init_checkpoint;
  bool plot = true;

  void validate() const;
};

struct AblationConfig {
  TrainConfig train{};
  DataSettings data{};
  int k_shot = 1;
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> variants;
  ClassPartition partition{};
  std::vector<int> rare_classes;

  void validate() const;
};

Json to_json(const FocalParams& p);
Json to_json(const SegmenterConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const ToySceneSpec& s);
Json to_json(const ClassPartition& p);
Json to_json(const GenerateSettings& g);
Json to_json(const DataSettings& d);
Json to_json(const RunConfig& c);
Json to_json(const AblationConfig& c);

// Strict parsers: unknown keys and wrong types raise ConfigError with the
// dotted field path. Missing keys keep their defaults.
SegmenterConfig segmenter_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);
ToySceneSpec toy_spec_from_json(const nlohmann::json& j);
GenerateSettings generate_settings_from_json(const nlohmann::json& j);
ClassPartition partition_from_json(const nlohmann::json& j);
RunConfig run_config_from_json(const nlohmann::json& j);
AblationConfig ablation_config_from_json(const nlohmann::json& j);

// Reads and parses a JSON document, raising ConfigError on failure.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace pixda

#endif  // PIXDA_CONFIG_HPP_
