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
#ifndef PIXDA_COMMANDS_HPP_
#define PIXDA_COMMANDS_HPP_

// Command implementations behind the pixda executable. Each throws the
// library's typed errors; exit_code_for() maps them to process exit codes.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "pixda/ablation.hpp"
#include "pixda/config.hpp"
#include "pixda/eval.hpp"

namespace pixda {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitTraining = 4;

int exit_code_for(const std::exception& e);

std::string version_string();

// Writes the toy dataset described by a generate-settings file.
void cmd_generate(const std::filesystem::path& spec_file, const std::filesystem::path& out_dir,
                  std::ostream& log);

struct TrainArgs {
  std::filesystem::path config;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
  bool check_invariants = false;
};

// Run directory:
//   manifest.json        command, config path, seed, version, output dir
//   config.json          fully resolved configuration
//   checkpoints/*.ckpt   one per completed phase, final.ckpt last
//   metrics.jsonl        one record per optimizer step
//   selection_log.jsonl  one record per sample-selection epoch
//   report.json          final target metrics
//   iou.svg              per-class IoU chart, when plot is enabled
void cmd_train(const TrainArgs& args, std::ostream& log);

struct AblateArgs {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  // JSON report
};
AblationReport cmd_ablate(const AblateArgs& args, std::ostream& log);

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path dataset;  // toy dataset directory
  std::optional<std::filesystem::path> partition;
  std::string split = "target";  // "target" or "source"
  std::optional<std::filesystem::path> out;   // JSON report
  std::optional<std::filesystem::path> plot;  // SVG chart
  ZeroUnionPolicy zero_union = ZeroUnionPolicy::kExclude;
};
MetricsReport cmd_eval(const EvalArgs& args, std::ostream& log);

}  // namespace pixda

#endif  // PIXDA_COMMANDS_HPP_
