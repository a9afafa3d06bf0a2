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
#include <iostream>

#include <CLI11.hpp>

#include "pixda/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Few-shot cross-domain segmentation with pixel-wise adversarial alignment"};
  app.set_version_flag("--version", pixda::version_string());
  app.require_subcommand(1);

  std::string spec_file, out_dir;
  auto* generate = app.add_subcommand("generate", "Write a procedural two-domain toy dataset");
  generate->add_option("spec", spec_file, "Generate-settings JSON file")->required()->check(CLI::ExistingFile);
  generate->add_option("out", out_dir, "Output directory")->required();

  pixda::TrainArgs train_args;
  std::string train_config, train_out;
  std::uint64_t seed = 0;
  auto* train = app.add_subcommand("train", "Run the full pipeline or a baseline from a run config");
  train->add_option("config", train_config, "Run config JSON file")->required();
  train->add_option("-o,--out", train_out, "Run directory")->default_val("runs/latest");
  auto* seed_opt = train->add_option("--seed", seed, "Override train.seed");
  train->add_flag("--dry-run", train_args.dry_run, "Validate and print the resolved config");
  train->add_flag("--check-invariants", train_args.check_invariants,
                  "Verify parameter isolation around every update");

  std::string ablate_config, ablate_out;
  auto* ablate = app.add_subcommand("ablate", "Compare adversarial variants over several seeds");
  ablate->add_option("config", ablate_config, "Ablation config JSON file")->required();
  auto* ablate_out_opt = ablate->add_option("-o,--out", ablate_out, "JSON report path");

  pixda::EvalArgs eval_args;
  std::string ckpt, dataset, partition, eval_out, plot, policy = "exclude";
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a toy dataset");
  eval->add_option("checkpoint", ckpt, "Checkpoint file")->required();
  eval->add_option("dataset", dataset, "Toy dataset directory")->required();
  auto* part_opt = eval->add_option("--partition", partition, "Class partition JSON file");
  eval->add_option("--split", eval_args.split, "target or source")->default_val("target");
  auto* eval_out_opt = eval->add_option("-o,--out", eval_out, "JSON report path");
  auto* plot_opt = eval->add_option("--plot", plot, "Per-class IoU SVG path");
  eval->add_option("--zero-union", policy, "exclude or report_zero")->default_val("exclude");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pixda::kExitConfig;
  }

  try {
    if (*generate) {
      pixda::cmd_generate(spec_file, out_dir, std::cout);
    } else if (*train) {
      train_args.config = train_config;
      train_args.out_dir = train_out;
      if (*seed_opt) train_args.seed = seed;
      pixda::cmd_train(train_args, std::cout);
    } else if (*ablate) {
      pixda::AblateArgs args{ablate_config, std::nullopt};
      if (*ablate_out_opt) args.out = ablate_out;
      pixda::cmd_ablate(args, std::cout);
    } else if (*eval) {
      eval_args.checkpoint = ckpt;
      eval_args.dataset = dataset;
      if (*part_opt) eval_args.partition = partition;
      if (*eval_out_opt) eval_args.out = eval_out;
      if (*plot_opt) eval_args.plot = plot;
      eval_args.zero_union = pixda::parse_policy(policy);
      pixda::cmd_eval(eval_args, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pixda::exit_code_for(e);
  }
  return pixda::kExitOk;
}
