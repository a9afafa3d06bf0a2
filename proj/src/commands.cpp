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
#include "pixda/commands.hpp"

#include <fstream>

#include "pixda/checkpoint.hpp"
#include "pixda/data.hpp"
#include "pixda/trainer.hpp"

namespace pixda {
namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw DataError(path.string() + ": write failed");
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(dir.string() + ": " + ec.message());
}

// Appends one JSON document per line.
class JsonLines {
 public:
  explicit JsonLines(const fs::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw DataError(path.string() + ": cannot open for writing");
  }
  void operator()(const Json& j) { out_ << j.dump() << '\n'; }

 private:
  std::ofstream out_;
};

std::string describe(const MetricsReport& r) {
  auto fmt = [](const std::optional<double>& v) {
    if (!v) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * *v);
    return std::string(buf);
  };
  return "mIoU " + fmt(r.miou) + "  well " + fmt(r.miou_well) + "  under " + fmt(r.miou_under);
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  if (dynamic_cast<const TrainingError*>(&e)) return kExitTraining;
  if (dynamic_cast<const InvalidArgument*>(&e)) return kExitConfig;
  return kExitTraining;
}

std::string version_string() { return std::string("pixda ") + PIXDA_VERSION; }

void cmd_generate(const fs::path& spec_file, const fs::path& out_dir, std::ostream& log) {
  const GenerateSettings g = generate_settings_from_json(read_json_file(spec_file));
  ToyPair pair;
  try {
    pair = generate_toy_pair(g.spec, g.n_source, g.n_target, g.n_cities);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  ToyDataset data{g.spec, g.n_cities, std::move(pair.source), std::move(pair.target)};
  make_dir(out_dir);
  write_toy_dataset(out_dir, data);
  const auto freq = class_frequencies(data.target, g.spec.class_count);
  log << "wrote " << data.source.size() << " source and " << data.target.size()
      << " target images to " << out_dir.string() << "\n";
  log << "target class frequencies:";
  for (double f : freq) log << ' ' << f;
  log << "\n";
}

void cmd_train(const TrainArgs& args, std::ostream& log) {
  Json raw = read_json_file(args.config);
  RunConfig config = run_config_from_json(raw);
  if (args.seed) config.train.seed = *args.seed;
  config.validate();
  const Json resolved = to_json(config);
  if (args.dry_run) {
    log << resolved.dump(2) << "\n";
    return;
  }

  make_dir(args.out_dir);
  make_dir(args.out_dir / "checkpoints");
  Json manifest;
  manifest["command"] = "train";
  manifest["config_path"] = args.config.string();
  manifest["seed"] = config.train.seed;
  manifest["version"] = version_string();
  manifest["output_dir"] = args.out_dir.string();
  manifest["method"] = method_name(config.method);
  manifest["config"] = resolved;
  write_text(args.out_dir / "manifest.json", manifest.dump(2) + "\n");
  write_text(args.out_dir / "config.json", resolved.dump(2) + "\n");

  const Domains domains = load_domains(config.data);
  const Split split = split_for_seed(domains, config.k_shot, config.train.seed);
  log << "source " << domains.source.size() << ", target shots " << split.shots.size()
      << ", eval " << split.eval.size() << "\n";

  RunRecord record;
  JsonLines metrics(args.out_dir / "metrics.jsonl");
  JsonLines selection(args.out_dir / "selection_log.jsonl");
  record.set_iteration_sink([&](const Json& j) { metrics(j); });
  record.set_selection_sink([&](const Json& j) { selection(j); });
  TrainOptions options{&record, args.check_invariants};

  auto save = [&](const Checkpoint& ckpt, const std::string& name) {
    const fs::path path = args.out_dir / "checkpoints" / (name + ".ckpt");
    write_checkpoint(path, ckpt);
    record.add_checkpoint(name);
    log << "checkpoint " << name << "\n";
  };

  std::optional<Checkpoint> pretrained;
  if (config.init_checkpoint) {
    pretrained = read_checkpoint(*config.init_checkpoint);
    const int classes = checkpoint_model_config(*pretrained).class_count;
    if (classes != config.train.model.class_count) {
      throw ConfigError("init_checkpoint has " + std::to_string(classes) + " classes, config has " +
                        std::to_string(config.train.model.class_count));
    }
  } else {
    log << "pretraining on source\n";
    pretrained = pretrain_source(config.train, domains.source, options);
    save(*pretrained, "pretrain");
  }

  Checkpoint final_ckpt;
  switch (config.method) {
    case Method::kPixDA: {
      log << "adversarial training\n";
      const Checkpoint teacher = train_adversarial(config.train, pixda_variant(), *pretrained,
                                                   domains.source, split.shots, options);
      save(teacher, "adversarial");
      log << "fine-tuning with distillation\n";
      final_ckpt = finetune_kd(config.train, teacher, split.shots, options);
      break;
    }
    case Method::kSourceOnly:
      final_ckpt = *pretrained;
      break;
    case Method::kJointTraining:
      final_ckpt = run_baseline(BaselineKind::kJointTraining, config.train, domains.source,
                                split.shots, options, &*pretrained);
      break;
    case Method::kFineTuning:
      final_ckpt = run_baseline(BaselineKind::kFineTuning, config.train, domains.source,
                                split.shots, options, &*pretrained);
      break;
    case Method::kImageWiseAdversarial:
      final_ckpt = run_baseline(BaselineKind::kImageWiseAdversarial, config.train, domains.source,
                                split.shots, options, &*pretrained);
      break;
  }
  save(final_ckpt, "final");

  const MetricsReport report = evaluate(final_ckpt, split.eval, config.partition, config.zero_union);
  Json out = to_json(report);
  out["method"] = method_name(config.method);
  out["seed"] = config.train.seed;
  out["eval_images"] = split.eval.size();
  record.set_metrics(out);
  write_text(args.out_dir / "report.json", out.dump(2) + "\n");
  if (config.plot) write_text(args.out_dir / "iou.svg", render_iou_svg(report, config.class_names));
  log << describe(report) << "\n";
}

AblationReport cmd_ablate(const AblateArgs& args, std::ostream& log) {
  const AblationConfig config = ablation_config_from_json(read_json_file(args.config));
  const Domains domains = load_domains(config.data);
  AblationReport report = run_ablation(config, domains, [&](const std::string& v, std::uint64_t seed, double miou) {
    log << "seed " << seed << "  " << v << "  mIoU " << miou << std::endl;
  });
  log << format_table(report);
  if (args.out) write_text(*args.out, to_json(report).dump(2) + "\n");
  return report;
}

MetricsReport cmd_eval(const EvalArgs& args, std::ostream& log) {
  const Checkpoint ckpt = read_checkpoint(args.checkpoint);
  const int classes = checkpoint_model_config(ckpt).class_count;
  ToyDataset data = read_toy_dataset(args.dataset);
  if (data.spec.class_count != classes) {
    throw DataError("dataset has " + std::to_string(data.spec.class_count) +
                    " classes, checkpoint has " + std::to_string(classes));
  }
  std::vector<LabeledImage> images;
  if (args.split == "target") {
    images = std::move(data.target);
  } else if (args.split == "source") {
    images = std::move(data.source);
  } else {
    throw ConfigError("split: expected 'target' or 'source', got '" + args.split + "'");
  }
  const ClassPartition partition =
      args.partition ? partition_from_json(read_json_file(*args.partition)) : ClassPartition{};
  for (int c : partition.well) {
    if (c < 0 || c >= classes) throw ConfigError("partition.well: class outside [0, C)");
  }
  for (int c : partition.under) {
    if (c < 0 || c >= classes) throw ConfigError("partition.under: class outside [0, C)");
  }
  const MetricsReport report = evaluate(ckpt, images, partition, args.zero_union);
  if (args.out) write_text(*args.out, to_json(report).dump(2) + "\n");
  if (args.plot) write_text(*args.plot, render_iou_svg(report));
  log << describe(report) << "\n";
  return report;
}

}  // namespace pixda
