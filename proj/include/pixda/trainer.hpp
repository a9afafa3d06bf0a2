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
#ifndef PIXDA_TRAINER_HPP_
#define PIXDA_TRAINER_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pixda/checkpoint.hpp"
#include "pixda/config.hpp"
#include "pixda/data.hpp"
#include "pixda/eval.hpp"
#include "pixda/sample_selection.hpp"

namespace pixda {

// Adversarial term applied to the target batch in the segmenter update.
enum class AdvTerm {
  kNone,
  kImageWise,  // unweighted -log D_g(target)
  kPixelWise,  // per-pixel -log D(target), optionally weighted by S and B
};

struct AdversarialVariant {
  AdvTerm term = AdvTerm::kPixelWise;
  bool use_s = true;
  bool use_b = true;
  bool sample_selection = true;
  bool fda = true;
};

AdversarialVariant pixda_variant();
AdversarialVariant joint_training_variant();

struct PhaseSpan {
  std::string phase;
  long first_iteration = 0;
  long iterations = 0;
};

// Append-only log of one run. Sinks, when set, see every record as it is
// appended.
class RunRecord {
 public:
  using Sink = std::function<void(const Json&)>;

  void set_iteration_sink(Sink sink) { iteration_sink_ = std::move(sink); }
  void set_selection_sink(Sink sink) { selection_sink_ = std::move(sink); }

  void begin_phase(const std::string& phase);
  void end_phase();
  void add_iteration(Json record);
  void add_selection(const SelectionRecord& record);
  void add_checkpoint(const std::string& id);
  void set_metrics(Json metrics);

  const std::vector<PhaseSpan>& phases() const { return phases_; }
  const std::vector<Json>& iterations() const { return iterations_; }
  const std::vector<Json>& selections() const { return selections_; }
  const std::vector<std::string>& checkpoints() const { return checkpoints_; }
  const Json& metrics() const { return metrics_; }
  // Optimizer steps logged under the given phase, summed over its spans.
  long steps_in(const std::string& phase) const;

 private:
  std::vector<PhaseSpan> phases_;
  std::vector<Json> iterations_;
  std::vector<Json> selections_;
  std::vector<std::string> checkpoints_;
  Json metrics_ = Json::object();
  bool open_ = false;
  Sink iteration_sink_;
  Sink selection_sink_;
};

struct TrainOptions {
  RunRecord* record = nullptr;
  // Compares parameter hashes around every update and inspects the segmenter
  // gradient after the image-discriminator step; throws TrainingError on a
  // violation.
  bool check_invariants = false;
};

// Focal-loss training of a freshly initialized segmenter on the source set.
Checkpoint pretrain_source(const TrainConfig& config,
                           std::span<const LabeledImage> source,
                           const TrainOptions& options = {});

// Alternating updates: pixel discriminator, image discriminator, segmenter.
// Sample selection, when enabled, prunes the source set after each epoch.
Checkpoint train_adversarial(const TrainConfig& config,
                             const AdversarialVariant& variant,
                             const Checkpoint& init,
                             std::span<const LabeledImage> source,
                             std::span<const LabeledImage> target_kshot,
                             const TrainOptions& options = {});

// Student initialized from the frozen teacher, then exactly kd_iterations
// steps of focal + lambda_kd * distillation on the target shots.
Checkpoint finetune_kd(const TrainConfig& config, const Checkpoint& teacher,
                       std::span<const LabeledImage> target_kshot,
                       const TrainOptions& options = {});

enum class BaselineKind {
  kSourceOnly,
  kJointTraining,
  kFineTuning,
  kImageWiseAdversarial,
};

std::string baseline_name(BaselineKind kind);
// Throws InvalidArgument listing the valid kinds.
BaselineKind parse_baseline(const std::string& name);

// pretrained, when given, replaces the source pretraining step.
Checkpoint run_baseline(BaselineKind kind, const TrainConfig& config,
                        std::span<const LabeledImage> source,
                        std::span<const LabeledImage> target_kshot,
                        const TrainOptions& options = {},
                        const Checkpoint* pretrained = nullptr);

// Argmax predictions, upsampled to label resolution, accumulated over the set.
MetricsReport evaluate(Segmenter& model, std::span<const LabeledImage> images,
                       const ClassPartition& partition,
                       ZeroUnionPolicy policy = ZeroUnionPolicy::kExclude);
MetricsReport evaluate(const Checkpoint& ckpt, std::span<const LabeledImage> images,
                       const ClassPartition& partition,
                       ZeroUnionPolicy policy = ZeroUnionPolicy::kExclude);

Json to_json(const MetricsReport& report);

}  // namespace pixda

#endif  // PIXDA_TRAINER_HPP_
