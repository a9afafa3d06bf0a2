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
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pixda/losses.hpp"
#include "pixda/trainer.hpp"
#include "testing.hpp"

namespace pixda {
namespace {

ToySceneSpec small_spec(std::uint64_t seed) {
  ToySceneSpec spec;
  spec.seed = seed;
  spec.colour_cast = 0.25;
  spec.image_style_jitter = 0.3;
  spec.domain_shift.noise_sigma = 0.03;
  return spec;
}

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig c;
  c.seed = seed;
  c.model.base_channels = 8;
  c.model.depth = 2;
  c.batch_size = 2;
  c.pretrain.epochs = 1;
  c.pretrain.lr = 0.05;
  c.seg_optimizer.lr = 0.01;
  c.disc_optimizer.lr = 1e-4;
  c.max_adv_epochs = 2;
  c.iterations_per_epoch = 3;
  c.kd_iterations = 4;
  c.finetune_lr = 0.005;
  return c;
}

struct Split {
  std::vector<LabeledImage> source, shots, held_out;
};

Split small_split(std::uint64_t seed, int n_source = 12, const ToySceneSpec* spec = nullptr) {
  const ToyPair pair = generate_toy_pair(spec ? *spec : small_spec(seed), n_source, 12, 3);
  Split s;
  s.source = pair.source;
  s.shots = kshot_select(pair.target, 1, seed);
  s.held_out = exclude(pair.target, s.shots);
  return s;
}

double mean_focal(const Checkpoint& ckpt, std::span<const LabeledImage> images, const FocalParams& focal) {
  Segmenter seg = restore_segmenter(ckpt);
  double total = 0.0;
  for (const auto& item : images) {
    const Tensor logits = segment(seg, item.image);
    const Tensor batch({1, logits.dim(0), logits.dim(1), logits.dim(2)}, logits.storage());
    total += focal_loss(prob_map_of(softmax_channels(batch), 0), item.labels, focal);
  }
  return total / static_cast<double>(images.size());
}

// Mean per-pixel KL(teacher || student) at unit temperature.
double mean_kl(const Checkpoint& teacher, const Checkpoint& student, std::span<const LabeledImage> images) {
  Segmenter t = restore_segmenter(teacher);
  Segmenter s = restore_segmenter(student);
  double total = 0.0;
  long pixels = 0;
  for (const auto& item : images) {
    const Tensor lt = segment(t, item.image), ls = segment(s, item.image);
    const int c = lt.dim(0), hw = lt.dim(1) * lt.dim(2);
    for (int i = 0; i < hw; ++i, ++pixels) {
      double mt = -1e300, ms = -1e300;
      for (int k = 0; k < c; ++k) {
        mt = std::max(mt, double{lt[static_cast<std::size_t>(k * hw + i)]});
        ms = std::max(ms, double{ls[static_cast<std::size_t>(k * hw + i)]});
      }
      double zt = 0.0, zs = 0.0;
      for (int k = 0; k < c; ++k) {
        zt += std::exp(lt[static_cast<std::size_t>(k * hw + i)] - mt);
        zs += std::exp(ls[static_cast<std::size_t>(k * hw + i)] - ms);
      }
      for (int k = 0; k < c; ++k) {
        const double at = lt[static_cast<std::size_t>(k * hw + i)] - mt - std::log(zt);
        const double as = ls[static_cast<std::size_t>(k * hw + i)] - ms - std::log(zs);
        total += std::exp(at) * (at - as);
      }
    }
  }
  return total / static_cast<double>(pixels);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double miou_of(const Checkpoint& ckpt, std::span<const LabeledImage> images) {
  return 100.0 * evaluate(ckpt, images, ClassPartition{{0, 1}, {2}}).miou.value();
}

TEST(PretrainTest, OneEpochLowersTheLossOnItsImages) {
  std::vector<double> gains;
  for (std::uint64_t seed : {1, 2, 3}) {
    const Split s = small_split(seed, 4);
    TrainConfig config = small_config(seed);
    config.pretrain.lr = 0.0;
    const Checkpoint before = pretrain_source(config, s.source);
    config.pretrain.lr = 0.05;
    const Checkpoint after = pretrain_source(config, s.source);
    gains.push_back(mean_focal(before, s.source, config.focal) - mean_focal(after, s.source, config.focal));
  }
  EXPECT_GT(median(gains), 0.0);
}

TEST(PretrainTest, ZeroLearningRateLeavesParametersUnchanged) {
  const Split s = small_split(4, 4);
  TrainConfig config = small_config(4);
  config.pretrain.lr = 0.0;
  config.seg_optimizer.weight_decay = 0.0;
  const Checkpoint a = pretrain_source(config, s.source);
  config.pretrain.epochs = 3;
  const Checkpoint b = pretrain_source(config, s.source);
  EXPECT_EQ(checkpoint_hash(a), checkpoint_hash(b));
}

TEST(PretrainTest, SameSeedGivesIdenticalCheckpoints) {
  const Split s = small_split(5, 6);
  const TrainConfig config = small_config(5);
  EXPECT_EQ(checkpoint_hash(pretrain_source(config, s.source)), checkpoint_hash(pretrain_source(config, s.source)));
  TrainConfig other = config;
  other.seed = 6;
  EXPECT_NE(checkpoint_hash(pretrain_source(config, s.source)), checkpoint_hash(pretrain_source(other, s.source)));
}

TEST(PretrainTest, RejectsEmptySourceAndForeignLabels) {
  const TrainConfig config = small_config(0);
  EXPECT_THROW(pretrain_source(config, {}), DataError);
  Split s = small_split(0, 2);
  s.source[1].labels.values.flat()[0] = 7;
  EXPECT_THROW(pretrain_source(config, s.source), DataError);
}

TEST(PretrainTest, RecordsOneEntryPerStepWithDecayingRate) {
  const Split s = small_split(7, 6);
  TrainConfig config = small_config(7);
  config.pretrain.epochs = 2;
  RunRecord record;
  pretrain_source(config, s.source, {&record, true});
  ASSERT_EQ(record.steps_in("pretrain"), 6);
  ASSERT_EQ(record.phases().size(), 1u);
  EXPECT_EQ(record.phases()[0].iterations, 6);
  for (std::size_t i = 1; i < record.iterations().size(); ++i) {
    EXPECT_LT(record.iterations()[i]["lr"].get<double>(), record.iterations()[i - 1]["lr"].get<double>());
  }
}

class AdversarialTest : public ::testing::Test {
 protected:
  void SetUp() override {
    split_ = small_split(11);
    config_ = small_config(11);
    pretrained_ = pretrain_source(config_, split_.source);
  }
  Split split_;
  TrainConfig config_;
  Checkpoint pretrained_;
};

TEST_F(AdversarialTest, ZeroLambdaMatchesJointTrainingWithTheSameSubset) {
  config_.lambda_adv = 0.0;
  AdversarialVariant pixel = pixda_variant();
  pixel.sample_selection = false;
  pixel.fda = false;
  const Checkpoint a = train_adversarial(config_, pixel, pretrained_, split_.source, split_.shots);
  const Checkpoint b = train_adversarial(config_, joint_training_variant(), pretrained_, split_.source, split_.shots);
  EXPECT_EQ(checkpoint_hash(a), checkpoint_hash(b));
}

TEST_F(AdversarialTest, AdversarialTermChangesTheSegmenter) {
  config_.lambda_adv = 1.0;
  AdversarialVariant pixel = pixda_variant();
  pixel.sample_selection = false;
  const Checkpoint a = train_adversarial(config_, pixel, pretrained_, split_.source, split_.shots);
  config_.lambda_adv = 0.0;
  const Checkpoint b = train_adversarial(config_, pixel, pretrained_, split_.source, split_.shots);
  EXPECT_NE(checkpoint_hash(a), checkpoint_hash(b));
}

TEST_F(AdversarialTest, InvariantsHoldForEveryVariant) {
  std::vector<AdversarialVariant> variants{pixda_variant(), joint_training_variant()};
  variants.push_back({AdvTerm::kImageWise, false, false, false, true});
  variants.push_back({AdvTerm::kPixelWise, false, true, false, true});
  variants.push_back({AdvTerm::kPixelWise, true, false, true, false});
  for (const auto& v : variants) {
    RunRecord record;
    EXPECT_NO_THROW(train_adversarial(config_, v, pretrained_, split_.source, split_.shots, {&record, true}));
    const long steps = record.steps_in("adversarial");
    EXPECT_TRUE(steps == 3 || steps == 6) << steps;
    for (std::size_t i = 1; i < record.iterations().size(); ++i) {
      EXPECT_LE(record.iterations()[i]["seg_lr"].get<double>(), record.iterations()[i - 1]["seg_lr"].get<double>());
      EXPECT_LE(record.iterations()[i]["disc_lr"].get<double>(), record.iterations()[i - 1]["disc_lr"].get<double>());
    }
  }
}

TEST_F(AdversarialTest, SelectionShrinksTheRetainedSetEachEpoch) {
  config_.max_adv_epochs = 3;
  RunRecord record;
  train_adversarial(config_, pixda_variant(), pretrained_, split_.source, split_.shots, {&record, false});
  ASSERT_FALSE(record.selections().empty());
  double delta = 0.0;
  std::size_t retained = split_.source.size();
  for (const auto& sel : record.selections()) {
    EXPECT_GT(sel["delta"].get<double>(), delta);
    delta = sel["delta"].get<double>();
    EXPECT_EQ(sel["retained"].get<std::size_t>() + sel["dropped"].size(), retained);
    retained = sel["retained"].get<std::size_t>();
  }
}

TEST_F(AdversarialTest, SameSeedIsDeterministic) {
  const auto a = train_adversarial(config_, pixda_variant(), pretrained_, split_.source, split_.shots);
  const auto b = train_adversarial(config_, pixda_variant(), pretrained_, split_.source, split_.shots);
  EXPECT_EQ(checkpoint_hash(a), checkpoint_hash(b));
}

TEST_F(AdversarialTest, OneClassTargetRunsToCompletion) {
  std::vector<LabeledImage> shots = split_.shots;
  for (auto& item : shots) std::fill(item.labels.values.flat().begin(), item.labels.values.flat().end(), 0);
  RunRecord record;
  const Checkpoint out = train_adversarial(config_, pixda_variant(), pretrained_, split_.source, shots, {&record, true});
  EXPECT_GE(record.steps_in("adversarial"), 3);
  for (const auto& it : record.iterations()) EXPECT_TRUE(std::isfinite(it["total"].get<double>()));
  EXPECT_TRUE(miou_of(out, split_.held_out) >= 0.0);
}

TEST_F(AdversarialTest, RejectsEmptySetsAndMismatchedCheckpoints) {
  EXPECT_THROW(train_adversarial(config_, pixda_variant(), pretrained_, split_.source, {}), DataError);
  EXPECT_THROW(train_adversarial(config_, pixda_variant(), pretrained_, {}, split_.shots), DataError);
  TrainConfig other = config_;
  other.model.class_count = 4;
  EXPECT_THROW(train_adversarial(other, pixda_variant(), pretrained_, split_.source, split_.shots), ConfigError);
}

TEST_F(AdversarialTest, ZeroKdWeightEqualsNaiveFineTuning) {
  config_.lambda_kd = 0.0;
  const Checkpoint kd = finetune_kd(config_, pretrained_, split_.shots);
  config_.lambda_kd = 0.5;
  const Checkpoint ft = run_baseline(BaselineKind::kFineTuning, config_, split_.source, split_.shots, {}, &pretrained_);
  EXPECT_EQ(checkpoint_hash(kd), checkpoint_hash(ft));
}

TEST_F(AdversarialTest, DistillationKeepsTheStudentCloseToTheTeacher) {
  config_.kd_iterations = 20;
  config_.finetune_lr = 0.05;
  config_.lambda_kd = 0.0;
  const double free_drift = mean_kl(pretrained_, finetune_kd(config_, pretrained_, split_.shots), split_.held_out);
  config_.lambda_kd = 1e4;
  config_.finetune_lr = 1e-6;
  const double held_drift = mean_kl(pretrained_, finetune_kd(config_, pretrained_, split_.shots), split_.held_out);
  EXPECT_GT(free_drift, 0.0);
  EXPECT_LE(held_drift, free_drift);
}

TEST_F(AdversarialTest, KdRunsExactlyTheConfiguredSteps) {
  config_.kd_iterations = 1;
  RunRecord record;
  finetune_kd(config_, pretrained_, split_.shots, {&record, false});
  EXPECT_EQ(record.steps_in("finetune"), 1);
  config_.kd_iterations = 0;
  EXPECT_THROW(finetune_kd(config_, pretrained_, split_.shots), ConfigError);
}

TEST_F(AdversarialTest, BaselinesDispatch) {
  EXPECT_EQ(checkpoint_hash(run_baseline(BaselineKind::kSourceOnly, config_, split_.source, split_.shots)),
            checkpoint_hash(pretrained_));
  const auto jt = run_baseline(BaselineKind::kJointTraining, config_, split_.source, split_.shots, {}, &pretrained_);
  EXPECT_EQ(checkpoint_hash(jt), checkpoint_hash(train_adversarial(config_, joint_training_variant(), pretrained_,
                                                                    split_.source, split_.shots)));
  EXPECT_NO_THROW(run_baseline(BaselineKind::kImageWiseAdversarial, config_, split_.source, split_.shots, {}, &pretrained_));
}

TEST(BaselineTest, NamesRoundTripAndUnknownKindsListTheValidOnes) {
  for (auto k : {BaselineKind::kSourceOnly, BaselineKind::kJointTraining, BaselineKind::kFineTuning,
                 BaselineKind::kImageWiseAdversarial}) {
    EXPECT_EQ(parse_baseline(baseline_name(k)), k);
  }
  try {
    parse_baseline("dann");
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("dann"), std::string::npos);
    EXPECT_NE(msg.find("joint_training"), std::string::npos);
  }
}

TEST(BaselineTest, JointTrainingOnMatchedDomainsTracksSourceOnly) {
  std::vector<double> gaps;
  for (std::uint64_t seed : {21, 22, 23}) {
    ToySceneSpec spec = small_spec(seed);
    spec.colour_cast = 0.0;
    spec.image_style_jitter = 0.0;
    spec.city_style_jitter = 0.0;
    spec.domain_shift = {};
    const Split s = small_split(seed, 24, &spec);
    TrainConfig config = small_config(seed);
    config.pretrain.epochs = 3;
    const Checkpoint so = pretrain_source(config, s.source);
    const Checkpoint jt = run_baseline(BaselineKind::kJointTraining, config, s.source, s.shots, {}, &so);
    gaps.push_back(std::abs(miou_of(jt, s.held_out) - miou_of(so, s.held_out)));
  }
  EXPECT_LE(median(gaps), 5.0);
}

TEST(PipelineTest, AdversarialPhaseIsAtLeastJointTrainingUnderColourShift) {
  std::vector<double> gaps;
  for (std::uint64_t seed : {31, 32, 33}) {
    const Split s = small_split(seed, 40);
    TrainConfig config = small_config(seed);
    config.pretrain.epochs = 3;
    config.max_adv_epochs = 1;
    config.iterations_per_epoch = 40;
    const Checkpoint so = pretrain_source(config, s.source);
    const Checkpoint jt = run_baseline(BaselineKind::kJointTraining, config, s.source, s.shots, {}, &so);
    const Checkpoint adv = train_adversarial(config, pixda_variant(), so, s.source, s.shots);
    gaps.push_back(miou_of(adv, s.held_out) - miou_of(jt, s.held_out));
  }
  EXPECT_GE(median(gaps), 0.0);
}

}  // namespace
}  // namespace pixda
