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
#include "pixda/trainer.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "pixda/losses.hpp"
#include "pixda/optim.hpp"
#include "pixda/random.hpp"
#include "pixda/style_transfer.hpp"

namespace pixda {
namespace {

// Independent random streams per purpose.
enum Stream : std::uint64_t {
  kSegInit = 1,
  kDiscInit = 2,
  kPretrainOrder = 3,
  kSourceOrder = 4,
  kTargetDraw = 5,
  kStyleDraw = 6,
  kFinetuneDraw = 7,
  kSelectionStyle = 8,
};

Rng stream(const TrainConfig& config, Stream s) { return Rng(derive_seed(config.seed, s)); }

// Images n0..n0+count of an (N, ...) batch.
Tensor slice(const Tensor& batch, int n0, int count) {
  std::vector<int> shape = batch.shape();
  const std::size_t per = batch.size() / static_cast<std::size_t>(shape[0]);
  shape[0] = count;
  Tensor out(shape);
  std::copy_n(batch.data() + per * static_cast<std::size_t>(n0), per * static_cast<std::size_t>(count),
              out.data());
  return out;
}

void write_into(Tensor& batch, int n, const Array<double>& values, double scale) {
  auto dst = batch.slab(n);
  const auto src = values.flat();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += static_cast<float>(scale * src[i]);
}

double sigmoid_d(float z) { return 1.0 / (1.0 + std::exp(-static_cast<double>(z))); }

// Sigmoid applied to a (H, W) logit map.
RealMap sigmoid_map(const Tensor& logits, int n) {
  RealMap m = map_of(logits, n);
  for (double& v : m.flat()) v = 1.0 / (1.0 + std::exp(-v));
  return m;
}

// d loss / d logit from d loss / d sigmoid(logit).
void chain_sigmoid(RealMap& grad, const RealMap& d) {
  auto g = grad.flat();
  const auto p = d.flat();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= p[i] * (1.0 - p[i]);
}

LabelMap labels_at(const LabelMap& labels, int h, int w) {
  if (labels.height() == h && labels.width() == w) return labels;
  return resize_nearest(labels, h, w);
}

Tensor batch_of(std::span<const Tensor* const> images) {
  for (const Tensor* t : images) {
    if (t->shape() != images.front()->shape()) {
      throw DataError("images in one batch must share a size: " + t->shape_string() + " vs " +
                      images.front()->shape_string());
    }
  }
  return stack(images);
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw TrainingError(std::string("non-finite ") + what);
}

void check_same(std::uint64_t before, std::uint64_t after, const char* what) {
  if (before != after) throw TrainingError(std::string("invariant violated: ") + what);
}

// Asserts lr(iter) is monotone non-increasing.
class LrMonitor {
 public:
  explicit LrMonitor(const char* what) : what_(what) {}
  void observe(double lr) {
    if (lr > last_) throw TrainingError(std::string(what_) + " learning rate increased");
    last_ = lr;
  }

 private:
  const char* what_;
  double last_ = INFINITY;
};

void check_classes(const TrainConfig& config, std::span<const LabeledImage> images) {
  for (const auto& item : images) {
    try {
      item.labels.check_classes(config.model.class_count);
    } catch (const InvalidArgument& e) {
      throw DataError(item.id + ": " + e.what());
    }
  }
}

Segmenter restore_checked(const Checkpoint& ckpt, const TrainConfig& config) {
  Segmenter model = restore_segmenter(ckpt);
  if (model.config().class_count != config.model.class_count) {
    throw ConfigError("checkpoint has " + std::to_string(model.config().class_count) +
                      " classes, config has " + std::to_string(config.model.class_count));
  }
  return model;
}

// Mean focal loss over a batch and its gradient w.r.t. the probabilities,
// scaled by 1/count and written into grad[offset..offset+count).
double focal_batch(const Tensor& probs, int offset, std::span<const LabelMap> labels,
                   const FocalParams& focal, Tensor& grad) {
  const int count = static_cast<int>(labels.size());
  double total = 0.0;
  for (int i = 0; i < count; ++i) {
    const ProbMap p = prob_map_of(probs, offset + i);
    auto g = focal_loss_grad(p, labels[static_cast<std::size_t>(i)], focal);
    total += g.value;
    write_into(grad, offset + i, g.grad.values, 1.0 / count);
  }
  return total / count;
}

std::vector<LabelMap> output_labels(std::span<const LabeledImage* const> items, int h, int w) {
  std::vector<LabelMap> out;
  out.reserve(items.size());
  for (const LabeledImage* item : items) out.push_back(labels_at(item->labels, h, w));
  return out;
}

}  // namespace

AdversarialVariant pixda_variant() { return {}; }

AdversarialVariant joint_training_variant() {
  return {AdvTerm::kNone, false, false, false, false};
}

void RunRecord::begin_phase(const std::string& phase) {
  if (open_) end_phase();
  phases_.push_back({phase, static_cast<long>(iterations_.size()), 0});
  open_ = true;
}

void RunRecord::end_phase() {
  if (!open_) return;
  phases_.back().iterations = static_cast<long>(iterations_.size()) - phases_.back().first_iteration;
  open_ = false;
}

void RunRecord::add_iteration(Json record) {
  if (open_) record["phase"] = phases_.back().phase;
  iterations_.push_back(record);
  if (iteration_sink_) iteration_sink_(iterations_.back());
}

void RunRecord::add_selection(const SelectionRecord& r) {
  Json j;
  j["epoch"] = r.epoch;
  j["delta"] = r.delta;
  j["retained"] = r.retained;
  j["dropped"] = r.dropped;
  selections_.push_back(j);
  if (selection_sink_) selection_sink_(selections_.back());
}

void RunRecord::add_checkpoint(const std::string& id) { checkpoints_.push_back(id); }

void RunRecord::set_metrics(Json metrics) { metrics_ = std::move(metrics); }

long RunRecord::steps_in(const std::string& phase) const {
  long n = 0;
  for (const auto& r : iterations_) {
    if (r.contains("phase") && r["phase"] == phase) ++n;
  }
  return n;
}

Checkpoint pretrain_source(const TrainConfig& config, std::span<const LabeledImage> source,
                           const TrainOptions& options) {
  config.validate();
  if (source.empty()) throw DataError("pretrain_source: empty source set");
  check_classes(config, source);

  Segmenter seg(config.model);
  Rng init = stream(config, kSegInit);
  seg.initialize(init);
  auto params = seg.parameters();
  SgdSettings settings = config.seg_optimizer;
  Sgd opt(params, settings);
  Rng order_rng = stream(config, kPretrainOrder);
  RunRecord* record = options.record;
  if (record) record->begin_phase("pretrain");

  const int n = static_cast<int>(source.size());
  const int b = std::min(config.batch_size, n);
  const long per_epoch = (n + b - 1) / b;
  const long max_iter = per_epoch * config.pretrain.epochs;
  LrMonitor monitor("pretrain");
  long iter = 0;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int epoch = 0; epoch < config.pretrain.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    shuffle(order.begin(), order.end(), order_rng);
    for (int start = 0; start < n; start += b, ++iter) {
      const int count = std::min(b, n - start);
      std::vector<const Tensor*> images;
      std::vector<const LabeledImage*> items;
      for (int i = 0; i < count; ++i) {
        items.push_back(&source[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])]);
        images.push_back(&items.back()->image);
      }
      const double lr = poly_lr(config.pretrain.lr, iter, max_iter, settings.poly_power);
      monitor.observe(lr);
      zero_grad(params);
      const Tensor logits = seg.forward(batch_of(images));
      const Tensor probs = softmax_channels(logits);
      const auto labels = output_labels(items, probs.dim(2), probs.dim(3));
      Tensor grad(probs.shape());
      const double loss = focal_batch(probs, 0, labels, config.focal, grad);
      require_finite(loss, "pretrain loss");
      seg.backward(softmax_channels_backward(probs, grad));
      opt.step(lr);
      if (record) record->add_iteration({{"iteration", iter}, {"epoch", epoch}, {"lr", lr}, {"focal", loss}});
    }
  }
  if (record) record->end_phase();
  return snapshot(seg, {{"phase", "pretrain"}}, config.seed);
}

Checkpoint train_adversarial(const TrainConfig& config, const AdversarialVariant& variant,
                             const Checkpoint& init, std::span<const LabeledImage> source,
                             std::span<const LabeledImage> target_kshot,
                             const TrainOptions& options) {
  config.validate();
  if (target_kshot.empty()) throw DataError("train_adversarial: empty target set");
  if (source.empty()) throw DataError("train_adversarial: empty source set");
  check_classes(config, source);
  check_classes(config, target_kshot);

  const int classes = config.model.class_count;
  Segmenter seg = restore_checked(init, config);
  PixelDiscriminator dp(classes);
  ImageDiscriminator dg(classes);
  {
    Rng rng = stream(config, kDiscInit);
    dp.initialize(rng);
    dg.initialize(rng);
  }
  auto seg_params = seg.parameters();
  auto dp_params = dp.parameters();
  auto dg_params = dg.parameters();
  Sgd seg_opt(seg_params, config.seg_optimizer);
  Adam dp_opt(dp_params, config.disc_optimizer);
  Adam dg_opt(dg_params, config.disc_optimizer);

  const bool use_dp = variant.term == AdvTerm::kPixelWise;
  const bool use_dg = variant.term == AdvTerm::kImageWise || variant.sample_selection;
  const bool adversarial = variant.term != AdvTerm::kNone && config.lambda_adv != 0.0;
  const FdaParams fda{config.fda_beta};

  std::map<std::string, std::size_t> index_of;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!index_of.emplace(source[i].id, i).second) {
      throw DataError("duplicate source id " + source[i].id);
    }
    ids.push_back(source[i].id);
  }
  SelectionState selection = SelectionState::initial(ids, config.delta0, config.delta_max);

  Rng order_rng = stream(config, kSourceOrder);
  Rng target_rng = stream(config, kTargetDraw);
  Rng style_rng = stream(config, kStyleDraw);
  Rng score_rng = stream(config, kSelectionStyle);

  const int b = config.batch_size;
  const auto n_tgt = static_cast<std::uint64_t>(target_kshot.size());
  auto iterations_for = [&](std::size_t retained) {
    if (config.iterations_per_epoch > 0) return static_cast<long>(config.iterations_per_epoch);
    return static_cast<long>((retained + static_cast<std::size_t>(b) - 1) / static_cast<std::size_t>(b));
  };
  const long max_iter = static_cast<long>(config.max_adv_epochs) * iterations_for(source.size());

  auto translated = [&](const LabeledImage& src, Rng& rng) {
    if (!variant.fda) return src.image;
    const auto& style = target_kshot[uniform_index(rng, n_tgt)].image;
    return fda_translate(src.image, style, fda);
  };

  RunRecord* record = options.record;
  if (record) record->begin_phase("adversarial");
  LrMonitor seg_monitor("segmenter"), disc_monitor("discriminator");
  long iter = 0;

  for (int epoch = 0; epoch < config.max_adv_epochs && !selection.exhausted(); ++epoch) {
    std::vector<std::size_t> order;
    for (const auto& id : selection.retained_ids) order.push_back(index_of.at(id));
    shuffle(order.begin(), order.end(), order_rng);
    std::size_t cursor = 0;
    const long epoch_iters = iterations_for(order.size());

    for (long step = 0; step < epoch_iters; ++step, ++iter) {
      std::vector<Tensor> src_images;
      std::vector<const LabeledImage*> items;
      for (int i = 0; i < b; ++i) {
        if (cursor == order.size()) {
          shuffle(order.begin(), order.end(), order_rng);
          cursor = 0;
        }
        items.push_back(&source[order[cursor++]]);
        src_images.push_back(translated(*items.back(), style_rng));
      }
      for (int i = 0; i < b; ++i) items.push_back(&target_kshot[uniform_index(target_rng, n_tgt)]);
      std::vector<const Tensor*> images;
      for (const auto& t : src_images) images.push_back(&t);
      for (int i = b; i < 2 * b; ++i) images.push_back(&items[static_cast<std::size_t>(i)]->image);

      const double seg_lr = poly_lr(config.seg_optimizer.lr, iter, max_iter, config.seg_optimizer.poly_power);
      const double disc_lr = poly_lr(config.disc_optimizer.lr, iter, max_iter, config.disc_optimizer.poly_power);
      seg_monitor.observe(seg_lr);
      disc_monitor.observe(disc_lr);

      zero_grad(seg_params);
      const Tensor logits = seg.forward(batch_of(images));
      const Tensor probs = softmax_channels(logits);
      const int h = probs.dim(2), w = probs.dim(3);
      const auto labels = output_labels(items, h, w);
      Json rec{{"iteration", iter}, {"epoch", epoch}, {"seg_lr", seg_lr}, {"disc_lr", disc_lr}};

      // (1) pixel discriminator, source = 1, target = 0.
      if (use_dp) {
        const std::uint64_t seg_before = options.check_invariants ? parameter_hash(seg_params) : 0;
        zero_grad(dp_params);
        const Tensor z = dp.forward(probs);
        Tensor gz(z.shape());
        double loss = 0.0;
        for (int i = 0; i < b; ++i) {
          const RealMap ds = sigmoid_map(z, i), dt = sigmoid_map(z, b + i);
          auto g = pixel_discriminator_loss_grad(ds, dt);
          loss += g.value / b;
          chain_sigmoid(g.d_src, ds);
          chain_sigmoid(g.d_tgt, dt);
          write_into(gz, i, g.d_src, 1.0 / b);
          write_into(gz, b + i, g.d_tgt, 1.0 / b);
        }
        require_finite(loss, "pixel discriminator loss");
        dp.backward(gz);
        dp_opt.step(disc_lr);
        rec["d_pixel"] = loss;
        if (options.check_invariants) {
          check_same(seg_before, parameter_hash(seg_params), "segmenter changed in pixel discriminator step");
        }
      }

      // (2) image discriminator on detached probabilities.
      if (use_dg) {
        const std::uint64_t seg_before = options.check_invariants ? parameter_hash(seg_params) : 0;
        zero_grad(dg_params);
        const Tensor z = dg.forward(probs);
        Tensor gz(z.shape());
        double loss = 0.0;
        for (int i = 0; i < b; ++i) {
          const double ds = sigmoid_d(z[static_cast<std::size_t>(i)]);
          const double dt = sigmoid_d(z[static_cast<std::size_t>(b + i)]);
          const auto g = global_discriminator_loss_grad(ds, dt);
          loss += g.value / b;
          gz[static_cast<std::size_t>(i)] = static_cast<float>(g.d_src * ds * (1.0 - ds) / b);
          gz[static_cast<std::size_t>(b + i)] = static_cast<float>(g.d_tgt * dt * (1.0 - dt) / b);
        }
        require_finite(loss, "image discriminator loss");
        dg.backward(gz);
        dg_opt.step(disc_lr);
        rec["d_image"] = loss;
        if (options.check_invariants) {
          if (!all_grads_zero(seg_params)) throw TrainingError("invariant violated: image discriminator loss reached the segmenter");
          check_same(seg_before, parameter_hash(seg_params), "segmenter changed in image discriminator step");
        }
      }

      // (3) segmenter with both discriminators frozen.
      const std::uint64_t dp_before = options.check_invariants ? parameter_hash(dp_params) : 0;
      const std::uint64_t dg_before = options.check_invariants ? parameter_hash(dg_params) : 0;
      Tensor grad(probs.shape());
      const std::span<const LabelMap> all_labels(labels);
      const double src_focal = focal_batch(probs, 0, all_labels.first(static_cast<std::size_t>(b)), config.focal, grad);
      const double tgt_focal = focal_batch(probs, b, all_labels.subspan(static_cast<std::size_t>(b)), config.focal, grad);
      double adv = 0.0;
      if (adversarial) {
        const Tensor tgt_probs = slice(probs, b, b);
        const double scale = config.lambda_adv / b;
        if (variant.term == AdvTerm::kPixelWise) {
          const Tensor z = dp.forward(tgt_probs);
          Tensor gz(z.shape());
          for (int i = 0; i < b; ++i) {
            const RealMap d = sigmoid_map(z, i);
            const LabelMap& y = labels[static_cast<std::size_t>(b + i)];
            const ProbMap p = prob_map_of(probs, b + i);
            WeightMaps weights{variant.use_s ? s_map(p, y) : RealMap({h, w}, 1.0),
                               variant.use_b ? b_map(y) : RealMap({h, w}, 1.0)};
            auto g = pixadv_loss_grad(d, weights);
            adv += g.value / b;
            chain_sigmoid(g.grad, d);
            write_into(gz, i, g.grad, scale);
          }
          const Tensor gin = dp.backward(gz, false);
          for (int i = 0; i < b; ++i) {
            auto dst = grad.slab(b + i);
            const auto src = std::span<const float>(gin.data() + dst.size() * static_cast<std::size_t>(i), dst.size());
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
          }
          zero_grad(dp_params);
        } else {
          const Tensor z = dg.forward(tgt_probs);
          Tensor gz(z.shape());
          for (int i = 0; i < b; ++i) {
            RealMap d({1, 1}, sigmoid_d(z[static_cast<std::size_t>(i)]));
            const WeightMaps unit{RealMap({1, 1}, 1.0), RealMap({1, 1}, 1.0)};
            auto g = pixadv_loss_grad(d, unit);
            adv += g.value / b;
            chain_sigmoid(g.grad, d);
            gz[static_cast<std::size_t>(i)] = static_cast<float>(scale * g.grad.flat()[0]);
          }
          const Tensor gin = dg.backward(gz, false);
          auto dst = grad.flat().subspan(gin.size());
          for (std::size_t k = 0; k < gin.size(); ++k) dst[k] += gin.flat()[k];
          zero_grad(dg_params);
        }
      }
      const double total = src_focal + tgt_focal + config.lambda_adv * adv;
      require_finite(total, "segmenter loss");
      seg.backward(softmax_channels_backward(probs, grad));
      seg_opt.step(seg_lr);
      if (options.check_invariants) {
        check_same(dp_before, parameter_hash(dp_params), "pixel discriminator changed in segmenter step");
        check_same(dg_before, parameter_hash(dg_params), "image discriminator changed in segmenter step");
      }
      rec["source_focal"] = src_focal;
      rec["target_focal"] = tgt_focal;
      rec["adversarial"] = adv;
      rec["total"] = total;
      rec["retained"] = selection.retained_ids.size();
      if (record) record->add_iteration(std::move(rec));
    }

    if (variant.sample_selection) {
      std::map<std::string, double> scores;
      const std::size_t chunk = 16;
      const auto& retained = selection.retained_ids;
      for (std::size_t start = 0; start < retained.size(); start += chunk) {
        const std::size_t count = std::min(chunk, retained.size() - start);
        std::vector<Tensor> imgs;
        for (std::size_t i = 0; i < count; ++i) {
          imgs.push_back(translated(source[index_of.at(retained[start + i])], score_rng));
        }
        std::vector<const Tensor*> ptrs;
        for (const auto& t : imgs) ptrs.push_back(&t);
        const Tensor z = dg.forward(softmax_channels(seg.forward(batch_of(ptrs))));
        for (std::size_t i = 0; i < count; ++i) scores[retained[start + i]] = sigmoid_d(z[i]);
      }
      SelectionState next = select_epoch(selection, scores);
      if (record) record->add_selection(describe_step(selection, next));
      selection = std::move(next);
    }
  }
  if (record) record->end_phase();
  return snapshot(seg, {{"phase", "adversarial"}}, config.seed);
}

Checkpoint finetune_kd(const TrainConfig& config, const Checkpoint& teacher_ckpt,
                       std::span<const LabeledImage> target_kshot, const TrainOptions& options) {
  config.validate();
  if (target_kshot.empty()) throw DataError("finetune_kd: empty target set");
  check_classes(config, target_kshot);
  Segmenter teacher = restore_checked(teacher_ckpt, config);
  Segmenter student = restore_checked(teacher_ckpt, config);
  auto params = student.parameters();
  Sgd opt(params, config.seg_optimizer);
  Rng draw = stream(config, kFinetuneDraw);
  const int b = config.batch_size;
  const auto n_tgt = static_cast<std::uint64_t>(target_kshot.size());
  RunRecord* record = options.record;
  if (record) record->begin_phase("finetune");
  LrMonitor monitor("finetune");

  for (long iter = 0; iter < config.kd_iterations; ++iter) {
    std::vector<const LabeledImage*> items;
    std::vector<const Tensor*> images;
    for (int i = 0; i < b; ++i) {
      items.push_back(&target_kshot[uniform_index(draw, n_tgt)]);
      images.push_back(&items.back()->image);
    }
    const Tensor x = batch_of(images);
    const double lr = poly_lr(config.finetune_lr, iter, config.kd_iterations, config.seg_optimizer.poly_power);
    monitor.observe(lr);
    const Tensor t_logits = teacher.forward(x);
    zero_grad(params);
    const Tensor s_logits = student.forward(x);
    const Tensor probs = softmax_channels(s_logits);
    const auto labels = output_labels(items, probs.dim(2), probs.dim(3));
    Tensor grad(probs.shape());
    const double focal = focal_batch(probs, 0, labels, config.focal, grad);
    Tensor glogits = softmax_channels_backward(probs, grad);
    double kd = 0.0;
    for (int i = 0; i < b; ++i) {
      auto g = kd_loss_grad(prob_map_of(t_logits, i).values, prob_map_of(s_logits, i).values, config.tau);
      kd += g.value / b;
      if (config.lambda_kd != 0.0) write_into(glogits, i, g.grad, config.lambda_kd / b);
    }
    const double total = focal + config.lambda_kd * kd;
    require_finite(total, "fine-tuning loss");
    student.backward(glogits);
    opt.step(lr);
    if (record) {
      record->add_iteration({{"iteration", iter}, {"lr", lr}, {"focal", focal}, {"kd", kd}, {"total", total}});
    }
  }
  if (record) record->end_phase();
  return snapshot(student, {{"phase", "finetune"}}, config.seed);
}

std::string baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kSourceOnly: return "source_only";
    case BaselineKind::kJointTraining: return "joint_training";
    case BaselineKind::kFineTuning: return "fine_tuning";
    case BaselineKind::kImageWiseAdversarial: return "image_wise_adversarial";
  }
  return "source_only";
}

BaselineKind parse_baseline(const std::string& name) {
  for (BaselineKind k : {BaselineKind::kSourceOnly, BaselineKind::kJointTraining,
                         BaselineKind::kFineTuning, BaselineKind::kImageWiseAdversarial}) {
    if (baseline_name(k) == name) return k;
  }
  throw InvalidArgument("unknown baseline '" + name +
                        "' (valid: source_only, joint_training, fine_tuning, image_wise_adversarial)");
}

Checkpoint run_baseline(BaselineKind kind, const TrainConfig& config,
                        std::span<const LabeledImage> source,
                        std::span<const LabeledImage> target_kshot, const TrainOptions& options,
                        const Checkpoint* pretrained) {
  const Checkpoint base = pretrained ? *pretrained : pretrain_source(config, source, options);
  switch (kind) {
    case BaselineKind::kSourceOnly:
      return base;
    case BaselineKind::kJointTraining:
      return train_adversarial(config, joint_training_variant(), base, source, target_kshot, options);
    case BaselineKind::kFineTuning: {
      TrainConfig naive = config;
      naive.lambda_kd = 0.0;
      return finetune_kd(naive, base, target_kshot, options);
    }
    case BaselineKind::kImageWiseAdversarial: {
      AdversarialVariant v;
      v.term = AdvTerm::kImageWise;
      v.use_s = v.use_b = false;
      v.sample_selection = false;
      return train_adversarial(config, v, base, source, target_kshot, options);
    }
  }
  return base;
}

MetricsReport evaluate(Segmenter& model, std::span<const LabeledImage> images,
                       const ClassPartition& partition, ZeroUnionPolicy policy) {
  if (images.empty()) throw DataError("evaluate: empty dataset");
  const int classes = model.config().class_count;
  ConfusionMatrix confusion(classes);
  for (const auto& item : images) {
    try {
      item.labels.check_classes(classes);
    } catch (const InvalidArgument& e) {
      throw DataError(item.id + ": " + e.what());
    }
    const Tensor logits = segment(model, item.image);
    const Tensor batch({1, logits.dim(0), logits.dim(1), logits.dim(2)}, logits.storage());
    LabelMap pred = argmax_labels(batch, 0);
    if (pred.height() != item.labels.height() || pred.width() != item.labels.width()) {
      pred = resize_nearest(pred, item.labels.height(), item.labels.width());
    }
    confusion.accumulate(pred, item.labels);
  }
  return report(confusion, partition, policy);
}

MetricsReport evaluate(const Checkpoint& ckpt, std::span<const LabeledImage> images,
                       const ClassPartition& partition, ZeroUnionPolicy policy) {
  Segmenter model = restore_segmenter(ckpt);
  return evaluate(model, images, partition, policy);
}

Json to_json(const MetricsReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json j;
  j["miou"] = opt(r.miou);
  j["miou_well"] = opt(r.miou_well);
  j["miou_under"] = opt(r.miou_under);
  Json per = Json::array();
  for (const auto& v : r.per_class_iou) per.push_back(opt(v));
  j["per_class_iou"] = per;
  j["partition"] = to_json(r.partition);
  j["zero_union"] = policy_name(r.policy);
  Json rows = Json::array();
  for (int t = 0; t < r.confusion.classes(); ++t) {
    Json row = Json::array();
    for (int p = 0; p < r.confusion.classes(); ++p) row.push_back(r.confusion.at(t, p));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  return j;
}

}  // namespace pixda
