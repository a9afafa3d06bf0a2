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
#include "pixda/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace pixda {
namespace {

// log of a class probability: lower clamp only, so p == 1 gives exactly 0.
double log_prob(double p) { return std::log(std::clamp(p, kProbEpsilon, 1.0)); }

double clamp_open(double d) {
  return std::clamp(d, kProbEpsilon, 1.0 - kProbEpsilon);
}

void check_prob_labels(const char* where, const ProbMap& probs,
                       const LabelMap& labels) {
  if (probs.values.rank() != 3 || labels.values.rank() != 2) {
    throw InvalidArgument(std::string(where) +
                          ": expected (C, H, W) probabilities and (H, W) labels");
  }
  if (probs.height() != labels.height() || probs.width() != labels.width()) {
    throw_shape_mismatch(where, {probs.height(), probs.width()},
                         labels.values.shape());
  }
  labels.check_classes(probs.classes());
}

void check_same(const char* where, const RealMap& a, const RealMap& b) {
  if (!a.same_shape(b)) throw_shape_mismatch(where, a.shape(), b.shape());
}

}  // namespace

void FocalParams::validate() const {
  if (!(alpha > 0.0)) throw InvalidArgument("focal alpha must be > 0");
  if (!(gamma >= 0.0)) throw InvalidArgument("focal gamma must be >= 0");
}

double focal_loss(const ProbMap& probs, const LabelMap& labels,
                  const FocalParams& params) {
  return focal_loss_grad(probs, labels, params).value;
}

WithGrad<ProbMap> focal_loss_grad(const ProbMap& probs, const LabelMap& labels,
                                  const FocalParams& params) {
  check_prob_labels("focal_loss", probs, labels);
  params.validate();
  const std::size_t valid = labels.valid_count();
  if (valid == 0) {
    throw InvalidArgument("focal_loss: empty supervision, every pixel ignored");
  }
  const std::size_t hw = labels.size();
  const double inv_n = 1.0 / static_cast<double>(valid);
  WithGrad<ProbMap> out{0.0, ProbMap{Array<double>(probs.values.shape())}};
  double sum = 0.0;
  for (std::size_t i = 0; i < hw; ++i) {
    if (!labels.is_valid(i)) continue;
    const std::size_t idx = static_cast<std::size_t>(labels.values[i]) * hw + i;
    const double p = probs.values[idx];
    const double pc = std::clamp(p, kProbEpsilon, 1.0);
    const double lg = std::log(pc);
    const double one_minus = 1.0 - pc;
    const double mod = params.gamma == 0.0 ? 1.0 : std::pow(one_minus, params.gamma);
    sum += params.alpha * mod * lg;
    // d/dp of -alpha (1-p)^g log p
    double dmod = 0.0;
    if (params.gamma != 0.0 && one_minus > 0.0) {
      dmod = -params.gamma * std::pow(one_minus, params.gamma - 1.0);
    }
    out.grad.values[idx] = -params.alpha * (dmod * lg + mod / pc) * inv_n;
  }
  out.value = -sum * inv_n;
  return out;
}

double cross_entropy(const ProbMap& probs, const LabelMap& labels) {
  return focal_loss(probs, labels, FocalParams{1.0, 0.0});
}

RealMap s_map(const ProbMap& probs, const LabelMap& labels) {
  check_prob_labels("s_map", probs, labels);
  const std::size_t hw = labels.size();
  RealMap s({labels.height(), labels.width()});
  for (std::size_t i = 0; i < hw; ++i) {
    if (!labels.is_valid(i)) continue;
    const std::size_t idx = static_cast<std::size_t>(labels.values[i]) * hw + i;
    s[i] = -log_prob(probs.values[idx]);
  }
  return s;
}

RealMap b_map(const LabelMap& labels) {
  const std::size_t valid = labels.valid_count();
  if (valid == 0) throw InvalidArgument("b_map: every pixel ignored");
  std::map<std::int32_t, std::size_t> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.is_valid(i)) ++counts[labels.values[i]];
  }
  RealMap b({labels.height(), labels.width()});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels.is_valid(i)) continue;
    b[i] = 1.0 - static_cast<double>(counts[labels.values[i]]) /
                     static_cast<double>(valid);
  }
  return b;
}

WeightMaps weight_maps(const ProbMap& probs, const LabelMap& labels) {
  return WeightMaps{s_map(probs, labels), b_map(labels)};
}

double pixel_discriminator_loss(const RealMap& d_src, const RealMap& d_tgt) {
  return pixel_discriminator_loss_grad(d_src, d_tgt).value;
}

PixelDiscriminatorGrad pixel_discriminator_loss_grad(const RealMap& d_src,
                                                     const RealMap& d_tgt) {
  check_same("pixel_discriminator_loss", d_src, d_tgt);
  const std::size_t n = d_src.size();
  if (n == 0) throw InvalidArgument("pixel_discriminator_loss: empty maps");
  const double inv_n = 1.0 / static_cast<double>(n);
  PixelDiscriminatorGrad out{0.0, RealMap(d_src.shape()), RealMap(d_tgt.shape())};
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = clamp_open(d_src[i]);
    const double t = clamp_open(d_tgt[i]);
    sum += std::log(s) + std::log(1.0 - t);
    out.d_src[i] = -inv_n / s;
    out.d_tgt[i] = inv_n / (1.0 - t);
  }
  out.value = -sum * inv_n;
  return out;
}

double pixadv_loss(const RealMap& d_tgt, const WeightMaps& weights) {
  return pixadv_loss_grad(d_tgt, weights).value;
}

WithGrad<RealMap> pixadv_loss_grad(const RealMap& d_tgt,
                                   const WeightMaps& weights) {
  check_same("pixadv_loss", d_tgt, weights.s);
  check_same("pixadv_loss", d_tgt, weights.b);
  const std::size_t n = d_tgt.size();
  if (n == 0) throw InvalidArgument("pixadv_loss: empty map");
  const double inv_n = 1.0 / static_cast<double>(n);
  WithGrad<RealMap> out{0.0, RealMap(d_tgt.shape())};
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.s[i] * weights.b[i];
    if (w == 0.0) continue;
    const double d = clamp_open(d_tgt[i]);
    sum += w * std::log(d);
    out.grad[i] = -w * inv_n / d;
  }
  out.value = -sum * inv_n;
  return out;
}

double global_discriminator_loss(double dg_src, double dg_tgt) {
  return global_discriminator_loss_grad(dg_src, dg_tgt).value;
}

GlobalDiscriminatorGrad global_discriminator_loss_grad(double dg_src,
                                                       double dg_tgt) {
  const double s = clamp_open(dg_src);
  const double t = clamp_open(dg_tgt);
  return {-std::log(s) - std::log(1.0 - t), -1.0 / s, 1.0 / (1.0 - t)};
}

Array<double> softmax(const Array<double>& logits, double temperature) {
  if (logits.rank() != 3) throw InvalidArgument("softmax: expected (C, H, W)");
  const int c = logits.dim(0);
  const std::size_t hw = logits.size() / static_cast<std::size_t>(c);
  Array<double> out(logits.shape());
  for (std::size_t q = 0; q < hw; ++q) {
    double m = logits[q] / temperature;
    for (int k = 1; k < c; ++k) m = std::max(m, logits[k * hw + q] / temperature);
    double z = 0.0;
    for (int k = 0; k < c; ++k) {
      const double e = std::exp(logits[k * hw + q] / temperature - m);
      out[k * hw + q] = e;
      z += e;
    }
    for (int k = 0; k < c; ++k) out[k * hw + q] /= z;
  }
  return out;
}

double kd_loss(const Array<double>& teacher_logits,
               const Array<double>& student_logits, double tau) {
  return kd_loss_grad(teacher_logits, student_logits, tau).value;
}

WithGrad<Array<double>> kd_loss_grad(const Array<double>& teacher_logits,
                                     const Array<double>& student_logits,
                                     double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("kd_loss: tau must be > 0");
  if (!teacher_logits.same_shape(student_logits)) {
    throw_shape_mismatch("kd_loss", teacher_logits.shape(),
                         student_logits.shape());
  }
  const Array<double> q = softmax(teacher_logits, tau);
  const Array<double> s = softmax(student_logits);
  const int c = student_logits.dim(0);
  const std::size_t hw = student_logits.size() / static_cast<std::size_t>(c);
  const double inv_n = 1.0 / static_cast<double>(hw);
  WithGrad<Array<double>> out{0.0, Array<double>(student_logits.shape())};
  double sum = 0.0;
  for (std::size_t p = 0; p < hw; ++p) {
    double m = student_logits[p];
    for (int k = 1; k < c; ++k) m = std::max(m, student_logits[k * hw + p]);
    double z = 0.0;
    for (int k = 0; k < c; ++k) z += std::exp(student_logits[k * hw + p] - m);
    const double lse = m + std::log(z);
    for (int k = 0; k < c; ++k) {
      const std::size_t i = k * hw + p;
      sum += q[i] * (student_logits[i] - lse);
      out.grad[i] = (s[i] - q[i]) * inv_n;
    }
  }
  out.value = -sum * inv_n;
  return out;
}

Phase2Terms phase2_total_loss(std::span<const Supervised> source,
                              std::span<const Supervised> target,
                              std::span<const RealMap> d_tgt,
                              double lambda_adv, const FocalParams& focal) {
  if (source.empty()) {
    throw SourceExhausted("phase2_total_loss: retained source set is empty");
  }
  if (target.empty()) throw InvalidArgument("phase2_total_loss: empty target batch");
  if (d_tgt.size() != target.size()) {
    throw InvalidArgument("phase2_total_loss: one discriminator map per target image");
  }
  Phase2Terms t;
  for (const auto& s : source) t.source_focal += focal_loss(*s.probs, *s.labels, focal);
  t.source_focal /= static_cast<double>(source.size());
  for (std::size_t k = 0; k < target.size(); ++k) {
    t.target_focal += focal_loss(*target[k].probs, *target[k].labels, focal);
    t.adversarial +=
        pixadv_loss(d_tgt[k], weight_maps(*target[k].probs, *target[k].labels));
  }
  t.target_focal /= static_cast<double>(target.size());
  t.adversarial /= static_cast<double>(target.size());
  t.total = t.source_focal + t.target_focal + lambda_adv * t.adversarial;
  return t;
}

FinetuneTerms finetune_total_loss(std::span<const Array<double>> teacher_logits,
                                  std::span<const Array<double>> student_logits,
                                  std::span<const LabelMap* const> labels,
                                  double lambda_kd, double tau,
                                  const FocalParams& focal) {
  if (student_logits.empty() || teacher_logits.size() != student_logits.size() ||
      labels.size() != student_logits.size()) {
    throw InvalidArgument("finetune_total_loss: batch sizes disagree or are empty");
  }
  FinetuneTerms t;
  for (std::size_t k = 0; k < student_logits.size(); ++k) {
    const ProbMap probs{softmax(student_logits[k])};
    t.focal += focal_loss(probs, *labels[k], focal);
    t.kd += kd_loss(teacher_logits[k], student_logits[k], tau);
  }
  const double n = static_cast<double>(student_logits.size());
  t.focal /= n;
  t.kd /= n;
  t.total = t.focal + lambda_kd * t.kd;
  return t;
}

}  // namespace pixda
