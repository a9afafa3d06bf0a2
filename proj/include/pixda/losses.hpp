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
#ifndef PIXDA_LOSSES_HPP_
#define PIXDA_LOSSES_HPP_

// Segmentation, adversarial and distillation objectives. Every function is a
// pure function of its arguments. Gradient companions return the derivative
// with respect to the differentiable input only; weight maps and teacher
// outputs are always treated as constants.

#include <span>

#include "pixda/tensor.hpp"

namespace pixda {

// Clamp applied to every probability before it enters a logarithm.
inline constexpr double kProbEpsilon = 1e-7;

struct FocalParams {
  double alpha = 1.0;
  double gamma = 2.0;

  void validate() const;
};

struct WeightMaps {
  RealMap s;  // confidence penalty, -log p(true class); 0 on ignored pixels
  RealMap b;  // imbalance weight, 1 - in-image class frequency
};

template <typename Grad>
struct WithGrad {
  double value = 0.0;
  Grad grad;
};

// Mean over valid pixels of -alpha (1 - p_y)^gamma log p_y.
// Throws InvalidArgument on shape mismatch or when every pixel is ignored.
double focal_loss(const ProbMap& probs, const LabelMap& labels,
                  const FocalParams& params);
WithGrad<ProbMap> focal_loss_grad(const ProbMap& probs, const LabelMap& labels,
                                  const FocalParams& params);

// Cross-entropy on valid pixels; focal_loss with alpha = 1, gamma = 0.
double cross_entropy(const ProbMap& probs, const LabelMap& labels);

RealMap s_map(const ProbMap& probs, const LabelMap& labels);
// Throws InvalidArgument when every pixel is ignored.
RealMap b_map(const LabelMap& labels);
WeightMaps weight_maps(const ProbMap& probs, const LabelMap& labels);

// -(1/|I|) sum_i [log d_src,i + log(1 - d_tgt,i)]. Inputs are source
// probabilities and are clamped to [eps, 1 - eps].
double pixel_discriminator_loss(const RealMap& d_src, const RealMap& d_tgt);
struct PixelDiscriminatorGrad {
  double value = 0.0;
  RealMap d_src;
  RealMap d_tgt;
};
PixelDiscriminatorGrad pixel_discriminator_loss_grad(const RealMap& d_src,
                                                     const RealMap& d_tgt);

// -(1/|I|) sum_i S_i B_i log d_tgt,i with S and B held constant.
double pixadv_loss(const RealMap& d_tgt, const WeightMaps& weights);
WithGrad<RealMap> pixadv_loss_grad(const RealMap& d_tgt,
                                   const WeightMaps& weights);

// -log dg_src - log(1 - dg_tgt).
double global_discriminator_loss(double dg_src, double dg_tgt);
struct GlobalDiscriminatorGrad {
  double value = 0.0;
  double d_src = 0.0;
  double d_tgt = 0.0;
};
GlobalDiscriminatorGrad global_discriminator_loss_grad(double dg_src,
                                                       double dg_tgt);

// Per pixel -sum_c softmax(teacher / tau)_c log softmax(student)_c, averaged
// over pixels. Logits are (C, H, W). Only the teacher is tempered.
double kd_loss(const Array<double>& teacher_logits,
               const Array<double>& student_logits, double tau);
// Gradient with respect to the student logits.
WithGrad<Array<double>> kd_loss_grad(const Array<double>& teacher_logits,
                                     const Array<double>& student_logits,
                                     double tau);

// Softmax over axis 0 of a (C, H, W) array, optionally tempered.
Array<double> softmax(const Array<double>& logits, double temperature = 1.0);

// One supervised image: class probabilities and the labels they are scored
// against.
struct Supervised {
  const ProbMap* probs;
  const LabelMap* labels;
};

struct Phase2Terms {
  double source_focal = 0.0;
  double target_focal = 0.0;
  double adversarial = 0.0;
  double total = 0.0;
};

// Raised when the retained source subset is empty; this ends the
// adversarial phase rather than signalling a fault.
class SourceExhausted : public Error {
 public:
  using Error::Error;
};

// mean source focal + mean target focal + lambda * mean PixAdv. The weight
// maps are derived from each target image's probabilities and labels;
// d_tgt holds the pixel discriminator's source probability per target image.
Phase2Terms phase2_total_loss(std::span<const Supervised> source,
                              std::span<const Supervised> target,
                              std::span<const RealMap> d_tgt,
                              double lambda_adv, const FocalParams& focal);

struct FinetuneTerms {
  double focal = 0.0;
  double kd = 0.0;
  double total = 0.0;
};

// mean target focal (on softmax(student)) + lambda_kd * mean kd_loss.
FinetuneTerms finetune_total_loss(std::span<const Array<double>> teacher_logits,
                                  std::span<const Array<double>> student_logits,
                                  std::span<const LabelMap* const> labels,
                                  double lambda_kd, double tau,
                                  const FocalParams& focal);

}  // namespace pixda

#endif  // PIXDA_LOSSES_HPP_
