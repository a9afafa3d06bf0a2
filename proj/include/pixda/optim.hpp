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
#ifndef PIXDA_OPTIM_HPP_
#define PIXDA_OPTIM_HPP_

#include <vector>

#include "pixda/layers.hpp"

namespace pixda {

struct SgdSettings {
  double lr = 2.5e-4;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double poly_power = 0.9;
};

struct AdamSettings {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  double poly_power = 0.9;
};

// base * (1 - iter / max_iter)^power, clamped at 0 once iter >= max_iter.
double poly_lr(double base, long iter, long max_iter, double power);

// Stochastic gradient descent with heavy-ball momentum and L2 decay folded
// into the gradient.
class Sgd {
 public:
  Sgd(std::vector<Parameter*> params, const SgdSettings& settings);
  void step(double lr);

 private:
  std::vector<Parameter*> params_;
  SgdSettings settings_;
  std::vector<Tensor> velocity_;
  bool started_ = false;
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, const AdamSettings& settings);
  void step(double lr);
  long steps() const { return t_; }

 private:
  std::vector<Parameter*> params_;
  AdamSettings settings_;
  std::vector<Tensor> m_, v_;
  long t_ = 0;
};

}  // namespace pixda

#endif  // PIXDA_OPTIM_HPP_
