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

#include <cmath>

#include "pixda/tensor.hpp"
#include "testing.hpp"

namespace pixda {
namespace {

using testing::random_tensor;

TEST(TensorTest, ValueCountMustMatchShape) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<float>(5)), InvalidArgument);
  EXPECT_THROW(Tensor({-1}), InvalidArgument);
  const Tensor t({2, 3}, std::vector<float>{0, 1, 2, 3, 4, 5});
  EXPECT_EQ(t.at(1, 2), 5.0f);
  EXPECT_EQ(t.shape_string(), "(2, 3)");
}

TEST(TensorTest, IndexingIsRowMajor) {
  Tensor t({2, 3, 4, 5});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(i);
  EXPECT_EQ(t.at(1, 2, 3, 4), ((1 * 3 + 2) * 4 + 3) * 5 + 4);
  EXPECT_EQ(t.slab(1).front(), 60.0f);
  EXPECT_EQ(t.slab(1).size(), 60u);
}

TEST(TensorTest, SoftmaxRowsSumToOneAndPreserveOrder) {
  Rng rng(1);
  const Tensor logits = random_tensor(rng, {3, 4, 5, 6}, -20.0, 20.0);
  const Tensor p = softmax_channels(logits);
  for (int n = 0; n < 3; ++n) {
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 6; ++x) {
        double sum = 0.0;
        int best = 0;
        for (int c = 0; c < 4; ++c) {
          sum += p.at(n, c, y, x);
          if (logits.at(n, c, y, x) > logits.at(n, best, y, x)) best = c;
        }
        EXPECT_NEAR(sum, 1.0, 1e-5);
        EXPECT_EQ(argmax_labels(p, n).values.at(y, x), best);
      }
    }
  }
}

TEST(TensorTest, SoftmaxIsStableForLargeLogits) {
  const Tensor logits({1, 2, 1, 1}, std::vector<float>{1000.0f, 0.0f});
  const Tensor p = softmax_channels(logits);
  EXPECT_FLOAT_EQ(p[0], 1.0f);
  EXPECT_FLOAT_EQ(p[1], 0.0f);
}

TEST(TensorTest, SoftmaxBackwardMatchesFiniteDifferences) {
  Rng rng(2);
  Tensor logits = random_tensor(rng, {2, 3, 2, 2}, -2.0, 2.0);
  const Tensor g = random_tensor(rng, logits.shape());
  auto objective = [&] {
    const Tensor p = softmax_channels(logits);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += static_cast<double>(g[i]) * p[i];
    return s;
  };
  const Tensor analytic = softmax_channels_backward(softmax_channels(logits), g);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double numeric = testing::central_difference(objective, logits[i], 1e-2);
    EXPECT_NEAR(analytic[i], numeric, 1e-3) << i;
  }
}

TEST(TensorTest, StackRequiresEqualShapes) {
  const Tensor a({3, 2, 2}, 1.0f), b({3, 2, 2}, 2.0f), c({3, 2, 3});
  const Tensor* ok[] = {&a, &b};
  const Tensor s = stack(ok);
  EXPECT_EQ(s.shape(), (std::vector<int>{2, 3, 2, 2}));
  EXPECT_EQ(s.at(1, 2, 1, 1), 2.0f);
  const Tensor* bad[] = {&a, &c};
  EXPECT_THROW(stack(bad), InvalidArgument);
}

TEST(TensorTest, ProbMapOfCopiesOneImage) {
  Rng rng(3);
  const Tensor p = softmax_channels(random_tensor(rng, {2, 3, 4, 4}));
  const ProbMap m = prob_map_of(p, 1);
  EXPECT_EQ(m.classes(), 3);
  EXPECT_DOUBLE_EQ(m.at(2, 3, 1), p.at(1, 2, 3, 1));
}

TEST(LabelMapTest, ValidCountSkipsIgnore) {
  LabelMap l(2, 3, 1);
  l.values.at(0, 0) = kIgnoreIndex;
  l.values.at(1, 2) = kIgnoreIndex;
  EXPECT_EQ(l.valid_count(), 4u);
}

TEST(LabelMapTest, CheckClassesRejectsOutOfRange) {
  LabelMap l(2, 2, 0);
  l.values.at(1, 1) = kIgnoreIndex;
  EXPECT_NO_THROW(l.check_classes(1));
  l.values.at(0, 1) = 3;
  EXPECT_THROW(l.check_classes(3), InvalidArgument);
  l.values.at(0, 1) = -1;
  EXPECT_THROW(l.check_classes(3), InvalidArgument);
}

}  // namespace
}  // namespace pixda
