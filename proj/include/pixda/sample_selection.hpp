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
#ifndef PIXDA_SAMPLE_SELECTION_HPP_
#define PIXDA_SAMPLE_SELECTION_HPP_

#include <map>
#include <string>
#include <vector>

namespace pixda {

// Retained source subset and the growing threshold that prunes it.
struct SelectionState {
  std::vector<std::string> retained_ids;
  double delta = 0.4;
  int epoch = 0;
  double delta0 = 0.4;
  double delta_max = 1.0 - 1e-6;

  static SelectionState initial(std::vector<std::string> ids, double delta0,
                                double delta_max);
  bool exhausted() const { return retained_ids.empty(); }
};

// min(delta0 * 2^epoch, delta_max).
double threshold_at(int epoch, double delta0, double delta_max);

// Keeps every retained id whose image-discriminator score is below the
// current threshold, then advances the epoch and the threshold. Throws
// InvalidArgument when a retained id has no score.
SelectionState select_epoch(const SelectionState& state,
                            const std::map<std::string, double>& scores);

// One line of the per-epoch selection log.
struct SelectionRecord {
  int epoch = 0;
  double delta = 0.0;
  std::size_t retained = 0;
  std::vector<std::string> dropped;
};

SelectionRecord describe_step(const SelectionState& before,
                              const SelectionState& after);

}  // namespace pixda

#endif  // PIXDA_SAMPLE_SELECTION_HPP_
