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
#include "pixda/sample_selection.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pixda/errors.hpp"

namespace pixda {

SelectionState SelectionState::initial(std::vector<std::string> ids, double delta0,
                                       double delta_max) {
  if (!(delta0 > 0.0) || !(delta_max >= delta0)) {
    throw InvalidArgument("selection thresholds must satisfy 0 < delta0 <= delta_max");
  }
  return SelectionState{std::move(ids), threshold_at(0, delta0, delta_max), 0, delta0,
                        delta_max};
}

double threshold_at(int epoch, double delta0, double delta_max) {
  return std::min(std::ldexp(delta0, epoch), delta_max);
}

SelectionState select_epoch(const SelectionState& state,
                            const std::map<std::string, double>& scores) {
  SelectionState next = state;
  next.retained_ids.clear();
  for (const auto& id : state.retained_ids) {
    auto it = scores.find(id);
    if (it == scores.end()) {
      throw InvalidArgument("select_epoch: no discriminator score for retained id " + id);
    }
    if (std::isnan(it->second)) {
      throw InvalidArgument("select_epoch: score for " + id + " is NaN");
    }
    if (it->second < state.delta) next.retained_ids.push_back(id);
  }
  next.epoch = state.epoch + 1;
  next.delta = threshold_at(next.epoch, state.delta0, state.delta_max);
  return next;
}

SelectionRecord describe_step(const SelectionState& before, const SelectionState& after) {
  SelectionRecord r{before.epoch, before.delta, after.retained_ids.size(), {}};
  const std::set<std::string> kept(after.retained_ids.begin(), after.retained_ids.end());
  for (const auto& id : before.retained_ids) {
    if (!kept.count(id)) r.dropped.push_back(id);
  }
  return r;
}

}  // namespace pixda
