// Copyright 2026 The tsenas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TSENAS_SELECTION_HPP_
#define TSENAS_SELECTION_HPP_

#include <optional>
#include <span>
#include <vector>

#include "tsenas/evolution.hpp"

namespace tsenas {

// Indices into the candidate list, grouped into fitness levels, best first.
struct LevelPartition {
  std::vector<std::vector<std::size_t>> levels;
};

// Sorts by fitness (descending, ties by genome hash) and opens a new level
// whenever a candidate trails the current level's maximum by alpha or more.
// Throws std::invalid_argument on an unevaluated member or alpha <= 0.
LevelPartition level_partition(std::span<const Individual> candidates,
                               double alpha);

// Number of already-selected individuals with the candidate's depth N.
int density_value(const Individual& candidate,
                  std::span<const Individual> selected);

Population environmental_select(std::span<const Individual> parents,
                                std::span<const Individual> offspring,
                                int size, double alpha);

// Candidate indices selected by environmental_select, in admission order.
std::vector<std::size_t> environmental_select_indices(
    std::span<const Individual> candidates, int size, double alpha);

enum class FineChoice { kOld, kMutated, kPruned };

// Best of {old, mutated, pruned}; a missing pruned candidate (flagged
// no-op) leaves a two-way contest. Ties prefer old, then fewer live nodes,
// then lower genome hash.
FineChoice fine_select_best(const Individual& old, const Individual& mutated,
                            const Individual* pruned);

}  // namespace tsenas

#endif  // TSENAS_SELECTION_HPP_
