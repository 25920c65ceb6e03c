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

#include "tsenas/selection.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace tsenas {

namespace {

void require_evaluated(std::span<const Individual> inds, const char* what) {
  for (const auto& ind : inds) {
    if (!ind.evaluated()) {
      throw std::invalid_argument(std::string(what) +
                                  ": unevaluated individual");
    }
  }
}

}  // namespace

LevelPartition level_partition(std::span<const Individual> candidates,
                               double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  require_evaluated(candidates, "level_partition");
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fitter(candidates[a], candidates[b]);
  });
  LevelPartition partition;
  double level_max = 0.0;
  for (std::size_t idx : order) {
    const double f = *candidates[idx].fitness;
    if (partition.levels.empty() || level_max - f >= alpha) {
      partition.levels.emplace_back();
      level_max = f;
    }
    partition.levels.back().push_back(idx);
  }
  return partition;
}

int density_value(const Individual& candidate,
                  std::span<const Individual> selected) {
  const int n = candidate.depth();
  return static_cast<int>(std::count_if(
      selected.begin(), selected.end(),
      [n](const Individual& s) { return s.depth() == n; }));
}

std::vector<std::size_t> environmental_select_indices(
    std::span<const Individual> candidates, int size, double alpha) {
  if (size < 0 || static_cast<std::size_t>(size) > candidates.size()) {
    throw std::invalid_argument("environmental_select: insufficient candidates (" +
                                std::to_string(candidates.size()) + " < " +
                                std::to_string(size) + ")");
  }
  const LevelPartition partition = level_partition(candidates, alpha);
  const auto target = static_cast<std::size_t>(size);
  std::vector<std::size_t> chosen;
  // Depth histogram of admitted members, for incremental density.
  std::vector<int> per_depth;
  auto admit = [&](std::size_t idx) {
    chosen.push_back(idx);
    const auto n = static_cast<std::size_t>(candidates[idx].depth());
    if (per_depth.size() <= n) per_depth.resize(n + 1, 0);
    ++per_depth[n];
  };
  auto density = [&](std::size_t idx) {
    const auto n = static_cast<std::size_t>(candidates[idx].depth());
    return n < per_depth.size() ? per_depth[n] : 0;
  };

  for (const auto& level : partition.levels) {
    if (chosen.size() == target) break;
    if (chosen.size() + level.size() <= target) {
      for (std::size_t idx : level) admit(idx);
      continue;
    }
    // Overflow level: greedy lowest density, then fitness, then hash.
    std::vector<std::size_t> pool = level;
    while (chosen.size() < target) {
      auto best = pool.begin();
      for (auto it = pool.begin() + 1; it != pool.end(); ++it) {
        const int d_it = density(*it);
        const int d_best = density(*best);
        if (d_it != d_best) {
          if (d_it < d_best) best = it;
        } else if (fitter(candidates[*it], candidates[*best])) {
          best = it;
        }
      }
      admit(*best);
      pool.erase(best);
    }
    break;
  }
  return chosen;
}

Population environmental_select(std::span<const Individual> parents,
                                std::span<const Individual> offspring,
                                int size, double alpha) {
  std::vector<Individual> candidates(parents.begin(), parents.end());
  candidates.insert(candidates.end(), offspring.begin(), offspring.end());
  Population next;
  for (std::size_t idx : environmental_select_indices(candidates, size, alpha)) {
    next.members.push_back(candidates[idx]);
  }
  return next;
}

FineChoice fine_select_best(const Individual& old, const Individual& mutated,
                            const Individual* pruned) {
  require_evaluated(std::span(&old, 1), "fine_select_best");
  require_evaluated(std::span(&mutated, 1), "fine_select_best");
  if (pruned) require_evaluated(std::span(pruned, 1), "fine_select_best");
  // Lexicographic: fitness high, old first, fewer live nodes, lower hash.
  auto rank = [](const Individual& ind, int is_old) {
    return std::make_tuple(-*ind.fitness, is_old ? 0 : 1, ind.live_node_count(),
                           ind.hash());
  };
  FineChoice choice = FineChoice::kOld;
  auto best = rank(old, 1);
  if (auto r = rank(mutated, 0); r < best) {
    best = r;
    choice = FineChoice::kMutated;
  }
  if (pruned) {
    if (auto r = rank(*pruned, 0); r < best) choice = FineChoice::kPruned;
  }
  return choice;
}

}  // namespace tsenas
