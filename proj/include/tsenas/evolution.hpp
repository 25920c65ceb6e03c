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

#ifndef TSENAS_EVOLUTION_HPP_
#define TSENAS_EVOLUTION_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsenas/genome.hpp"
#include "tsenas/rng.hpp"
#include "tsenas/search_space.hpp"

namespace tsenas {

struct EvalMeta {
  int epochs_trained = 0;
  std::int64_t param_count = 0;

  friend bool operator==(const EvalMeta&, const EvalMeta&) = default;
};

using BlobUpdate = std::pair<StructuralKey, std::string>;

struct Individual {
  Genome genome;
  std::optional<double> fitness;
  EvalMeta meta;
  // Per-position weight payloads from the most recent evaluation.
  std::vector<BlobUpdate> blobs;
  std::uint64_t id = 0;

  bool evaluated() const { return fitness.has_value(); }
  int depth() const { return tsenas::depth(genome); }
  std::uint64_t hash() const { return genome_hash(genome); }
  int live_node_count() const;

  friend bool operator==(const Individual&, const Individual&) = default;
};

struct Population {
  std::vector<Individual> members;
  int generation = 0;

  friend bool operator==(const Population&, const Population&) = default;
};

// Better-than ordering: higher fitness first, then lower genome hash.
bool fitter(const Individual& a, const Individual& b);

// One genome following the initialization counter rule: N uniform in bounds,
// prev = j - 1, skip uniform over the legal range, and while the reduction
// counter k < N/2 the code is drawn from all 8 cells, afterwards from the
// Normal cells only.
Stage1Genome random_stage1(DepthBounds bounds, const CellLibrary& library,
                           Rng& rng);

// Throws std::invalid_argument unless 1 <= n_min <= n_max and size >= 1.
Population init_population(int size, DepthBounds bounds,
                           const CellLibrary& library, Rng& rng);

// Size-2 tournament with replacement. Throws std::invalid_argument when a
// member is unevaluated or the span is empty. Returns the winner's index.
std::size_t tournament_select(std::span<const Individual> members, Rng& rng);

// 1 + Binomial(n - 1, 1/n), clamped to [1, n].
int mutation_point_count(int n, Rng& rng);

enum class CrossoverMode { kMultiPoint, kSinglePoint };

// Same-type position pairs (reference index, other index) for two parents,
// reference being the shorter one (p1 on ties). `first_is_reference` reports
// which parent the first element of each pair belongs to.
struct CrossoverPairing {
  bool first_is_reference = true;
  std::vector<std::pair<int, int>> pairs;  // (p1 position, p2 position)
};
CrossoverPairing crossover_pairing(const Stage1Genome& p1,
                                   const Stage1Genome& p2,
                                   const CellLibrary& library);

std::pair<Stage1Genome, Stage1Genome> crossover(
    const Stage1Genome& p1, const Stage1Genome& p2, double rate, Rng& rng,
    const CellLibrary& library,
    CrossoverMode mode = CrossoverMode::kMultiPoint);

Stage1Genome cell_mutation(const Stage1Genome& genome, double rate, Rng& rng,
                           const CellLibrary& library);
Stage1Genome connect_mutation(const Stage1Genome& genome, double rate,
                              Rng& rng);

// Cell-level edits used by the fine-stage operators. Each returns false
// when no legal edit exists and leaves the graph untouched.
bool mutate_edge(CellGraph& graph, Rng& rng);
bool mutate_node(CellGraph& graph, Rng& rng);
// Zeroes live node `index` and rewires its consumers to its first input.
void prune_node(CellGraph& graph, int index);

struct FineMutationKinds {
  bool node = true;
  bool edge = true;
};

Stage2Genome fine_mutation(const Stage2Genome& genome, Rng& rng,
                           FineMutationKinds kinds = {});

struct PruneResult {
  Stage2Genome genome;
  bool pruned = false;  // false: no cell had two live intermediates
  int cell = -1;        // 0-based position of the pruned cell
  int node = -1;
};

PruneResult prune(const Stage2Genome& genome, Rng& rng);

}  // namespace tsenas

#endif  // TSENAS_EVOLUTION_HPP_
