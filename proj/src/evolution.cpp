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

#include "tsenas/evolution.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tsenas {

namespace {

// Uniform draw from [lo, hi] \ {excluded}; requires excluded in range and
// hi > lo.
int draw_excluding(int lo, int hi, int excluded, Rng& rng) {
  int value = static_cast<int>(rng.uniform_int(lo, hi - 1));
  return value >= excluded ? value + 1 : value;
}

// k distinct indices drawn uniformly from [0, n) by partial Fisher-Yates.
std::vector<int> choose_distinct(int n, int k, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, n - 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace

int Individual::live_node_count() const {
  if (const auto* g2 = std::get_if<Stage2Genome>(&genome)) {
    return g2->live_node_count();
  }
  return 0;
}

bool fitter(const Individual& a, const Individual& b) {
  const double fa = a.fitness.value_or(-1.0);
  const double fb = b.fitness.value_or(-1.0);
  if (fa != fb) return fa > fb;
  return a.hash() < b.hash();
}

Stage1Genome random_stage1(DepthBounds bounds, const CellLibrary& library,
                           Rng& rng) {
  const int n = static_cast<int>(rng.uniform_int(bounds.n_min, bounds.n_max));
  const auto& all = library.cells();
  const auto& normal = library.codes_of(CellType::kNormal);
  Stage1Genome genome;
  genome.genes.reserve(static_cast<std::size_t>(n));
  int reductions = 0;
  for (int j = 1; j <= n; ++j) {
    CellGene gene;
    gene.prev = j - 1;
    gene.skip = j == 1 ? 0 : static_cast<int>(rng.uniform_int(0, j - 2));
    // k < n/2, kept in integers.
    if (2 * reductions < n) {
      gene.cell_code = all[rng.index(all.size())].code;
      if (library.cell_type(gene.cell_code) == CellType::kReduction) {
        ++reductions;
      }
    } else {
      gene.cell_code = normal[rng.index(normal.size())];
    }
    genome.genes.push_back(gene);
  }
  return genome;
}

Population init_population(int size, DepthBounds bounds,
                           const CellLibrary& library, Rng& rng) {
  if (size < 1) throw std::invalid_argument("population size must be >= 1");
  if (bounds.n_min < 1 || bounds.n_min > bounds.n_max) {
    throw std::invalid_argument("depth bounds must satisfy 1 <= N_min <= N_max");
  }
  Population pop;
  pop.members.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    Individual ind;
    ind.genome = random_stage1(bounds, library, rng);
    pop.members.push_back(std::move(ind));
  }
  return pop;
}

std::size_t tournament_select(std::span<const Individual> members, Rng& rng) {
  if (members.empty()) {
    throw std::invalid_argument("tournament over an empty population");
  }
  for (const auto& m : members) {
    if (!m.evaluated()) {
      throw std::invalid_argument("tournament over an unevaluated member");
    }
  }
  const std::size_t a = rng.index(members.size());
  const std::size_t b = rng.index(members.size());
  return fitter(members[b], members[a]) ? b : a;
}

int mutation_point_count(int n, Rng& rng) {
  if (n <= 1) return 1;
  const int points = 1 + rng.binomial(n - 1, 1.0 / n);
  return std::min(points, n);
}

CrossoverPairing crossover_pairing(const Stage1Genome& p1,
                                   const Stage1Genome& p2,
                                   const CellLibrary& library) {
  CrossoverPairing result;
  result.first_is_reference = p1.depth() <= p2.depth();
  const Stage1Genome& ref = result.first_is_reference ? p1 : p2;
  const Stage1Genome& other = result.first_is_reference ? p2 : p1;
  std::vector<int> by_type[2];
  for (int i = 0; i < other.depth(); ++i) {
    const auto t = library.cell_type(other.genes[static_cast<std::size_t>(i)].cell_code);
    by_type[static_cast<int>(t)].push_back(i);
  }
  std::size_t cursor[2] = {0, 0};
  for (int i = 0; i < ref.depth(); ++i) {
    const int t = static_cast<int>(
        library.cell_type(ref.genes[static_cast<std::size_t>(i)].cell_code));
    if (cursor[t] >= by_type[t].size()) continue;  // no partner: skip
    const int j = by_type[t][cursor[t]++];
    result.pairs.push_back(result.first_is_reference ? std::pair{i, j}
                                                     : std::pair{j, i});
  }
  return result;
}

std::pair<Stage1Genome, Stage1Genome> crossover(const Stage1Genome& p1,
                                                const Stage1Genome& p2,
                                                double rate, Rng& rng,
                                                const CellLibrary& library,
                                                CrossoverMode mode) {
  std::pair<Stage1Genome, Stage1Genome> children{p1, p2};
  if (!rng.bernoulli(rate)) return children;
  const CrossoverPairing pairing = crossover_pairing(p1, p2, library);
  const auto& pairs = pairing.pairs;
  std::vector<bool> swap(pairs.size(), false);
  if (mode == CrossoverMode::kMultiPoint) {
    for (std::size_t k = 0; k < pairs.size(); ++k) swap[k] = rng.bernoulli(0.5);
  } else if (!pairs.empty()) {
    const std::size_t cut = rng.index(pairs.size());
    for (std::size_t k = cut; k < pairs.size(); ++k) swap[k] = true;
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (!swap[k]) continue;
    auto& a = children.first.genes[static_cast<std::size_t>(pairs[k].first)];
    auto& b = children.second.genes[static_cast<std::size_t>(pairs[k].second)];
    std::swap(a.cell_code, b.cell_code);
  }
  return children;
}

Stage1Genome cell_mutation(const Stage1Genome& genome, double rate, Rng& rng,
                           const CellLibrary& library) {
  Stage1Genome out = genome;
  if (!rng.bernoulli(rate) || genome.genes.empty()) return out;
  const int n = genome.depth();
  for (int pos : choose_distinct(n, mutation_point_count(n, rng), rng)) {
    CellGene& gene = out.genes[static_cast<std::size_t>(pos)];
    std::vector<int> options;
    for (int code : library.codes_of(library.cell_type(gene.cell_code))) {
      if (code != gene.cell_code) options.push_back(code);
    }
    if (!options.empty()) gene.cell_code = options[rng.index(options.size())];
  }
  return out;
}

Stage1Genome connect_mutation(const Stage1Genome& genome, double rate,
                              Rng& rng) {
  Stage1Genome out = genome;
  if (!rng.bernoulli(rate)) return out;
  // Position j (1-based) has skip range [0, j-2]; only j >= 3 has a choice.
  const int eligible = std::max(0, genome.depth() - 2);
  if (eligible == 0) return out;
  for (int e : choose_distinct(eligible, mutation_point_count(eligible, rng),
                               rng)) {
    const int j = e + 3;
    CellGene& gene = out.genes[static_cast<std::size_t>(j - 1)];
    gene.skip = draw_excluding(0, j - 2, gene.skip, rng);
  }
  return out;
}

bool mutate_edge(CellGraph& graph, Rng& rng) {
  const std::vector<int> live = graph.live_nodes();
  if (live.empty()) return false;
  const std::size_t edge = rng.index(2 * live.size());
  NodeGene& n = graph.node(live[edge / 2]);
  int& op = edge % 2 == 0 ? n.op1 : n.op2;
  op = draw_excluding(1, kNumOperations, op, rng);
  return true;
}

bool mutate_node(CellGraph& graph, Rng& rng) {
  const std::vector<int> live = graph.live_nodes();
  if (live.empty()) return false;
  const int index = live[rng.index(live.size())];
  NodeGene& n = graph.node(index);
  int& input = rng.bernoulli(0.5) ? n.in1 : n.in2;
  std::vector<int> options;
  for (int k = 0; k < index; ++k) {
    if (k != input && graph.is_live(k)) options.push_back(k);
  }
  if (options.empty()) return false;
  input = options[rng.index(options.size())];
  return true;
}

void prune_node(CellGraph& graph, int index) {
  const int predecessor = graph.node(index).in1;
  graph.node(index) = NodeGene::pruned_node();
  for (int i = index + 1; i < graph.num_nodes(); ++i) {
    NodeGene& n = graph.node(i);
    if (n.pruned()) continue;
    if (n.in1 == index) n.in1 = predecessor;
    if (n.in2 == index) n.in2 = predecessor;
  }
}

Stage2Genome fine_mutation(const Stage2Genome& genome, Rng& rng,
                           FineMutationKinds kinds) {
  Stage2Genome out = genome;
  if (!kinds.node && !kinds.edge) return out;
  for (auto& gene : out.genes) {
    bool edge = kinds.edge;
    if (kinds.node && kinds.edge) edge = rng.bernoulli(0.5);
    if (edge) {
      mutate_edge(gene.micro, rng);
    } else {
      mutate_node(gene.micro, rng);
    }
  }
  return out;
}

PruneResult prune(const Stage2Genome& genome, Rng& rng) {
  PruneResult result{genome, false, -1, -1};
  std::vector<int> candidates;
  for (std::size_t i = 0; i < genome.genes.size(); ++i) {
    if (genome.genes[i].micro.live_count() >= 2) {
      candidates.push_back(static_cast<int>(i));
    }
  }
  if (candidates.empty()) return result;
  const int cell = candidates[rng.index(candidates.size())];
  CellGraph& graph = result.genome.genes[static_cast<std::size_t>(cell)].micro;
  const std::vector<int> live = graph.live_nodes();
  const int node = live[rng.index(live.size())];
  prune_node(graph, node);
  result.pruned = true;
  result.cell = cell;
  result.node = node;
  return result;
}

}  // namespace tsenas
