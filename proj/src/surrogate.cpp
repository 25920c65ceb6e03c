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

#include <algorithm>
#include <cmath>
#include <set>

#include "tsenas/evaluation.hpp"

namespace tsenas {

SurrogateTerms surrogate_terms(const Stage2Genome& genome,
                               const CellLibrary& library,
                               const SurrogateConfig& config) {
  const double total =
      config.w_depth + config.w_div + config.w_ops + config.w_noise;
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("surrogate weights must sum to 1");
  }
  ValidationResult check = validate_stage2(genome, library);
  if (!check.ok()) {
    throw std::invalid_argument("surrogate: invalid genome: " +
                                check.to_string());
  }
  SurrogateTerms terms;
  const int spread = std::max(1, config.bounds.n_max - config.bounds.n_min);
  terms.depth = std::clamp(
      1.0 - std::abs(genome.depth() - config.target_depth) /
                static_cast<double>(spread),
      0.0, 1.0);

  std::set<int> codes;
  int conv = 0;
  int edges = 0;
  for (const auto& gene : genome.genes) {
    codes.insert(gene.macro.cell_code);
    for (int i : gene.micro.live_nodes()) {
      const NodeGene& n = gene.micro.node(i);
      for (int op : {n.op1, n.op2}) {
        ++edges;
        if (library.op_by_code(op).op_type == OpType::kConvolution) ++conv;
      }
    }
  }
  terms.diversity = static_cast<double>(codes.size()) / kNumCells;
  terms.ops = edges == 0 ? 0.0 : static_cast<double>(conv) / edges;
  terms.noise =
      config.pin_noise
          ? 0.0
          : static_cast<double>(fnv1a64(canonical_string(genome)) % 1000) / 999.0;
  return terms;
}

double surrogate_fitness(const Stage2Genome& genome, const CellLibrary& library,
                         const SurrogateConfig& config) {
  const SurrogateTerms t = surrogate_terms(genome, library, config);
  return config.w_depth * t.depth + config.w_div * t.diversity +
         config.w_ops * t.ops + config.w_noise * t.noise;
}

std::vector<EvalResponse> SurrogateEvaluator::run_batch(
    std::span<const EvalRequest> requests) {
  std::vector<EvalResponse> out;
  out.reserve(requests.size());
  for (const EvalRequest& req : requests) {
    EvalResponse resp;
    resp.id = req.id;
    try {
      if (req.kind == RequestKind::kEvaluate && req.epochs < 1) {
        throw std::invalid_argument("epochs must be >= 1");
      }
      // The stacked SuperNet is not bound by the search's depth bounds.
      SurrogateConfig config = config_;
      if (req.kind == RequestKind::kTrainSupernet) {
        config.bounds = {1, std::max(1, req.genome.depth())};
      }
      resp.fitness = surrogate_fitness(req.genome, library_, config);
      resp.param_count = decode_to_network(req.genome, library_, decode_).param_count;
      for (const StructuralKey& key : structural_keys(req.genome)) {
        resp.blob_updates.emplace_back(key, std::string());
      }
    } catch (const std::exception& e) {
      resp = EvalResponse{};
      resp.id = req.id;
      resp.error = e.what();
    }
    out.push_back(std::move(resp));
  }
  return out;
}

EvalResponse Evaluator::run(const EvalRequest& request) {
  return run_batch(std::span(&request, 1)).at(0);
}

EvalRequest make_eval_request(std::uint64_t id, const Individual& individual,
                              const WeightAssignment& assignment,
                              const EvalBudget& budget,
                              const CellLibrary& library) {
  EvalRequest req;
  req.id = id;
  req.kind = RequestKind::kEvaluate;
  if (const auto* g1 = std::get_if<Stage1Genome>(&individual.genome)) {
    req.genome = expand_to_stage2(*g1, library);
  } else {
    req.genome = std::get<Stage2Genome>(individual.genome);
  }
  req.assignment = assignment;
  req.epochs = budget.epochs;
  req.dataset_id = budget.dataset_id;
  req.seed = budget.seed;
  return req;
}

EvalResponse evaluate(const Individual& individual,
                      const WeightAssignment& assignment,
                      const EvalBudget& budget, Evaluator& backend,
                      const CellLibrary& library, std::uint64_t id) {
  EvalResponse resp = backend.run(
      make_eval_request(id, individual, assignment, budget, library));
  if (resp.error) {
    throw EvaluatorError("evaluation of genome " + std::to_string(id) +
                         " failed: " + *resp.error);
  }
  if (!resp.fitness) {
    throw EvaluatorError("evaluation of genome " + std::to_string(id) +
                         " returned no fitness");
  }
  return resp;
}

}  // namespace tsenas
