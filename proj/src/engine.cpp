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

#include "tsenas/engine.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "tsenas/selection.hpp"

namespace tsenas {

namespace fs = std::filesystem;

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kCheckpointFormat = 1;

const Stage1Genome& stage1(const Individual& ind) {
  return std::get<Stage1Genome>(ind.genome);
}

const Stage2Genome& stage2(const Individual& ind) {
  return std::get<Stage2Genome>(ind.genome);
}

Individual fresh_individual(SearchContext& ctx, Genome genome) {
  Individual ind;
  ind.genome = std::move(genome);
  ind.id = ctx.next_id++;
  return ind;
}

Individual best_of(std::span<const Individual> members) {
  return *std::min_element(members.begin(), members.end(),
                           [](const Individual& a, const Individual& b) {
                             return fitter(a, b);
                           });
}

const char* phase_name(Phase phase) {
  switch (phase) {
    case Phase::kInit:
      return "init";
    case Phase::kRough:
      return "rough";
    case Phase::kFine:
      return "fine";
    case Phase::kDone:
      return "done";
  }
  return "?";
}

Phase parse_phase(const std::string& text) {
  for (Phase p : {Phase::kInit, Phase::kRough, Phase::kFine, Phase::kDone}) {
    if (text == phase_name(p)) return p;
  }
  throw CheckpointError("unknown phase '" + text + "'");
}

ordered_json individual_to_json(const Individual& ind) {
  ordered_json doc;
  doc["id"] = ind.id;
  doc["genome"] = genome_to_json(ind.genome);
  if (ind.fitness) {
    doc["fitness"] = *ind.fitness;
  } else {
    doc["fitness"] = nullptr;
  }
  doc["epochs"] = ind.meta.epochs_trained;
  doc["param_count"] = ind.meta.param_count;
  ordered_json blobs = ordered_json::array();
  for (const auto& [key, payload] : ind.blobs) {
    blobs.push_back({key.hex(), base64_encode(payload)});
  }
  doc["blobs"] = std::move(blobs);
  return doc;
}

Individual individual_from_json(const json& doc, const CellLibrary& library) {
  Individual ind;
  ind.id = doc.at("id").get<std::uint64_t>();
  ind.genome = genome_from_json(doc.at("genome"), library);
  if (!doc.at("fitness").is_null()) ind.fitness = doc["fitness"].get<double>();
  ind.meta.epochs_trained = doc.at("epochs").get<int>();
  ind.meta.param_count = doc.at("param_count").get<std::int64_t>();
  for (const auto& item : doc.at("blobs")) {
    ind.blobs.emplace_back(StructuralKey::from_hex(item.at(0).get<std::string>()),
                           base64_decode(item.at(1).get<std::string>()));
  }
  return ind;
}

ordered_json individuals_to_json(std::span<const Individual> members) {
  ordered_json arr = ordered_json::array();
  for (const auto& m : members) arr.push_back(individual_to_json(m));
  return arr;
}

std::vector<Individual> individuals_from_json(const json& arr,
                                              const CellLibrary& library) {
  std::vector<Individual> out;
  for (const auto& item : arr) out.push_back(individual_from_json(item, library));
  return out;
}

void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out << text;
    if (!out) throw CheckpointError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CheckpointError("corrupt checkpoint file " + path.string() + ": " +
                          e.what());
  }
}

std::string state_token(const EngineState& s) {
  return std::string(phase_name(s.phase)) + ":" + std::to_string(s.generation) +
         ":" + std::to_string(s.next_id);
}

}  // namespace

// ---------------------------------------------------------------------------
// Stage routines

void evaluate_pending(SearchContext& ctx, std::span<Individual* const> pending) {
  const SearchConfig& cfg = ctx.config;
  std::vector<EvalRequest> requests;
  std::vector<Individual*> targets;
  for (Individual* ind : pending) {
    if (ind->evaluated()) continue;
    ValidationResult check = validate_genome(ind->genome, ctx.library, cfg.depth);
    if (!check.ok()) {
      throw std::logic_error("invalid genome reached evaluation (individual " +
                             std::to_string(ind->id) + "): " + check.to_string());
    }
    EvalBudget budget{cfg.epochs_individual, cfg.dataset_id,
                      Rng::mix(cfg.seed ^ Rng::mix(ind->id))};
    EvalRequest req = make_eval_request(ind->id, *ind, {}, budget, ctx.library);
    if (cfg.ablation == AblationMode::kNoWeightInheritance) {
      req.assignment.entries.assign(req.genome.genes.size(), std::nullopt);
    } else {
      req.assignment = inherit_weights(req.genome, ctx.store);
    }
    requests.push_back(std::move(req));
    targets.push_back(ind);
  }
  if (requests.empty()) return;
  std::vector<EvalResponse> responses = ctx.evaluator.run_batch(requests);
  if (responses.size() != requests.size()) {
    throw EvaluatorError("evaluator returned " + std::to_string(responses.size()) +
                         " responses for " + std::to_string(requests.size()) +
                         " requests");
  }
  for (std::size_t i = 0; i < responses.size(); ++i) {
    EvalResponse& resp = responses[i];
    Individual& ind = *targets[i];
    if (resp.error) {
      throw EvaluatorError("evaluator error for individual " +
                           std::to_string(ind.id) + ": " + *resp.error);
    }
    if (!resp.fitness || !(*resp.fitness >= 0.0 && *resp.fitness <= 1.0)) {
      throw EvaluatorError("evaluator returned no fitness in [0,1] for individual " +
                           std::to_string(ind.id));
    }
    ind.fitness = resp.fitness;
    ind.meta = {requests[i].epochs, resp.param_count};
    ind.blobs = std::move(resp.blob_updates);
    ++ctx.evaluations;
  }
}

Population initial_population(SearchContext& ctx) {
  Population pop = init_population(ctx.config.population, ctx.config.depth,
                                   ctx.library, ctx.rng);
  std::vector<Individual*> pending;
  for (auto& m : pop.members) {
    m.id = ctx.next_id++;
    pending.push_back(&m);
  }
  evaluate_pending(ctx, pending);
  return pop;
}

std::vector<Individual> make_offspring(SearchContext& ctx,
                                       const Population& parents) {
  const SearchConfig& cfg = ctx.config;
  const auto& members = parents.members;
  const auto crossover_mode = cfg.ablation == AblationMode::kSinglePointCrossover
                                  ? CrossoverMode::kSinglePoint
                                  : CrossoverMode::kMultiPoint;
  const auto target = static_cast<std::size_t>(cfg.population);
  std::vector<Individual> offspring;
  while (offspring.size() < target) {
    const auto& p1 = members[tournament_select(members, ctx.rng)];
    const auto& p2 = members[tournament_select(members, ctx.rng)];
    auto [q1, q2] = crossover(stage1(p1), stage1(p2), cfg.crossover_rate,
                              ctx.rng, ctx.library, crossover_mode);
    const auto& p3 = members[tournament_select(members, ctx.rng)];
    bool use_cell = ctx.rng.uniform_int(0, 1) == 0;
    if (cfg.ablation == AblationMode::kDropCellMutation) use_cell = false;
    if (cfg.ablation == AblationMode::kDropConnectMutation) use_cell = true;
    Stage1Genome q3 =
        use_cell ? cell_mutation(stage1(p3), cfg.mutation_rate, ctx.rng,
                                 ctx.library)
                 : connect_mutation(stage1(p3), cfg.mutation_rate, ctx.rng);
    offspring.push_back(fresh_individual(ctx, std::move(q1)));
    offspring.push_back(fresh_individual(ctx, std::move(q2)));
    offspring.push_back(fresh_individual(ctx, std::move(q3)));
  }
  offspring.resize(target);
  return offspring;
}

Population rough_generation(SearchContext& ctx, const Population& current) {
  std::vector<Individual> offspring = make_offspring(ctx, current);
  std::vector<Individual*> pending;
  for (auto& q : offspring) pending.push_back(&q);
  evaluate_pending(ctx, pending);
  Population next = environmental_select(current.members, offspring,
                                         ctx.config.population,
                                         ctx.config.alpha);
  next.generation = current.generation + 1;
  if (next.generation % ctx.config.update_interval == 0) {
    ctx.store.update_from_population(next.members);
  }
  return next;
}

std::vector<Individual> top_individuals(std::span<const Individual> members,
                                        int count) {
  std::vector<Individual> sorted(members.begin(), members.end());
  std::stable_sort(sorted.begin(), sorted.end(), fitter);
  sorted.resize(std::min(sorted.size(), static_cast<std::size_t>(count)));
  return sorted;
}

std::vector<Individual> fine_seed_slots(SearchContext& ctx,
                                        std::span<const Individual> survivors) {
  std::vector<Individual> slots;
  for (const auto& s : survivors) {
    Genome genome = s.genome;
    if (const auto* g1 = std::get_if<Stage1Genome>(&s.genome)) {
      genome = expand_to_stage2(*g1, ctx.library);
    }
    slots.push_back(fresh_individual(ctx, std::move(genome)));
  }
  std::vector<Individual*> pending;
  for (auto& s : slots) pending.push_back(&s);
  evaluate_pending(ctx, pending);
  return slots;
}

void fine_generation(SearchContext& ctx, std::vector<Individual>& slots) {
  const AblationMode mode = ctx.config.ablation;
  const FineMutationKinds kinds{mode != AblationMode::kDropNodeMutation,
                                mode != AblationMode::kDropEdgeMutation};
  std::vector<Individual> mutants;
  std::vector<std::optional<Individual>> pruned;
  for (const auto& slot : slots) {
    const Stage2Genome& g = stage2(slot);
    mutants.push_back(fresh_individual(ctx, fine_mutation(g, ctx.rng, kinds)));
    if (mode == AblationMode::kNoPruning) {
      pruned.emplace_back();
      continue;
    }
    PruneResult pr = prune(g, ctx.rng);
    if (pr.pruned) {
      pruned.push_back(fresh_individual(ctx, std::move(pr.genome)));
    } else {
      pruned.emplace_back();
    }
  }
  std::vector<Individual*> pending;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    pending.push_back(&mutants[i]);
    if (pruned[i]) pending.push_back(&*pruned[i]);
  }
  evaluate_pending(ctx, pending);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Individual* p = pruned[i] ? &*pruned[i] : nullptr;
    switch (fine_select_best(slots[i], mutants[i], p)) {
      case FineChoice::kOld:
        break;
      case FineChoice::kMutated:
        slots[i] = std::move(mutants[i]);
        break;
      case FineChoice::kPruned:
        slots[i] = std::move(*pruned[i]);
        break;
    }
  }
}

std::vector<Individual> rough_search(SearchContext& ctx,
                                     std::vector<HistoryEntry>* history) {
  Population pop = initial_population(ctx);
  for (int t = 0; t < ctx.config.rough_generations; ++t) {
    pop = rough_generation(ctx, pop);
    if (history) {
      history->push_back(
          summarize(static_cast<int>(history->size()) + 1, pop.members));
    }
  }
  return top_individuals(pop.members, ctx.config.fine_population);
}

Individual fine_search(SearchContext& ctx, std::span<const Individual> seeds,
                       std::vector<HistoryEntry>* history) {
  std::vector<Individual> slots = fine_seed_slots(ctx, seeds);
  for (int t = 0; t < ctx.config.fine_generations; ++t) {
    fine_generation(ctx, slots);
    if (history) {
      history->push_back(
          summarize(static_cast<int>(history->size()) + 1, slots));
    }
  }
  return best_of(slots);
}

std::unique_ptr<Evaluator> make_evaluator(const SearchConfig& config,
                                          const CellLibrary& library,
                                          const std::string& config_path) {
  if (config.backend == "external") {
    return std::make_unique<ExternalEvaluator>(config.worker_cmd, config_path,
                                               config.workers);
  }
  return std::make_unique<SurrogateEvaluator>(
      library, config.surrogate_config(), config.decode);
}

// ---------------------------------------------------------------------------
// SearchEngine

SearchEngine::SearchEngine(SearchConfig config, const CellLibrary& library,
                           Evaluator& evaluator,
                           std::optional<fs::path> checkpoint_dir)
    : config_(std::move(config)),
      library_(&library),
      evaluator_(&evaluator),
      checkpoint_dir_(std::move(checkpoint_dir)) {
  config_.validate();
  state_.rng = Rng(config_.seed);
}

SearchContext SearchEngine::context() {
  return SearchContext{config_,        *library_,         *evaluator_,
                       state_.store,   state_.rng,        state_.next_id,
                       state_.evaluations};
}

void SearchEngine::absorb(const SearchContext& ctx) {
  state_.next_id = ctx.next_id;
  state_.evaluations = ctx.evaluations;
}

void SearchEngine::step() {
  SearchContext ctx = context();
  switch (state_.phase) {
    case Phase::kInit: {
      EvalBudget budget{config_.epochs_supernet, config_.dataset_id,
                        Rng::mix(config_.seed)};
      state_.store = init_from_supernet(*library_, *evaluator_,
                                        config_.epochs_supernet, budget);
      state_.rough = initial_population(ctx);
      state_.phase = Phase::kRough;
      state_.generation = 0;
      break;
    }
    case Phase::kRough:
      if (state_.generation < config_.rough_generations) {
        state_.rough = rough_generation(ctx, state_.rough);
        ++state_.generation;
        state_.history.push_back(summarize(
            static_cast<int>(state_.history.size()) + 1, state_.rough.members));
      } else if (config_.ablation == AblationMode::kNoFineStage) {
        state_.phase = Phase::kDone;
      } else {
        state_.slots = fine_seed_slots(
            ctx, top_individuals(state_.rough.members, config_.fine_population));
        state_.phase = Phase::kFine;
        state_.generation = 0;
      }
      break;
    case Phase::kFine:
      if (state_.generation < config_.fine_generations) {
        fine_generation(ctx, state_.slots);
        ++state_.generation;
        state_.history.push_back(summarize(
            static_cast<int>(state_.history.size()) + 1, state_.slots));
      } else {
        state_.phase = Phase::kDone;
      }
      break;
    case Phase::kDone:
      break;
  }
  absorb(ctx);
}

bool SearchEngine::run(int step_budget) {
  const auto start = std::chrono::steady_clock::now();
  int executed = 0;
  while (state_.phase != Phase::kDone &&
         (step_budget < 0 || executed < step_budget)) {
    step();
    ++executed;
    if (checkpoint_dir_) save_checkpoint(*checkpoint_dir_);
  }
  wall_time_ += std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
  return state_.phase == Phase::kDone;
}

SearchResult SearchEngine::result() const {
  SearchResult out;
  out.history = state_.history;
  out.wall_time_seconds = wall_time_;
  out.evaluations = state_.evaluations;
  if (!state_.slots.empty()) {
    out.best = best_of(state_.slots);
  } else if (!state_.rough.members.empty()) {
    out.best = best_of(state_.rough.members);
    if (const auto* g1 = std::get_if<Stage1Genome>(&out.best.genome)) {
      out.best.genome = expand_to_stage2(*g1, *library_);
    }
  }
  return out;
}

void SearchEngine::save_checkpoint(const fs::path& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CheckpointError("cannot create " + dir.string());
  const std::string token = state_token(state_);
  state_.store.save(dir / "weights");

  ordered_json population;
  population["token"] = token;
  population["generation"] = state_.rough.generation;
  population["rough"] = individuals_to_json(state_.rough.members);
  population["slots"] = individuals_to_json(state_.slots);
  write_atomic(dir / "population.json", population.dump() + "\n");

  ordered_json rng;
  rng["token"] = token;
  rng["seed"] = state_.rng.seed();
  rng["counter"] = state_.rng.counter();
  write_atomic(dir / "rng.json", rng.dump(2) + "\n");

  ordered_json state;
  state["format"] = kCheckpointFormat;
  state["token"] = token;
  state["config_hash"] = config_hash(config_);
  state["config"] = config_to_json(config_);
  state["phase"] = phase_name(state_.phase);
  state["generation"] = state_.generation;
  state["next_id"] = state_.next_id;
  state["evaluations"] = state_.evaluations;
  state["weights_cycle"] = state_.store.cycle();
  ordered_json history = ordered_json::array();
  for (const auto& h : state_.history) {
    history.push_back({h.generation, h.best, h.mean, h.median_depth});
  }
  state["history"] = std::move(history);
  write_atomic(dir / "state.json", state.dump(2) + "\n");
}

SearchConfig SearchEngine::checkpoint_config(const fs::path& checkpoint_dir) {
  const json state = read_json(checkpoint_dir / "state.json");
  try {
    return config_from_json(state.at("config"));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt state.json: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("corrupt state.json: ") + e.what());
  }
}

SearchEngine SearchEngine::resume(const fs::path& checkpoint_dir,
                                  const SearchConfig& config,
                                  const CellLibrary& library,
                                  Evaluator& evaluator) {
  const json state = read_json(checkpoint_dir / "state.json");
  SearchEngine engine(config, library, evaluator, checkpoint_dir);
  try {
    if (state.at("format").get<int>() != kCheckpointFormat) {
      throw CheckpointError("checkpoint format version mismatch");
    }
    if (state.at("config_hash").get<std::string>() != config_hash(config)) {
      throw CheckpointError(
          "checkpoint was written with a different config (hash mismatch)");
    }
    const std::string token = state.at("token").get<std::string>();
    const json population = read_json(checkpoint_dir / "population.json");
    const json rng = read_json(checkpoint_dir / "rng.json");
    if (population.at("token") != token || rng.at("token") != token) {
      throw CheckpointError("torn checkpoint: files disagree on state token");
    }
    EngineState& s = engine.state_;
    s.phase = parse_phase(state.at("phase").get<std::string>());
    s.generation = state.at("generation").get<int>();
    s.next_id = state.at("next_id").get<std::uint64_t>();
    s.evaluations = state.at("evaluations").get<std::int64_t>();
    for (const auto& row : state.at("history")) {
      s.history.push_back({row.at(0).get<int>(), row.at(1).get<double>(),
                           row.at(2).get<double>(), row.at(3).get<double>()});
    }
    s.rough.members = individuals_from_json(population.at("rough"), library);
    s.rough.generation = population.at("generation").get<int>();
    s.slots = individuals_from_json(population.at("slots"), library);
    s.rng = Rng(rng.at("seed").get<std::uint64_t>(),
                rng.at("counter").get<std::uint64_t>());
    if (s.phase != Phase::kInit) {
      s.store = WeightStore::load(checkpoint_dir / "weights");
      if (s.store.cycle() != state.at("weights_cycle").get<std::int64_t>()) {
        throw CheckpointError("torn checkpoint: weight store cycle mismatch");
      }
    }
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }
  return engine;
}

SearchResult run_search(const SearchConfig& config, const CellLibrary& library,
                        Evaluator& evaluator) {
  SearchEngine engine(config, library, evaluator);
  engine.run();
  return engine.result();
}

}  // namespace tsenas
