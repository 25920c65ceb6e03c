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

#ifndef TSENAS_ENGINE_HPP_
#define TSENAS_ENGINE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsenas/evaluation.hpp"
#include "tsenas/evolution.hpp"
#include "tsenas/rng.hpp"
#include "tsenas/weight_store.hpp"

namespace tsenas {

enum class AblationMode {
  kNone,
  kNoFineStage,
  kNoWeightInheritance,
  kSinglePointCrossover,
  kDropCellMutation,
  kDropConnectMutation,
  kDropNodeMutation,
  kDropEdgeMutation,
  kNoPruning,
};

const char* to_string(AblationMode mode);
// Throws ConfigError("unknown ablation mode ...").
AblationMode parse_ablation_mode(const std::string& text);
const std::vector<AblationMode>& all_ablation_modes();

struct SearchConfig {
  int population = 100;         // P
  int rough_generations = 100;  // T0
  int fine_population = 30;     // S
  int fine_generations = 50;    // T1
  double crossover_rate = 0.8;  // gamma
  double mutation_rate = 0.2;   // beta
  double alpha = 0.005;
  DepthBounds depth{4, 12};
  int epochs_individual = 10;
  int epochs_supernet = 100;
  int update_interval = 1;
  std::uint64_t seed = 0;
  std::string backend = "surrogate";
  std::string dataset_id = "fashion-mnist-1k";
  int workers = 1;
  std::string worker_cmd;
  std::string library_path;  // empty: built-in library
  DecodeConfig decode;
  SurrogateConfig surrogate;
  AblationMode ablation = AblationMode::kNone;

  // Throws ConfigError on out-of-range values.
  void validate() const;
  // SurrogateConfig with the search's depth bounds filled in.
  SurrogateConfig surrogate_config() const;
};

// JSON keys mirror the field names: P, T0, S, T1, gamma, beta, alpha, N_min,
// N_max, epochs_individual, epochs_supernet, update_interval, seed, backend,
// dataset_id, workers, worker_cmd, library, input_shape, stem_channels,
// num_classes, surrogate{...}, ablation. Unknown keys are rejected.
SearchConfig config_from_json(const nlohmann::json& doc);
nlohmann::ordered_json config_to_json(const SearchConfig& config);
// Reads a config file; `env_seed` applies only when the file has no seed.
SearchConfig load_config(const std::filesystem::path& path,
                         std::optional<std::uint64_t> env_seed = std::nullopt);
std::string config_hash(const SearchConfig& config);

struct HistoryEntry {
  int generation = 0;
  double best = 0.0;
  double mean = 0.0;
  double median_depth = 0.0;

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

HistoryEntry summarize(int generation, std::span<const Individual> members);
std::string history_to_csv(const std::vector<HistoryEntry>& history);
// Throws std::runtime_error on a missing header, bad row, or empty table.
std::vector<HistoryEntry> history_from_csv(const std::string& text);

struct SearchResult {
  Individual best;
  std::vector<HistoryEntry> history;
  double wall_time_seconds = 0.0;
  std::int64_t evaluations = 0;
};

// Mutable search state shared by the stage routines.
struct SearchContext {
  const SearchConfig& config;
  const CellLibrary& library;
  Evaluator& evaluator;
  WeightStore& store;
  Rng& rng;
  std::uint64_t next_id = 1;
  std::int64_t evaluations = 0;
};

// Inherit, short-train and score every unevaluated individual in one batch.
// Responses are joined in submission order. Throws EvaluatorError naming
// the individual on an evaluator-reported error, std::logic_error if a genome
// is invalid at evaluation time.
void evaluate_pending(SearchContext& ctx, std::span<Individual* const> pending);

Population initial_population(SearchContext& ctx);
// Offspring batch Q_t of exactly P unevaluated individuals.
std::vector<Individual> make_offspring(SearchContext& ctx,
                                       const Population& parents);
// One rough generation: offspring, evaluation, environmental selection and
// (every update_interval generations) the weight-store refresh.
Population rough_generation(SearchContext& ctx, const Population& current);
std::vector<Individual> top_individuals(std::span<const Individual> members,
                                        int count);
// Expands and re-evaluates rough survivors into fine-stage slots.
std::vector<Individual> fine_seed_slots(SearchContext& ctx,
                                        std::span<const Individual> survivors);
// One fine generation; each slot keeps the best of {old, mutant, pruned}.
void fine_generation(SearchContext& ctx, std::vector<Individual>& slots);

// Whole stages (no checkpointing), appending to `history` when given.
std::vector<Individual> rough_search(SearchContext& ctx,
                                     std::vector<HistoryEntry>* history);
Individual fine_search(SearchContext& ctx, std::span<const Individual> seeds,
                       std::vector<HistoryEntry>* history);

enum class Phase { kInit, kRough, kFine, kDone };

struct EngineState {
  Phase phase = Phase::kInit;
  int generation = 0;  // generations completed in the current phase
  Population rough;
  std::vector<Individual> slots;
  Rng rng;
  WeightStore store;
  std::vector<HistoryEntry> history;
  std::uint64_t next_id = 1;
  std::int64_t evaluations = 0;

  friend bool operator==(const EngineState&, const EngineState&) = default;
};

// Builds the evaluator named by the config's backend.
std::unique_ptr<Evaluator> make_evaluator(const SearchConfig& config,
                                          const CellLibrary& library,
                                          const std::string& config_path = {});

// Orchestrates SuperNet initialization, rough search, fine search and
// checkpointing. With a checkpoint directory, state is persisted after every
// step as {state.json, population.json, rng.json, weights/}.
class SearchEngine {
 public:
  SearchEngine(SearchConfig config, const CellLibrary& library,
               Evaluator& evaluator,
               std::optional<std::filesystem::path> checkpoint_dir = {});

  // Throws CheckpointError on a corrupt checkpoint, a format mismatch, or a
  // config whose hash differs from the one recorded.
  static SearchEngine resume(const std::filesystem::path& checkpoint_dir,
                             const SearchConfig& config,
                             const CellLibrary& library, Evaluator& evaluator);
  // Reads the config recorded in a checkpoint.
  static SearchConfig checkpoint_config(
      const std::filesystem::path& checkpoint_dir);

  // Runs until done, or until `step_budget` steps were executed by this call
  // (negative: unlimited). SuperNet initialization, every generation and each
  // stage hand-off count as one step. Returns true once the search is done.
  bool run(int step_budget = -1);
  SearchResult result() const;

  const EngineState& state() const { return state_; }
  const SearchConfig& config() const { return config_; }
  void save_checkpoint(const std::filesystem::path& dir) const;

 private:
  void step();
  SearchContext context();
  void absorb(const SearchContext& ctx);

  SearchConfig config_;
  const CellLibrary* library_;
  Evaluator* evaluator_;
  std::optional<std::filesystem::path> checkpoint_dir_;
  EngineState state_;
  double wall_time_ = 0.0;
};

// Convenience: SuperNet init, rough and fine search with no checkpointing.
SearchResult run_search(const SearchConfig& config, const CellLibrary& library,
                        Evaluator& evaluator);

struct VariantSummary {
  std::string name;
  std::vector<double> best;  // final best fitness per seed
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> mean_trajectory;  // per generation, averaged over seeds
};

struct AblationReport {
  AblationMode mode = AblationMode::kNone;
  std::vector<std::uint64_t> seeds;
  VariantSummary baseline;
  VariantSummary ablated;

  std::string to_text() const;
  std::string trajectories_csv() const;
};

// Runs the full search and the ablated variant over `repeats` seeds
// (config.seed, config.seed + 1, ...).
AblationReport ablate(const SearchConfig& config, AblationMode mode,
                      int repeats, const CellLibrary& library,
                      const std::function<std::unique_ptr<Evaluator>(
                          const SearchConfig&)>& make_backend);

}  // namespace tsenas

#endif  // TSENAS_ENGINE_HPP_
