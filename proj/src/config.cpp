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
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "tsenas/engine.hpp"

namespace tsenas {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct ModeName {
  AblationMode mode;
  const char* name;
};

constexpr ModeName kModeNames[] = {
    {AblationMode::kNone, "none"},
    {AblationMode::kNoFineStage, "no-fine-stage"},
    {AblationMode::kNoWeightInheritance, "no-weight-inheritance"},
    {AblationMode::kSinglePointCrossover, "single-point-crossover"},
    {AblationMode::kDropCellMutation, "drop-cell-mutation"},
    {AblationMode::kDropConnectMutation, "drop-connect-mutation"},
    {AblationMode::kDropNodeMutation, "drop-node-mutation"},
    {AblationMode::kDropEdgeMutation, "drop-edge-mutation"},
    {AblationMode::kNoPruning, "no-pruning"},
};

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "P",          "T0",           "S",
      "T1",         "gamma",        "beta",
      "alpha",      "N_min",        "N_max",
      "epochs_individual",          "epochs_supernet",
      "update_interval",            "seed",
      "backend",    "dataset_id",   "workers",
      "worker_cmd", "library",      "input_shape",
      "stem_channels",              "num_classes",
      "surrogate",  "ablation"};
  return keys;
}

template <typename T>
void read_if(const json& doc, const char* key, T& target) {
  if (doc.contains(key)) target = doc.at(key).get<T>();
}

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6f", value);
  return buffer;
}

}  // namespace

const char* to_string(AblationMode mode) {
  for (const auto& m : kModeNames) {
    if (m.mode == mode) return m.name;
  }
  return "?";
}

AblationMode parse_ablation_mode(const std::string& text) {
  for (const auto& m : kModeNames) {
    if (text == m.name) return m.mode;
  }
  throw ConfigError("unknown ablation mode '" + text + "'");
}

const std::vector<AblationMode>& all_ablation_modes() {
  static const std::vector<AblationMode> modes = [] {
    std::vector<AblationMode> out;
    for (const auto& m : kModeNames) {
      if (m.mode != AblationMode::kNone) out.push_back(m.mode);
    }
    return out;
  }();
  return modes;
}

void SearchConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  require(population >= 1, "P must be >= 1");
  require(fine_population >= 1, "S must be >= 1");
  require(fine_population <= population, "S must not exceed P");
  require(rough_generations >= 0 && fine_generations >= 0,
          "T0 and T1 must be >= 0");
  require(crossover_rate >= 0.0 && crossover_rate <= 1.0, "gamma not in [0,1]");
  require(mutation_rate >= 0.0 && mutation_rate <= 1.0, "beta not in [0,1]");
  require(alpha > 0.0, "alpha must be positive");
  require(depth.n_min >= 1 && depth.n_min <= depth.n_max,
          "need 1 <= N_min <= N_max");
  require(epochs_individual >= 1 && epochs_supernet >= 1,
          "epochs must be >= 1");
  require(update_interval >= 1, "update_interval must be >= 1");
  require(workers >= 1, "workers must be >= 1");
  require(backend == "surrogate" || backend == "external",
          "backend must be 'surrogate' or 'external'");
  require(backend != "external" || !worker_cmd.empty(),
          "external backend needs worker_cmd");
  require(decode.input_shape.height >= 1 && decode.input_shape.width >= 1 &&
              decode.input_shape.channels >= 1,
          "input_shape must be positive");
  require(decode.stem_channels >= 1 && decode.num_classes >= 1,
          "stem_channels and num_classes must be >= 1");
  const double total =
      surrogate.w_depth + surrogate.w_div + surrogate.w_ops + surrogate.w_noise;
  require(std::abs(total - 1.0) <= 1e-9, "surrogate weights must sum to 1");
}

SurrogateConfig SearchConfig::surrogate_config() const {
  SurrogateConfig out = surrogate;
  out.bounds = depth;
  return out;
}

SearchConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!known_keys().count(key)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  SearchConfig cfg;
  try {
    read_if(doc, "P", cfg.population);
    read_if(doc, "T0", cfg.rough_generations);
    read_if(doc, "S", cfg.fine_population);
    read_if(doc, "T1", cfg.fine_generations);
    read_if(doc, "gamma", cfg.crossover_rate);
    read_if(doc, "beta", cfg.mutation_rate);
    read_if(doc, "alpha", cfg.alpha);
    read_if(doc, "N_min", cfg.depth.n_min);
    read_if(doc, "N_max", cfg.depth.n_max);
    read_if(doc, "epochs_individual", cfg.epochs_individual);
    read_if(doc, "epochs_supernet", cfg.epochs_supernet);
    read_if(doc, "update_interval", cfg.update_interval);
    read_if(doc, "seed", cfg.seed);
    read_if(doc, "backend", cfg.backend);
    read_if(doc, "dataset_id", cfg.dataset_id);
    read_if(doc, "workers", cfg.workers);
    read_if(doc, "worker_cmd", cfg.worker_cmd);
    read_if(doc, "library", cfg.library_path);
    if (doc.contains("input_shape")) {
      const auto shape = doc.at("input_shape").get<std::vector<int>>();
      if (shape.size() != 3) throw ConfigError("input_shape needs 3 entries");
      cfg.decode.input_shape = {shape[0], shape[1], shape[2]};
    }
    read_if(doc, "stem_channels", cfg.decode.stem_channels);
    read_if(doc, "num_classes", cfg.decode.num_classes);
    if (doc.contains("surrogate")) {
      const json& s = doc.at("surrogate");
      read_if(s, "w_depth", cfg.surrogate.w_depth);
      read_if(s, "w_div", cfg.surrogate.w_div);
      read_if(s, "w_ops", cfg.surrogate.w_ops);
      read_if(s, "w_noise", cfg.surrogate.w_noise);
      read_if(s, "target_depth", cfg.surrogate.target_depth);
      read_if(s, "pin_noise", cfg.surrogate.pin_noise);
    }
    if (doc.contains("ablation")) {
      cfg.ablation = parse_ablation_mode(doc.at("ablation").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ordered_json config_to_json(const SearchConfig& cfg) {
  ordered_json doc;
  doc["P"] = cfg.population;
  doc["T0"] = cfg.rough_generations;
  doc["S"] = cfg.fine_population;
  doc["T1"] = cfg.fine_generations;
  doc["gamma"] = cfg.crossover_rate;
  doc["beta"] = cfg.mutation_rate;
  doc["alpha"] = cfg.alpha;
  doc["N_min"] = cfg.depth.n_min;
  doc["N_max"] = cfg.depth.n_max;
  doc["epochs_individual"] = cfg.epochs_individual;
  doc["epochs_supernet"] = cfg.epochs_supernet;
  doc["update_interval"] = cfg.update_interval;
  doc["seed"] = cfg.seed;
  doc["backend"] = cfg.backend;
  doc["dataset_id"] = cfg.dataset_id;
  doc["workers"] = cfg.workers;
  doc["worker_cmd"] = cfg.worker_cmd;
  doc["library"] = cfg.library_path;
  doc["input_shape"] = {cfg.decode.input_shape.height,
                        cfg.decode.input_shape.width,
                        cfg.decode.input_shape.channels};
  doc["stem_channels"] = cfg.decode.stem_channels;
  doc["num_classes"] = cfg.decode.num_classes;
  doc["surrogate"] = {{"w_depth", cfg.surrogate.w_depth},
                      {"w_div", cfg.surrogate.w_div},
                      {"w_ops", cfg.surrogate.w_ops},
                      {"w_noise", cfg.surrogate.w_noise},
                      {"target_depth", cfg.surrogate.target_depth},
                      {"pin_noise", cfg.surrogate.pin_noise}};
  doc["ablation"] = to_string(cfg.ablation);
  return doc;
}

SearchConfig load_config(const std::filesystem::path& path,
                         std::optional<std::uint64_t> env_seed) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path.string() + ": " +
                      e.what());
  }
  if (env_seed && doc.is_object() && !doc.contains("seed")) {
    doc["seed"] = *env_seed;
  }
  return config_from_json(doc);
}

std::string config_hash(const SearchConfig& config) {
  // Worker count and command do not change results.
  ordered_json doc = config_to_json(config);
  doc.erase("workers");
  doc.erase("worker_cmd");
  return to_hex(fnv1a64(doc.dump()));
}

HistoryEntry summarize(int generation, std::span<const Individual> members) {
  HistoryEntry entry;
  entry.generation = generation;
  if (members.empty()) return entry;
  std::vector<int> depths;
  double sum = 0.0;
  entry.best = -1.0;
  for (const auto& m : members) {
    const double f = m.fitness.value_or(0.0);
    entry.best = std::max(entry.best, f);
    sum += f;
    depths.push_back(m.depth());
  }
  entry.mean = sum / static_cast<double>(members.size());
  std::sort(depths.begin(), depths.end());
  const std::size_t mid = depths.size() / 2;
  entry.median_depth = depths.size() % 2 == 1
                           ? depths[mid]
                           : 0.5 * (depths[mid - 1] + depths[mid]);
  return entry;
}

std::string history_to_csv(const std::vector<HistoryEntry>& history) {
  std::string out = "generation,best,mean,median_N\n";
  for (const auto& h : history) {
    char median[32];
    std::snprintf(median, sizeof(median), "%g", h.median_depth);
    out += std::to_string(h.generation) + "," + format_double(h.best) + "," +
           format_double(h.mean) + "," + median + "\n";
  }
  return out;
}

std::vector<HistoryEntry> history_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "generation,best,mean,median_N") {
    throw std::runtime_error("history: missing or wrong header");
  }
  std::vector<HistoryEntry> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    HistoryEntry h;
    char trailing = 0;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf%c", &h.generation, &h.best,
                    &h.mean, &h.median_depth, &trailing) != 4) {
      throw std::runtime_error("history: malformed row " + std::to_string(row));
    }
    out.push_back(h);
  }
  if (out.empty()) throw std::runtime_error("history: no generations recorded");
  return out;
}

}  // namespace tsenas
