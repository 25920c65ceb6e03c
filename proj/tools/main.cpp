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

// tsenas command-line interface.
//
// Exit codes: 0 success, 1 internal error, 2 usage or config error,
// 3 evaluator error, 4 checkpoint error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tsenas/engine.hpp"

namespace fs = std::filesystem;
using namespace tsenas;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitEvaluator = 3;
constexpr int kExitCheckpoint = 4;

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("TSENAS_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const std::uint64_t value = std::stoull(raw, &used);
    if (raw[used] != '\0') throw std::invalid_argument(raw);
    return value;
  } catch (const std::exception&) {
    throw ConfigError(std::string("TSENAS_SEED is not an unsigned integer: ") +
                      raw);
  }
}

// Relative library paths resolve against the config file's directory.
CellLibrary library_for(const SearchConfig& cfg, const fs::path& config_path) {
  if (cfg.library_path.empty()) return default_cell_library();
  fs::path lib = cfg.library_path;
  if (lib.is_relative() && !config_path.empty()) {
    lib = config_path.parent_path() / lib;
  }
  return load_cell_library(lib);
}

CellLibrary library_from_flag(const std::string& path) {
  return path.empty() ? default_cell_library() : load_cell_library(path);
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::string worker_cmd;
  int workers = 0;
};

void apply(SearchConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (!o.backend.empty()) cfg.backend = o.backend;
  if (!o.worker_cmd.empty()) cfg.worker_cmd = o.worker_cmd;
  if (o.workers > 0) cfg.workers = o.workers;
  cfg.validate();
}

std::string render(const Genome& genome, const CellLibrary& lib,
                   const DecodeConfig& decode, const std::string& format) {
  const Stage2Genome g2 =
      std::holds_alternative<Stage2Genome>(genome)
          ? std::get<Stage2Genome>(genome)
          : expand_to_stage2(std::get<Stage1Genome>(genome), lib);
  const NetworkGraph net = decode_to_network(g2, lib, decode);
  if (format == "json") return network_to_json(net).dump(2) + "\n";
  return export_dot(net);
}

void write_artifacts(const fs::path& out, const SearchEngine& engine,
                     const CellLibrary& lib) {
  const SearchResult res = engine.result();
  fs::create_directories(out);
  nlohmann::ordered_json best = genome_to_json(res.best.genome);
  best["fitness"] = res.best.fitness.value_or(0.0);
  write_text(out / "best.genome.json", best.dump(2) + "\n");
  write_text(out / "best.dot",
             render(res.best.genome, lib, engine.config().decode, "dot"));
  write_text(out / "history.csv", history_to_csv(res.history));
  std::cout << "best fitness " << res.best.fitness.value_or(0.0) << ", depth "
            << depth(res.best.genome) << ", " << res.evaluations
            << " evaluations, " << res.wall_time_seconds << " s\n";
}

int drive(SearchEngine& engine, const fs::path& out, const CellLibrary& lib,
          int max_steps) {
  const bool done = engine.run(max_steps);
  if (!done) {
    std::cout << "stopped after step budget; resume from "
              << (out / "checkpoint").string() << "\n";
    return 0;
  }
  write_artifacts(out, engine, lib);
  return 0;
}

// -- run --------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string out;
  Overrides overrides;
  int max_steps = -1;
};

int cmd_run(const RunArgs& a) {
  SearchConfig cfg = load_config(a.config, env_seed());
  apply(cfg, a.overrides);
  const CellLibrary lib = library_for(cfg, a.config);
  const fs::path out = a.out;
  fs::create_directories(out);
  write_text(out / "config.json", config_to_json(cfg).dump(2) + "\n");
  std::unique_ptr<Evaluator> evaluator =
      make_evaluator(cfg, lib, fs::absolute(out / "config.json").string());
  SearchEngine engine(cfg, lib, *evaluator, out / "checkpoint");
  return drive(engine, out, lib, a.max_steps);
}

// -- resume -----------------------------------------------------------------

struct ResumeArgs {
  std::string checkpoint;
  std::string config;
  std::string out;
  std::string worker_cmd;
  int max_steps = -1;
};

int cmd_resume(const ResumeArgs& a) {
  const fs::path ckpt = a.checkpoint;
  if (!fs::is_directory(ckpt)) {
    throw CheckpointError("checkpoint directory not found: " + ckpt.string());
  }
  SearchConfig cfg = a.config.empty() ? SearchEngine::checkpoint_config(ckpt)
                                      : load_config(a.config, env_seed());
  if (!a.worker_cmd.empty()) cfg.worker_cmd = a.worker_cmd;
  const fs::path out =
      a.out.empty() ? fs::absolute(ckpt).parent_path() : fs::path(a.out);
  const CellLibrary lib = library_for(cfg, a.config);
  fs::create_directories(out);
  std::unique_ptr<Evaluator> evaluator =
      make_evaluator(cfg, lib, fs::absolute(out / "config.json").string());
  SearchEngine engine = SearchEngine::resume(ckpt, cfg, lib, *evaluator);
  return drive(engine, out, lib, a.max_steps);
}

// -- decode / export-best / validate ----------------------------------------

struct DecodeArgs {
  std::string genome;
  std::string format = "dot";
  std::string library;
};

int cmd_decode(const DecodeArgs& a) {
  const CellLibrary lib = library_from_flag(a.library);
  const Genome genome = read_genome(a.genome, lib);
  std::cout << render(genome, lib, DecodeConfig{}, a.format);
  return 0;
}

struct ExportArgs {
  std::string checkpoint;
  std::string format = "dot";
};

int cmd_export_best(const ExportArgs& a) {
  const fs::path ckpt = a.checkpoint;
  const SearchConfig cfg = SearchEngine::checkpoint_config(ckpt);
  const CellLibrary lib = library_for(cfg, {});
  SurrogateEvaluator unused(lib, cfg.surrogate_config(), cfg.decode);
  const SearchEngine engine = SearchEngine::resume(ckpt, cfg, lib, unused);
  const SearchResult res = engine.result();
  if (res.best.genome.valueless_by_exception() || depth(res.best.genome) == 0) {
    throw CheckpointError("checkpoint holds no evaluated population yet");
  }
  if (a.format == "genome") {
    std::cout << genome_to_json(res.best.genome).dump(2) << "\n";
  } else {
    std::cout << render(res.best.genome, lib, cfg.decode, a.format);
  }
  return 0;
}

struct ValidateArgs {
  std::string genome;
  std::string config;
  std::string library;
};

int cmd_validate(const ValidateArgs& a) {
  if (a.genome.empty() && a.config.empty() && a.library.empty()) {
    throw ConfigError("validate needs --genome, --config or --library");
  }
  CellLibrary lib = library_from_flag(a.library);
  if (!a.library.empty()) std::cout << "library ok\n";
  if (!a.config.empty()) {
    const SearchConfig cfg = load_config(a.config);
    lib = library_for(cfg, a.config);
    std::cout << "config ok (hash " << config_hash(cfg) << ")\n";
  }
  if (!a.genome.empty()) {
    const Genome g = read_genome(a.genome, lib);
    std::cout << "genome ok: stage " << stage_of(g) << ", depth " << depth(g)
              << "\n";
  }
  return 0;
}

// -- ablate -----------------------------------------------------------------

struct AblateArgs {
  std::string config;
  std::string mode;
  std::string out;
  int seeds = 20;
  Overrides overrides;
};

int cmd_ablate(const AblateArgs& a) {
  AblationMode mode;
  try {
    mode = parse_ablation_mode(a.mode);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  SearchConfig cfg = load_config(a.config, env_seed());
  apply(cfg, a.overrides);
  const CellLibrary lib = library_for(cfg, a.config);
  const std::string cfg_path = fs::absolute(a.config).string();
  const AblationReport report = ablate(
      cfg, mode, a.seeds, lib, [&](const SearchConfig& c) {
        return make_evaluator(c, lib, cfg_path);
      });
  std::cout << report.to_text();
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "ablation.txt", report.to_text());
    write_text(fs::path(a.out) / "trajectories.csv", report.trajectories_csv());
  }
  return 0;
}

// -- stats ------------------------------------------------------------------

struct StatsArgs {
  std::string history;
  std::string config;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void print_phase(const char* name, std::span<const HistoryEntry> rows) {
  if (rows.empty()) return;
  double mean = 0.0;
  for (const auto& r : rows) mean += r.mean;
  mean /= static_cast<double>(rows.size());
  std::printf("%s: generations %d-%d, final best %.6f, average mean %.6f\n", name,
              rows.front().generation, rows.back().generation, rows.back().best,
              mean);
}

int cmd_stats(const StatsArgs& a) {
  const fs::path history_path = a.history;
  if (!fs::exists(history_path)) {
    throw ConfigError("history not found: " + history_path.string());
  }
  std::vector<HistoryEntry> rows;
  try {
    rows = history_from_csv(read_text(history_path));
  } catch (const std::runtime_error& e) {
    throw ConfigError(history_path.string() + ": " + e.what());
  }
  fs::path config_path = a.config;
  if (config_path.empty()) config_path = history_path.parent_path() / "config.json";
  std::size_t rough = rows.size();
  if (fs::exists(config_path)) {
    const SearchConfig cfg = load_config(config_path);
    rough = std::min(rows.size(), static_cast<std::size_t>(cfg.rough_generations));
  }
  const std::span<const HistoryEntry> all(rows);
  print_phase("rough", all.first(rough));
  print_phase("fine", all.subspan(rough));

  constexpr std::size_t kWindow = 30;
  const std::size_t g = rows.size();
  const std::size_t windows = std::min<std::size_t>(5, (g + kWindow - 1) / kWindow);
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t begin = w * kWindow;
    const std::size_t end = w + 1 == windows ? g : begin + kWindow;
    std::vector<double> depths;
    double best = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      depths.push_back(rows[i].median_depth);
      best = std::max(best, rows[i].best);
    }
    const auto [lo, hi] = std::minmax_element(depths.begin(), depths.end());
    std::printf(
        "window %zu: generations %d-%d, best %.6f, median N min %g median %g "
        "max %g\n",
        w + 1, rows[begin].generation, rows[end - 1].generation, best, *lo,
        median(depths), *hi);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tsenas: two-stage evolutionary neural architecture search"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tsenas 1.0.0");

  auto add_overrides = [](CLI::App* sub, Overrides& o) {
    sub->add_option("--seed", o.seed, "Seed (overrides config and TSENAS_SEED)");
    sub->add_option("--backend", o.backend, "Evaluator backend")
        ->check(CLI::IsMember({"surrogate", "external"}));
    sub->add_option("--worker-cmd", o.worker_cmd, "External worker command");
    sub->add_option("--workers", o.workers, "External worker processes")
        ->check(CLI::PositiveNumber);
  };

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a search");
  run_cmd->add_option("--config", run.config, "Config file")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--max-steps", run.max_steps,
                      "Stop after this many engine steps (checkpoint kept)");
  add_overrides(run_cmd, run.overrides);

  ResumeArgs resume;
  auto* resume_cmd = app.add_subcommand("resume", "Resume from a checkpoint");
  resume_cmd->add_option("--checkpoint", resume.checkpoint, "Checkpoint dir")
      ->required();
  resume_cmd->add_option("--config", resume.config,
                         "Config to check against the checkpoint");
  resume_cmd->add_option("--out", resume.out,
                         "Output directory (default: checkpoint parent)");
  resume_cmd->add_option("--worker-cmd", resume.worker_cmd,
                         "External worker command");
  resume_cmd->add_option("--max-steps", resume.max_steps,
                         "Stop after this many engine steps");

  DecodeArgs decode;
  auto* decode_cmd = app.add_subcommand("decode", "Decode a genome file");
  decode_cmd->add_option("--genome", decode.genome, "Genome JSON")->required();
  decode_cmd->add_option("--format", decode.format, "Output format")
      ->check(CLI::IsMember({"dot", "json"}));
  decode_cmd->add_option("--library", decode.library, "Cell library JSON");

  ExportArgs exp;
  auto* export_cmd =
      app.add_subcommand("export-best", "Print the best genome of a checkpoint");
  export_cmd->add_option("--checkpoint", exp.checkpoint, "Checkpoint dir")
      ->required()
      ->check(CLI::ExistingDirectory);
  export_cmd->add_option("--format", exp.format, "dot, json or genome")
      ->check(CLI::IsMember({"dot", "json", "genome"}));

  AblateArgs abl;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare a variant to the full search");
  ablate_cmd->add_option("--config", abl.config, "Config file")
      ->required()
      ->check(CLI::ExistingFile);
  ablate_cmd->add_option("--mode", abl.mode, "Ablation mode")->required();
  ablate_cmd->add_option("--seeds", abl.seeds, "Number of seeds")
      ->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--out", abl.out, "Report directory");
  add_overrides(ablate_cmd, abl.overrides);

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Summarize a history CSV");
  stats_cmd->add_option("--history", stats.history, "history.csv")->required();
  stats_cmd->add_option("--config", stats.config,
                        "Run config (default: config.json next to history)");

  ValidateArgs val;
  auto* validate_cmd =
      app.add_subcommand("validate", "Check a genome, config or cell library");
  validate_cmd->add_option("--genome", val.genome, "Genome JSON");
  validate_cmd->add_option("--config", val.config, "Config file");
  validate_cmd->add_option("--library", val.library, "Cell library JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*resume_cmd) return cmd_resume(resume);
    if (*decode_cmd) return cmd_decode(decode);
    if (*export_cmd) return cmd_export_best(exp);
    if (*ablate_cmd) return cmd_ablate(abl);
    if (*stats_cmd) return cmd_stats(stats);
    if (*validate_cmd) return cmd_validate(val);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const EvaluatorError& e) {
    std::cerr << "evaluator error: " << e.what() << "\n";
    return kExitEvaluator;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
