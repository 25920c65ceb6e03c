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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tsenas/engine.hpp"
#include "tsenas/selection.hpp"

using namespace tsenas;
using fixtures::chain;
using fixtures::lib;
namespace fs = std::filesystem;

namespace {

// Pinned thresholds.
constexpr int kClosureCompositions = 10000;
constexpr double kClosureSeconds = 30.0;
constexpr int kInitSamples = 10000;
constexpr double kChiSquareMinP = 0.01;
constexpr int kRandomSelectionCases = 500;
constexpr double kRunSeconds = 60.0;
constexpr int kSeeds = 20;
constexpr int kDecoderGenomes = 200;
constexpr int kProtocolMessages = 1000;
constexpr std::size_t kLargeBlob = 1 << 20;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Verdict()>& check) {
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
}

SearchConfig desk(std::uint64_t seed) {
  SearchConfig cfg;
  cfg.population = 20;
  cfg.rough_generations = 10;
  cfg.fine_population = 5;
  cfg.fine_generations = 10;
  cfg.seed = seed;
  return cfg;
}

// -- operator closure -------------------------------------------------------

Verdict operator_closure() {
  Rng rng(1001);
  const DepthBounds bounds{4, 12};
  long invalid = 0;
  long type_changes = 0;
  long applications = 0;
  const auto start = Clock::now();
  for (int t = 0; t < kClosureCompositions; ++t) {
    Stage1Genome g = random_stage1(bounds, lib(), rng);
    const int steps = static_cast<int>(rng.uniform_int(1, 6));
    for (int s = 0; s < steps; ++s) {
      const auto before = type_vector(g, lib());
      switch (rng.uniform_int(0, 2)) {
        case 0: {
          const Stage1Genome other = random_stage1(bounds, lib(), rng);
          const auto mode = rng.bernoulli(0.5) ? CrossoverMode::kMultiPoint
                                               : CrossoverMode::kSinglePoint;
          auto [c1, c2] = crossover(g, other, 1.0, rng, lib(), mode);
          if (!validate_stage1(c2, lib(), bounds).ok()) ++invalid;
          if (type_vector(c2, lib()) != type_vector(other, lib())) ++type_changes;
          g = std::move(c1);
          break;
        }
        case 1:
          g = cell_mutation(g, 1.0, rng, lib());
          break;
        default:
          g = connect_mutation(g, 1.0, rng);
          break;
      }
      ++applications;
      if (!validate_stage1(g, lib(), bounds).ok()) ++invalid;
      if (type_vector(g, lib()) != before) ++type_changes;
    }
    Stage2Genome g2 = expand_to_stage2(g, lib());
    const int fine_steps = static_cast<int>(rng.uniform_int(1, 6));
    for (int s = 0; s < fine_steps; ++s) {
      g2 = rng.bernoulli(0.5) ? fine_mutation(g2, rng) : prune(g2, rng).genome;
      ++applications;
      if (!validate_stage2(g2, lib(), bounds).ok()) ++invalid;
      if (g2.macro() != g) ++type_changes;
    }
  }
  const double elapsed = seconds_since(start);
  std::ostringstream out;
  out << kClosureCompositions << " compositions, " << applications
      << " operator applications, " << invalid << " invalid, " << type_changes
      << " type-vector changes, " << elapsed << " s (limit " << kClosureSeconds << " s)";
  return {invalid == 0 && type_changes == 0 && elapsed < kClosureSeconds, out.str()};
}

// -- initialization ---------------------------------------------------------

Verdict initialization() {
  Rng rng(1002);
  const DepthBounds bounds{4, 12};
  const Population pop = init_population(kInitSamples, bounds, lib(), rng);
  std::vector<long> counts(static_cast<std::size_t>(bounds.n_max - bounds.n_min + 1), 0);
  long violations = 0;
  for (const auto& m : pop.members) {
    const auto& g = std::get<Stage1Genome>(m.genome);
    const int n = g.depth();
    if (n < bounds.n_min || n > bounds.n_max) {
      ++violations;
      continue;
    }
    ++counts[static_cast<std::size_t>(n - bounds.n_min)];
    int reductions = 0;
    for (int j = 1; j <= n; ++j) {
      const CellGene& gene = g.genes[static_cast<std::size_t>(j - 1)];
      if (gene.prev != j - 1) ++violations;
      if (gene.skip < 0 || gene.skip > std::max(0, j - 2)) ++violations;
      if (j >= 2 && gene.skip == gene.prev) ++violations;
      if (gene.cell_code >= 5) ++reductions;
    }
    if (reductions > n / 2 + 1) ++violations;
  }
  const double p = oracle::chi_square_uniform_p(counts);
  std::ostringstream out;
  out << kInitSamples << " individuals, " << violations
      << " rule violations, depth chi-square p = " << p << " (need > " << kChiSquareMinP << ")";
  return {violations == 0 && p > kChiSquareMinP, out.str()};
}

// -- environmental selection ------------------------------------------------

Individual at(int n, double fitness, int code = 1) {
  return fixtures::individual(chain(std::vector<int>(static_cast<std::size_t>(n), code)), fitness);
}

Verdict selection_oracle() {
  struct Case {
    std::string name;
    std::vector<Individual> candidates;
    int size;
    double alpha;
  };
  const std::vector<Case> cases{
      {"seven",
       {at(4, 0.900), at(5, 0.899), at(4, 0.800, 2), at(5, 0.799, 2), at(6, 0.798),
        at(6, 0.797, 2), at(7, 0.796)},
       4, 0.005},
      {"seven-whole-levels",
       {at(4, 0.90), at(5, 0.899), at(4, 0.80, 2), at(6, 0.799), at(4, 0.70, 3),
        at(5, 0.699, 2), at(6, 0.698, 2)},
       4, 0.005},
      {"eight",
       {at(4, 0.90), at(4, 0.899, 2), at(5, 0.897), at(4, 0.80, 3), at(5, 0.799, 2),
        at(5, 0.798, 3), at(8, 0.795), at(9, 0.795)},
       4, 0.01},
      {"eight-two-slots",
       {at(4, 0.90), at(4, 0.899, 2), at(5, 0.897), at(4, 0.80, 3), at(5, 0.799, 2),
        at(5, 0.798, 3), at(8, 0.795), at(9, 0.795)},
       5, 0.01},
  };
  int matched = 0;
  std::string mismatches;
  for (const Case& c : cases) {
    const auto idx = environmental_select_indices(c.candidates, c.size, c.alpha);
    const std::set<std::size_t> got(idx.begin(), idx.end());
    const auto want = oracle::brute_force_select(c.candidates, static_cast<std::size_t>(c.size), c.alpha);
    if (got == want) {
      ++matched;
    } else {
      mismatches += " " + c.name;
    }
  }
  Rng rng(1003);
  int random_matched = 0;
  for (int t = 0; t < kRandomSelectionCases; ++t) {
    const int n = static_cast<int>(rng.uniform_int(2, 9));
    std::vector<Individual> c;
    std::set<std::uint64_t> hashes;
    while (static_cast<int>(c.size()) < n) {
      std::vector<int> codes(static_cast<std::size_t>(rng.uniform_int(1, 4)));
      for (int& code : codes) code = static_cast<int>(rng.uniform_int(1, 4));
      Individual ind = fixtures::individual(
          chain(codes), 0.5 + 0.01 * static_cast<double>(rng.uniform_int(0, 6)));
      if (hashes.insert(ind.hash()).second) c.push_back(std::move(ind));
    }
    const int size = static_cast<int>(rng.uniform_int(1, n));
    const double alpha = 0.005 + 0.01 * static_cast<double>(rng.uniform_int(0, 3));
    const auto idx = environmental_select_indices(c, size, alpha);
    const std::set<std::size_t> got(idx.begin(), idx.end());
    if (got == oracle::brute_force_select(c, static_cast<std::size_t>(size), alpha)) {
      ++random_matched;
    }
  }
  std::ostringstream out;
  out << matched << "/" << cases.size() << " hand-built and " << random_matched << "/"
      << kRandomSelectionCases << " random cases match the exhaustive oracle";
  if (!mismatches.empty()) out << "; mismatched:" << mismatches;
  return {matched == static_cast<int>(cases.size()) && random_matched == kRandomSelectionCases,
          out.str()};
}

// -- weight store -----------------------------------------------------------

Verdict weight_store_oracle() {
  auto tkey = [](int code) { return template_key(lib(), code); };
  auto carrier = [&](const std::vector<int>& codes, double fitness, const std::string& tag) {
    Individual ind = fixtures::individual(chain(codes), fitness);
    for (int code : codes) ind.blobs.emplace_back(tkey(code), tag + std::to_string(code));
    return ind;
  };
  struct Case {
    std::string name;
    std::vector<Individual> pop;
  };
  const std::vector<Case> cases{
      {"full-coverage", {carrier({1, 5, 2, 6, 3, 7, 4, 8}, 0.9, "a"), carrier({1, 2}, 0.4, "b")}},
      {"two-individuals", {carrier({1, 3}, 0.6, "second"), carrier({1, 2}, 0.8, "best")}},
      {"partial-coverage",
       {carrier({1, 2, 5}, 0.7, "a"), carrier({3, 6}, 0.6, "b"), carrier({1, 2, 3}, 0.5, "c")}},
  };
  int passed = 0;
  std::string notes;
  for (const Case& c : cases) {
    WeightStore store;
    for (int code = 1; code <= 8; ++code) store.put(tkey(code), "init");
    bool ok = true;
    // Two cycles to exercise flag resets and monotone versions.
    for (int cycle = 0; cycle < 2; ++cycle) {
      std::map<StructuralKey, std::int64_t> before;
      std::set<StructuralKey> keys;
      for (const auto& [k, b] : store.blobs()) {
        before[k] = b.version;
        keys.insert(k);
      }
      const UpdateReport r = store.update_from_population(c.pop);
      const auto want = oracle::expected_sources(c.pop, keys);
      ok = ok && r.sources == want;
      for (const auto& [k, b] : store.blobs()) {
        const std::int64_t delta = b.version - before[k];
        const bool expected_update = want.count(k) != 0;
        ok = ok && delta == (expected_update ? 1 : 0) && b.updated_this_cycle == expected_update;
        if (expected_update) {
          // Payload came from the oracle's source individual.
          const auto& src = c.pop[want.at(k)];
          const auto it = std::find_if(src.blobs.begin(), src.blobs.end(),
                                       [&](const BlobUpdate& u) { return u.first == k; });
          ok = ok && it != src.blobs.end() && it->second == b.bytes;
        }
      }
    }
    if (ok) {
      ++passed;
    } else {
      notes += " " + c.name;
    }
  }
  std::ostringstream out;
  out << passed << "/" << cases.size()
      << " constructed cases: single write per key per cycle, best-first sources, monotone versions";
  if (!notes.empty()) out << "; failed:" << notes;
  return {passed == static_cast<int>(cases.size()), out.str()};
}

// -- end-to-end determinism -------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + TSENAS_CLI_PATH + "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism() {
  const fs::path dir = fixtures::temp_dir("acceptance_e2e");
  const std::string cfg = (fs::path(TSENAS_DATA_DIR) / "desk_config.json").string();
  const auto config = load_config(cfg);
  if (config.population != 20 || config.rough_generations != 10 ||
      config.fine_population != 5 || config.fine_generations != 10 ||
      config.seed != 42 || config.backend != "surrogate") {
    return {false, "data/desk_config.json does not hold the desk configuration"};
  }
  double worst = 0.0;
  int codes = 0;
  for (const char* out : {"a", "b"}) {
    const auto start = Clock::now();
    codes += run_cli("run --config '" + cfg + "' --out '" + (dir / out).string() + "'");
    worst = std::max(worst, seconds_since(start));
  }
  const bool genome_same = fixtures::slurp(dir / "a" / "best.genome.json") ==
                           fixtures::slurp(dir / "b" / "best.genome.json");
  const bool history_same =
      fixtures::slurp(dir / "a" / "history.csv") == fixtures::slurp(dir / "b" / "history.csv");
  const bool nonempty = !fixtures::slurp(dir / "a" / "best.genome.json").empty() &&
                        !fixtures::slurp(dir / "a" / "history.csv").empty();
  fs::remove_all(dir);
  std::ostringstream out;
  out << "two runs (P=20, T0=10, S=5, T1=10, seed 42): exit codes sum " << codes
      << ", best.genome.json " << (genome_same ? "identical" : "DIFFERENT")
      << ", history.csv " << (history_same ? "identical" : "DIFFERENT")
      << ", slowest run " << worst << " s (limit " << kRunSeconds << " s)";
  return {codes == 0 && genome_same && history_same && nonempty && worst < kRunSeconds, out.str()};
}

// -- monotonicity -----------------------------------------------------------

Verdict monotonicity() {
  int violations = 0;
  std::size_t generations = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const SearchConfig cfg = desk(42 + static_cast<std::uint64_t>(s));
    SurrogateEvaluator eval(lib(), cfg.surrogate_config(), cfg.decode);
    const SearchResult r = run_search(cfg, lib(), eval);
    if (r.history.size() != 20) ++violations;
    generations += r.history.size();
    for (std::size_t i = 1; i < r.history.size(); ++i) {
      if (r.history[i].best < r.history[i - 1].best) ++violations;
    }
  }
  std::ostringstream out;
  out << kSeeds << " seeds, " << generations << " generations, " << violations
      << " decreases of the best fitness";
  return {violations == 0, out.str()};
}

// -- two-stage benefit ------------------------------------------------------

Verdict two_stage_benefit() {
  const fs::path dir = fixtures::temp_dir("acceptance_ablate");
  const std::string cfg = (fs::path(TSENAS_DATA_DIR) / "desk_config.json").string();
  const int code = run_cli("ablate --config '" + cfg + "' --mode no-fine-stage --seeds " +
                           std::to_string(kSeeds) + " --out '" + dir.string() + "'");
  std::istringstream text(fixtures::slurp(dir / "ablation.txt"));
  fs::remove_all(dir);
  double full = -1.0;
  double ablated = -1.0;
  int full_runs = 0;
  int ablated_runs = 0;
  for (std::string line; std::getline(text, line);) {
    double mean = 0.0;
    double sd = 0.0;
    int runs = 0;
    if (std::sscanf(line.c_str(), "full: mean best %lf +- %lf over %d runs", &mean, &sd, &runs) == 3) {
      full = mean;
      full_runs = runs;
    } else if (std::sscanf(line.c_str(), "no-fine-stage: mean best %lf +- %lf over %d runs", &mean,
                           &sd, &runs) == 3) {
      ablated = mean;
      ablated_runs = runs;
    }
  }
  std::ostringstream out;
  out << "ablate report (exit " << code << "): full " << full << " over " << full_runs
      << " runs vs no-fine-stage " << ablated << " over " << ablated_runs << " runs";
  return {code == 0 && full_runs == kSeeds && ablated_runs == kSeeds && full >= 0.0 &&
              ablated >= 0.0 && full >= ablated,
          out.str()};
}

// -- decoder shape law ------------------------------------------------------

Verdict decoder_shapes() {
  Rng rng(1008);
  int mismatches = 0;
  for (int t = 0; t < kDecoderGenomes; ++t) {
    DecodeConfig cfg;
    cfg.input_shape = {static_cast<int>(rng.uniform_int(8, 64)),
                       static_cast<int>(rng.uniform_int(8, 64)),
                       static_cast<int>(rng.uniform_int(1, 3))};
    cfg.stem_channels = static_cast<int>(rng.uniform_int(4, 32));
    Stage2Genome g = expand_to_stage2(random_stage1({1, 12}, lib(), rng), lib());
    if (t % 2) g = fine_mutation(prune(g, rng).genome, rng);
    const NetworkGraph net = decode_to_network(g, lib(), cfg);
    const Stage1Genome macro = g.macro();
    const int r = reduction_count(macro, lib());
    int h = cfg.input_shape.height;
    int w = cfg.input_shape.width;
    for (int i = 0; i < r; ++i) {
      h = (h + 1) / 2;
      w = (w + 1) / 2;
    }
    const TensorShape want{h, w, cfg.stem_channels << r};
    if (net.pre_head_shape != want) ++mismatches;
    const auto chain_want = oracle::chain_shapes(
        macro, lib(), {cfg.input_shape.height, cfg.input_shape.width, cfg.input_shape.channels},
        cfg.stem_channels);
    for (std::size_t j = 0; j < chain_want.size(); ++j) {
      const TensorShape s = net.layers[static_cast<std::size_t>(net.chain_outputs.at(j))].shape;
      if (!(oracle::Shape{s.height, s.width, s.channels} == chain_want[j])) ++mismatches;
    }
  }
  std::ostringstream out;
  out << kDecoderGenomes << " random genomes, " << mismatches
      << " shape mismatches against the propagation oracle";
  return {mismatches == 0, out.str()};
}

// -- protocol ---------------------------------------------------------------

std::string random_bytes(Rng& rng, std::size_t n) {
  std::string out(n, '\0');
  for (auto& c : out) c = static_cast<char>(rng.next_u64() & 0xff);
  return out;
}

Verdict protocol_fuzz() {
  Rng rng(1009);
  std::vector<ProtocolMessage> corpus;
  int large = 0;
  for (int i = 0; i < kProtocolMessages; ++i) {
    const auto id = rng.next_u64();
    if (rng.bernoulli(0.5)) {
      EvalRequest req;
      req.id = id;
      req.kind = rng.bernoulli(0.2) ? RequestKind::kTrainSupernet : RequestKind::kEvaluate;
      req.genome = fixtures::random_stage2(rng, {1, 12});
      for (std::size_t j = 0; j < req.genome.genes.size(); ++j) {
        if (rng.bernoulli(0.5)) {
          req.assignment.entries.push_back(structural_key(j, req.genome));
        } else {
          req.assignment.entries.emplace_back();
        }
      }
      req.epochs = static_cast<int>(rng.uniform_int(1, 100));
      req.dataset_id = rng.bernoulli(0.5) ? "fashion-mnist-1k" : "naïve \"quoted\"\tset";
      req.seed = rng.next_u64();
      corpus.emplace_back(std::move(req));
    } else {
      EvalResponse resp;
      resp.id = id;
      if (rng.bernoulli(0.1)) {
        resp.error = "failure " + std::to_string(i) + "\nwith newline";
      } else {
        resp.fitness = rng.uniform01();
        resp.param_count = static_cast<std::int64_t>(rng.uniform_int(0, 1 << 30));
        const int blobs = static_cast<int>(rng.uniform_int(0, 4));
        for (int b = 0; b < blobs; ++b) {
          std::size_t size = static_cast<std::size_t>(rng.uniform_int(0, 4096));
          if (i % 100 == 1 && b == 0) {
            size = kLargeBlob;
            ++large;
          }
          resp.blob_updates.emplace_back(
              StructuralKey{static_cast<int>(rng.uniform_int(1, 8)), rng.next_u64()},
              random_bytes(rng, size));
        }
      }
      corpus.emplace_back(std::move(resp));
    }
  }
  std::string stream;
  for (const auto& m : corpus) stream += protocol_encode(m);

  int mismatches = 0;
  const int passes = 3;
  for (int pass = 0; pass < passes; ++pass) {
    ProtocolReader reader;
    std::size_t pos = 0;
    std::size_t next = 0;
    while (pos < stream.size()) {
      std::size_t chunk;
      switch (pass) {
        case 0:
          chunk = static_cast<std::size_t>(rng.uniform_int(1, 7));
          break;
        case 1:
          chunk = static_cast<std::size_t>(rng.uniform_int(1, 1 << 17));
          break;
        default:
          chunk = static_cast<std::size_t>(rng.uniform_int(1, 4096));
          break;
      }
      // Single-byte feeds are slow on megabyte lines; pass 0 walks a prefix.
      if (pass == 0 && pos > (1u << 16)) chunk = static_cast<std::size_t>(rng.uniform_int(1, 1 << 15));
      chunk = std::min(chunk, stream.size() - pos);
      reader.feed(std::string_view(stream).substr(pos, chunk));
      pos += chunk;
      while (auto m = reader.next()) {
        if (next >= corpus.size() || !(*m == corpus[next])) ++mismatches;
        ++next;
      }
    }
    reader.finish();
    if (next != corpus.size()) mismatches += static_cast<int>(corpus.size() - next);
  }
  // The same codec drives a live exchange with the echo-stub worker.
  ExternalEvaluator worker("python3 '" TSENAS_FIXTURES_DIR "/echo_worker.py'", "", 2);
  std::vector<EvalRequest> batch;
  for (const auto& m : corpus) {
    if (const auto* req = std::get_if<EvalRequest>(&m); req && batch.size() < 20) {
      batch.push_back(*req);
      batch.back().kind = RequestKind::kEvaluate;
    }
  }
  const auto replies = worker.run_batch(batch);
  int stub_mismatches = replies.size() == batch.size() ? 0 : 1;
  for (std::size_t i = 0; i < std::min(replies.size(), batch.size()); ++i) {
    if (replies[i].id != batch[i].id || !replies[i].fitness) ++stub_mismatches;
  }
  mismatches += stub_mismatches;

  std::ostringstream out;
  out << batch.size() << " echo-stub exchanges, " << corpus.size() << " messages (" << large << " with 1 MiB blobs, "
      << stream.size() / (1 << 20) << " MiB stream), " << passes
      << " chunking patterns, " << mismatches << " mismatches";
  return {mismatches == 0 && large > 0, out.str()};
}

}  // namespace

int main() {
  report("operator closure", operator_closure);
  report("initialization conformance", initialization);
  report("environmental selection oracle", selection_oracle);
  report("weight store update oracle", weight_store_oracle);
  report("end-to-end determinism", determinism);
  report("best-fitness monotonicity", monotonicity);
  report("two-stage benefit", two_stage_benefit);
  report("decoder shape law", decoder_shapes);
  report("protocol round trip", protocol_fuzz);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
