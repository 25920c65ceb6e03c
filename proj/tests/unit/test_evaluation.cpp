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

#include <cstdlib>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "tsenas/evaluation.hpp"
#include "tsenas/weight_store.hpp"

using namespace tsenas;
using fixtures::chain;
using fixtures::lib;

namespace {

std::uint64_t ref_fnv(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Canonical text of a genome without pruned nodes.
std::string ref_canonical(const Stage2Genome& g) {
  std::string out = "s2;";
  for (const auto& gene : g.genes) {
    out += std::to_string(gene.macro.prev) + "," + std::to_string(gene.macro.skip) +
           "," + std::to_string(gene.macro.cell_code) + "[";
    for (std::size_t k = 0; k < gene.micro.nodes.size(); ++k) {
      const NodeGene& n = gene.micro.nodes[k];
      if (k) out += "|";
      out += std::to_string(n.in1) + "," + std::to_string(n.in2) + "," +
             std::to_string(n.op1) + "," + std::to_string(n.op2);
    }
    out += "];";
  }
  return out;
}

double ref_fitness(const Stage2Genome& g, int n_min, int n_max, int target) {
  const double t_depth =
      std::max(0.0, 1.0 - std::abs(g.depth() - target) / double(std::max(1, n_max - n_min)));
  std::set<int> codes;
  int conv = 0;
  int total = 0;
  for (const auto& gene : g.genes) {
    codes.insert(gene.macro.cell_code);
    for (const NodeGene& n : gene.micro.nodes) {
      if (n.pruned()) continue;
      for (int op : {n.op1, n.op2}) {
        ++total;
        // Codes 2-4 and 9-13 are convolutions.
        conv += (op >= 2 && op <= 4) || op >= 9;
      }
    }
  }
  const double t_div = codes.size() / 8.0;
  const double t_ops = double(conv) / total;
  const double t_noise = double(ref_fnv(ref_canonical(g)) % 1000) / 999.0;
  return 0.35 * t_depth + 0.25 * t_div + 0.25 * t_ops + 0.15 * t_noise;
}

std::string worker_cmd(const std::string& env = "") {
  return env + (env.empty() ? "" : " ") + "python3 '" TSENAS_FIXTURES_DIR "/echo_worker.py'";
}

EvalRequest request(std::uint64_t id, const std::string& dataset = "fashion-mnist-1k") {
  EvalRequest r;
  r.id = id;
  r.genome = expand_to_stage2(chain({1, 5, 2}), lib());
  r.assignment.entries.assign(3, std::nullopt);
  r.epochs = 10;
  r.dataset_id = dataset;
  r.seed = id * 7;
  return r;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("reference hash") {
  CHECK(ref_fnv("") == 0xcbf29ce484222325ULL);
  CHECK(ref_fnv("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("surrogate terms") {
  SurrogateConfig cfg;
  const Stage2Genome all = expand_to_stage2(chain({1, 5, 2, 6, 3, 7, 4, 8}), lib());
  CHECK(surrogate_terms(all, lib(), cfg).diversity == 1.0);
  CHECK(surrogate_terms(all, lib(), cfg).depth == 1.0);

  Stage2Genome conv = expand_to_stage2(chain({1, 2, 3}), lib());
  for (auto& gene : conv.genes) {
    for (auto& n : gene.micro.nodes) n.op1 = n.op2 = 11;
  }
  CHECK(surrogate_terms(conv, lib(), cfg).ops == 1.0);

  cfg.pin_noise = true;
  CHECK(surrogate_terms(conv, lib(), cfg).noise == 0.0);

  SurrogateConfig bad;
  bad.w_noise = 0.5;
  CHECK_THROWS_AS(surrogate_fitness(all, lib(), bad), std::invalid_argument);
  Stage2Genome broken = all;
  broken.genes[0].micro.nodes[0].in1 = 9;
  CHECK_THROWS_AS(surrogate_fitness(broken, lib(), cfg), std::invalid_argument);
}

TEST_CASE("surrogate matches an independent recomputation") {
  Rng rng(31);
  const SurrogateConfig cfg;
  for (int t = 0; t < 300; ++t) {
    Stage2Genome g = expand_to_stage2(random_stage1({4, 12}, lib(), rng), lib());
    if (t % 2) g = fine_mutation(g, rng);
    const double f = surrogate_fitness(g, lib(), cfg);
    CHECK(f == doctest::Approx(ref_fitness(g, 4, 12, 8)).epsilon(1e-12));
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    for (int rep = 0; rep < 3; ++rep) CHECK(surrogate_fitness(g, lib(), cfg) == f);
  }
}

TEST_CASE("more distinct codes never lower the pinned surrogate") {
  SurrogateConfig cfg;
  cfg.pin_noise = true;
  // Same depth and all-convolution edges; only the code count differs.
  auto all_conv = [](Stage2Genome g) {
    for (auto& gene : g.genes) {
      for (auto& n : gene.micro.nodes) n.op1 = n.op2 = 10;
    }
    return g;
  };
  const Stage2Genome few = all_conv(expand_to_stage2(chain({1, 1, 1, 1}), lib()));
  const Stage2Genome many = all_conv(expand_to_stage2(chain({1, 2, 3, 4}), lib()));
  CHECK(surrogate_fitness(many, lib(), cfg) > surrogate_fitness(few, lib(), cfg));
}

TEST_CASE("surrogate evaluator delegates") {
  const SurrogateConfig cfg;
  SurrogateEvaluator eval(lib(), cfg);
  const Individual ind{chain({1, 5, 2, 6})};
  const EvalResponse r = evaluate(ind, {}, EvalBudget{}, eval, lib(), 17);
  CHECK(r.id == 17);
  CHECK(*r.fitness == surrogate_fitness(expand_to_stage2(chain({1, 5, 2, 6}), lib()), lib(), cfg));
  CHECK(r.param_count > 0);
  CHECK(r.blob_updates.size() == 4);

  EvalRequest bad = request(3);
  bad.genome.genes[0].micro.nodes[0].op1 = 99;
  const EvalResponse err = eval.run(bad);
  CHECK(err.error.has_value());
  CHECK_FALSE(err.fitness.has_value());
}

TEST_CASE("base64") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foo") == "Zm9v");
  CHECK(base64_decode("Zm8=") == "fo");
  const std::string bytes("\0\xff\x10 z", 5);
  CHECK(base64_decode(base64_encode(bytes)) == bytes);
  CHECK_THROWS(base64_decode("abc"));
  CHECK_THROWS(base64_decode("a!c="));
}

TEST_CASE("protocol round trip") {
  EvalRequest req = request(5);
  req.kind = RequestKind::kTrainSupernet;
  req.assignment.entries[1] = template_key(lib(), 5);
  const std::string line = protocol_encode(req);
  CHECK(line.back() == '\n');
  CHECK(std::count(line.begin(), line.end(), '\n') == 1);
  CHECK(std::get<EvalRequest>(protocol_decode(line.substr(0, line.size() - 1))) == req);

  EvalResponse resp;
  resp.id = 5;
  resp.fitness = 0.125;
  resp.param_count = 1234;
  resp.blob_updates.emplace_back(template_key(lib(), 1), std::string("\0\1", 2));
  const std::string rl = protocol_encode(resp);
  CHECK(std::get<EvalResponse>(protocol_decode(rl.substr(0, rl.size() - 1))) == resp);

  EvalResponse error;
  error.id = 6;
  error.error = "out of memory";
  const std::string el = protocol_encode(error);
  CHECK(std::get<EvalResponse>(protocol_decode(el.substr(0, el.size() - 1))) == error);
}

TEST_CASE("protocol errors") {
  const std::string line = protocol_encode(request(1));
  CHECK_THROWS_AS(protocol_decode(line.substr(0, line.size() / 2), 4), ProtocolError);
  try {
    protocol_decode("[1,2]", 9);
  } catch (const ProtocolError& e) {
    CHECK(e.line() == 9);
  }
  CHECK_THROWS_AS(protocol_decode(R"({"id": 1, "kind": "dance"})"), ProtocolError);
  CHECK_THROWS_AS(protocol_decode(R"({"id": 1})"), ProtocolError);

  ProtocolReader reader;
  reader.feed(line.substr(0, 10));
  CHECK_FALSE(reader.next().has_value());
  CHECK(reader.has_partial());
  CHECK_THROWS_AS(reader.finish(), ProtocolError);
  reader.feed(line.substr(10));
  CHECK(reader.next().has_value());
  CHECK_NOTHROW(reader.finish());
}

TEST_CASE("external evaluator with the echo worker") {
  ExternalEvaluator eval(worker_cmd(), "", 2);
  std::vector<EvalRequest> batch;
  for (std::uint64_t id = 10; id < 15; ++id) batch.push_back(request(id));
  const auto out = eval.run_batch(batch);
  REQUIRE(out.size() == 5);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].id == batch[i].id);
    CHECK(*out[i].fitness == 0.5);
    CHECK(out[i].blob_updates.empty());
  }
  // The worker survives across batches.
  CHECK(*eval.run(request(20)).fitness == 0.5);

  const WeightStore store = init_from_supernet(lib(), eval, 100);
  CHECK(store.size() == 8);
  for (const auto& [key, blob] : store.blobs()) CHECK_FALSE(blob.bytes.empty());
}

TEST_CASE("external evaluator surfaces worker errors") {
  ExternalEvaluator eval(worker_cmd(), "", 1);
  const Individual ind{chain({1, 5, 2})};
  try {
    evaluate(ind, {}, EvalBudget{10, "fail", 0}, eval, lib(), 77);
    FAIL("expected EvaluatorError");
  } catch (const EvaluatorError& e) {
    CHECK(std::string(e.what()).find("77") != std::string::npos);
  }

  ExternalEvaluator garbage(worker_cmd("ECHO_MODE=garbage"), "", 1);
  CHECK_THROWS_AS(garbage.run(request(1)), EvaluatorError);
  ExternalEvaluator quitter(worker_cmd("ECHO_MODE=exit"), "", 1);
  CHECK_THROWS_AS(quitter.run(request(1)), EvaluatorError);
  ExternalEvaluator missing("/nonexistent/worker", "", 1);
  CHECK_THROWS_AS(missing.run(request(1)), EvaluatorError);
}

}  // TEST_SUITE
