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

#ifndef TSENAS_EVALUATION_HPP_
#define TSENAS_EVALUATION_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tsenas/evolution.hpp"
#include "tsenas/genome.hpp"

namespace tsenas {

// Per position: the store key to inherit from, or nullopt for fresh init.
struct WeightAssignment {
  std::vector<std::optional<StructuralKey>> entries;

  std::size_t inherited_count() const;
  friend bool operator==(const WeightAssignment&,
                         const WeightAssignment&) = default;
};

enum class RequestKind { kTrainSupernet, kEvaluate };

struct EvalRequest {
  std::uint64_t id = 0;
  RequestKind kind = RequestKind::kEvaluate;
  Stage2Genome genome;
  WeightAssignment assignment;
  int epochs = 10;
  std::string dataset_id;
  std::uint64_t seed = 0;

  friend bool operator==(const EvalRequest&, const EvalRequest&) = default;
};

// Exactly one of fitness / error is present.
struct EvalResponse {
  std::uint64_t id = 0;
  std::optional<double> fitness;
  std::int64_t param_count = 0;
  std::vector<BlobUpdate> blob_updates;
  std::optional<std::string> error;

  friend bool operator==(const EvalResponse&, const EvalResponse&) = default;
};

// ---------------------------------------------------------------------------
// NDJSON wire protocol

using ProtocolMessage = std::variant<EvalRequest, EvalResponse>;

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

// One UTF-8 JSON object terminated by '\n'.
std::string protocol_encode(const ProtocolMessage& message);
// `line` excludes the terminator. Throws ProtocolError.
ProtocolMessage protocol_decode(std::string_view line,
                                std::size_t line_number = 1);

// Reassembles messages from arbitrarily chunked input.
class ProtocolReader {
 public:
  void feed(std::string_view chunk);
  // Next complete message, or nullopt when more input is needed.
  std::optional<ProtocolMessage> next();
  // Throws ProtocolError if a partial (unterminated) line is buffered.
  void finish() const;
  bool has_partial() const { return !buffer_.empty(); }

 private:
  std::string buffer_;
  std::size_t lines_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluators

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  // Responses in request order. Throws EvaluatorError on transport failure
  // or malformed replies; evaluator-reported errors come back as responses.
  virtual std::vector<EvalResponse> run_batch(
      std::span<const EvalRequest> requests) = 0;

  EvalResponse run(const EvalRequest& request);
};

struct SurrogateConfig {
  double w_depth = 0.35;
  double w_div = 0.25;
  double w_ops = 0.25;
  double w_noise = 0.15;
  int target_depth = 8;
  DepthBounds bounds{4, 12};
  // Test mode: pins the noise term to 0 for analytic assertions.
  bool pin_noise = false;
};

struct SurrogateTerms {
  double depth = 0.0;
  double diversity = 0.0;
  double ops = 0.0;
  double noise = 0.0;
};

// Throws std::invalid_argument on an invalid genome or when the weights do
// not sum to 1.
SurrogateTerms surrogate_terms(const Stage2Genome& genome,
                               const CellLibrary& library,
                               const SurrogateConfig& config);
double surrogate_fitness(const Stage2Genome& genome, const CellLibrary& library,
                         const SurrogateConfig& config);

class SurrogateEvaluator : public Evaluator {
 public:
  SurrogateEvaluator(const CellLibrary& library, SurrogateConfig config,
                     DecodeConfig decode = {})
      : library_(library), config_(config), decode_(decode) {}

  std::vector<EvalResponse> run_batch(
      std::span<const EvalRequest> requests) override;

 private:
  const CellLibrary& library_;
  SurrogateConfig config_;
  DecodeConfig decode_;
};

// Child processes speaking the NDJSON protocol on stdin/stdout, one request
// in flight per worker. `command` runs under /bin/sh with `config_path`
// appended as its argument.
class ExternalEvaluator : public Evaluator {
 public:
  ExternalEvaluator(std::string command, std::string config_path,
                    int workers = 1);
  ~ExternalEvaluator() override;
  ExternalEvaluator(const ExternalEvaluator&) = delete;
  ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

  std::vector<EvalResponse> run_batch(
      std::span<const EvalRequest> requests) override;

 private:
  struct Worker;
  void start();
  std::string command_;
  std::string config_path_;
  int worker_count_;
  std::vector<std::unique_ptr<Worker>> workers_;
};

struct EvalBudget {
  int epochs = 10;
  std::string dataset_id = "fashion-mnist-1k";
  std::uint64_t seed = 0;
};

// Builds the wire request for an individual (stage-1 genomes are expanded).
EvalRequest make_eval_request(std::uint64_t id, const Individual& individual,
                              const WeightAssignment& assignment,
                              const EvalBudget& budget,
                              const CellLibrary& library);

// One request/response exchange; throws EvaluatorError (naming the request
// id) when the evaluator reports an error.
EvalResponse evaluate(const Individual& individual,
                      const WeightAssignment& assignment,
                      const EvalBudget& budget, Evaluator& backend,
                      const CellLibrary& library, std::uint64_t id = 0);

}  // namespace tsenas

#endif  // TSENAS_EVALUATION_HPP_
