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

#ifndef TSENAS_GENOME_HPP_
#define TSENAS_GENOME_HPP_

#include <climits>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tsenas/common.hpp"
#include "tsenas/search_space.hpp"

namespace tsenas {

// Macro gene of cell j (1-based). Index 0 names the network input layer.
struct CellGene {
  int prev = 0;
  int skip = 0;
  int cell_code = 1;

  friend bool operator==(const CellGene&, const CellGene&) = default;
};

// Rough-stage encoding: the chain of cell codes plus skip connections.
struct Stage1Genome {
  std::vector<CellGene> genes;

  int depth() const { return static_cast<int>(genes.size()); }
  friend bool operator==(const Stage1Genome&, const Stage1Genome&) = default;
};

struct Stage2Gene {
  CellGene macro;
  CellGraph micro;

  friend bool operator==(const Stage2Gene&, const Stage2Gene&) = default;
};

// Fine-stage encoding: every position owns an explicit copy of its cell DAG.
struct Stage2Genome {
  std::vector<Stage2Gene> genes;

  int depth() const { return static_cast<int>(genes.size()); }
  Stage1Genome macro() const;
  int live_node_count() const;
  friend bool operator==(const Stage2Genome&, const Stage2Genome&) = default;
};

using Genome = std::variant<Stage1Genome, Stage2Genome>;

int depth(const Genome& genome);
int stage_of(const Genome& genome);

struct DepthBounds {
  int n_min = 1;
  int n_max = INT_MAX;
};

std::vector<CellType> type_vector(const Stage1Genome& genome,
                                  const CellLibrary& library);
std::vector<CellType> type_vector(const Stage2Genome& genome,
                                  const CellLibrary& library);
int reduction_count(const Stage1Genome& genome, const CellLibrary& library);
// Upper bound on reduction cells implied by the initialization counter rule.
constexpr int max_reduction_cells(int depth) { return depth / 2 + 1; }

ValidationResult validate_stage1(const Stage1Genome& genome,
                                 const CellLibrary& library,
                                 DepthBounds bounds = {});
ValidationResult validate_stage2(const Stage2Genome& genome,
                                 const CellLibrary& library,
                                 DepthBounds bounds = {});
ValidationResult validate_genome(const Genome& genome,
                                 const CellLibrary& library,
                                 DepthBounds bounds = {});

// Deep-copies each position's template graph. Throws std::invalid_argument on
// an invalid input genome.
Stage2Genome expand_to_stage2(const Stage1Genome& genome,
                              const CellLibrary& library,
                              DepthBounds bounds = {});

// ---------------------------------------------------------------------------
// Structural keys

struct StructuralKey {
  int cell_code = 0;
  std::uint64_t graph_hash = 0;

  // 18 hex digits: two for the code, sixteen for the hash.
  std::string hex() const;
  static StructuralKey from_hex(const std::string& text);

  friend auto operator<=>(const StructuralKey&,
                          const StructuralKey&) = default;
};

// Drops pruned rows and reindexes the remaining references.
CellGraph normalize_graph(const CellGraph& graph);
std::string canonical_graph_string(const CellGraph& graph);
std::uint64_t graph_hash(const CellGraph& graph);

StructuralKey structural_key(int cell_code, const CellGraph& graph);
StructuralKey structural_key(std::size_t position, const Stage2Genome& genome);
StructuralKey template_key(const CellLibrary& library, int cell_code);
std::vector<StructuralKey> structural_keys(const Stage2Genome& genome);

std::string canonical_string(const Stage1Genome& genome);
std::string canonical_string(const Stage2Genome& genome);
std::uint64_t genome_hash(const Genome& genome);

// ---------------------------------------------------------------------------
// Decoding to a shape-annotated network

struct TensorShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

std::string to_string(const TensorShape& shape);

enum class LayerKind {
  kInput,
  kStem,
  kProjection,
  kNode,
  kCellOutput,
  kGlobalPool,
  kLinear
};

const char* to_string(LayerKind kind);

struct LayerEdge {
  int from = 0;
  int op_code = 0;  // 0: no operation (plain data flow)
  int stride = 1;
  std::string op_label;

  friend bool operator==(const LayerEdge&, const LayerEdge&) = default;
};

struct Layer {
  int id = 0;
  LayerKind kind = LayerKind::kInput;
  std::string label;
  TensorShape shape;
  std::vector<LayerEdge> inputs;
  int cell = 0;        // 1-based cell position, 0 outside cells
  int cell_code = 0;
  int node_index = -1;  // node index inside the cell

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct NetworkGraph {
  std::vector<Layer> layers;  // topological order, id == position
  std::vector<int> chain_outputs;  // layer id of chain index 0..N
  TensorShape pre_head_shape;
  int projection_count = 0;
  std::int64_t param_count = 0;

  const Layer& output() const { return layers.back(); }
};

struct DecodeConfig {
  TensorShape input_shape{32, 32, 3};
  int stem_channels = 16;
  int num_classes = 10;
};

// Throws std::invalid_argument on an invalid genome and std::runtime_error
// (naming the cell position) when shapes cannot be resolved.
NetworkGraph decode_to_network(const Stage2Genome& genome,
                               const CellLibrary& library,
                               const DecodeConfig& config = {});

std::string export_dot(const NetworkGraph& network);
nlohmann::ordered_json network_to_json(const NetworkGraph& network);

// ---------------------------------------------------------------------------
// Genome files: {"stage": 1|2, "genes": [...]}

nlohmann::ordered_json genome_to_json(const Genome& genome);
// Parses and validates. Throws ConfigError on schema or validation failure,
// or when `expected_stage` is given and differs from the file's tag.
Genome genome_from_json(const nlohmann::json& doc, const CellLibrary& library,
                        DepthBounds bounds = {},
                        std::optional<int> expected_stage = std::nullopt);

// Structural parse only (no validation), used by the wire protocol.
Genome genome_from_json_unchecked(const nlohmann::json& doc,
                                  std::optional<int> expected_stage =
                                      std::nullopt);

// Canonical text: one gene per line, stable byte-for-byte.
std::string serialize_genome(const Genome& genome);
Genome parse_genome(const std::string& text, const CellLibrary& library,
                    DepthBounds bounds = {},
                    std::optional<int> expected_stage = std::nullopt);
void write_genome(const std::filesystem::path& path, const Genome& genome);
Genome read_genome(const std::filesystem::path& path,
                   const CellLibrary& library, DepthBounds bounds = {},
                   std::optional<int> expected_stage = std::nullopt);

}  // namespace tsenas

#endif  // TSENAS_GENOME_HPP_
