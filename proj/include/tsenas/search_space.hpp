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

#ifndef TSENAS_SEARCH_SPACE_HPP_
#define TSENAS_SEARCH_SPACE_HPP_

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "tsenas/common.hpp"

namespace tsenas {

inline constexpr int kNumOperations = 13;
inline constexpr int kNumCells = 8;
// Intermediate node k of a cell graph has node index k + kNumCellInputs.
inline constexpr int kNumCellInputs = 2;

enum class OpType { kNone, kConvolution, kPooling };
enum class CellType { kNormal, kReduction };

const char* to_string(OpType type);
const char* to_string(CellType type);
OpType parse_op_type(const std::string& text);
CellType parse_cell_type(const std::string& text);

struct OperationDescriptor {
  int code = 0;
  std::string name;
  OpType op_type = OpType::kNone;
  std::string abbreviation;

  friend bool operator==(const OperationDescriptor&,
                         const OperationDescriptor&) = default;
};

// Intermediate node as the 4-tuple (in1, in2, op1, op2). The all-zero tuple
// marks a pruned node.
struct NodeGene {
  int in1 = 0;
  int in2 = 0;
  int op1 = 0;
  int op2 = 0;

  bool pruned() const { return in1 == 0 && in2 == 0 && op1 == 0 && op2 == 0; }
  static constexpr NodeGene pruned_node() { return {}; }

  friend bool operator==(const NodeGene&, const NodeGene&) = default;
};

// Cell DAG: two input nodes (0, 1), the intermediate nodes, and an output
// node that sums every live intermediate without a live consumer.
struct CellGraph {
  std::vector<NodeGene> nodes;

  int num_nodes() const {
    return kNumCellInputs + static_cast<int>(nodes.size());
  }
  int output_index() const { return num_nodes(); }
  const NodeGene& node(int index) const {
    return nodes.at(static_cast<std::size_t>(index - kNumCellInputs));
  }
  NodeGene& node(int index) {
    return nodes.at(static_cast<std::size_t>(index - kNumCellInputs));
  }
  bool is_live(int index) const {
    return index < kNumCellInputs || !node(index).pruned();
  }

  int live_count() const;
  int live_edge_count() const { return 2 * live_count(); }
  // Node indices of live intermediates.
  std::vector<int> live_nodes() const;
  // Live intermediates with no live consumer, ascending.
  std::vector<int> output_fusion_set() const;

  friend bool operator==(const CellGraph&, const CellGraph&) = default;
};

ValidationResult validate_cell_graph(const CellGraph& graph);

struct CellTemplate {
  int code = 0;
  std::string name;
  CellType cell_type = CellType::kNormal;
  CellGraph graph;

  // Reduction cells halve the spatial dims and double the channels.
  int stride() const { return cell_type == CellType::kReduction ? 2 : 1; }
  int channel_multiplier() const { return stride(); }

  friend bool operator==(const CellTemplate&, const CellTemplate&) = default;
};

class CellLibrary {
 public:
  CellLibrary() = default;
  // Throws ConfigError when the content does not validate.
  CellLibrary(std::vector<OperationDescriptor> operations,
              std::vector<CellTemplate> cells);

  const std::vector<OperationDescriptor>& operations() const {
    return operations_;
  }
  const std::vector<CellTemplate>& cells() const { return cells_; }

  const OperationDescriptor& op_by_code(int code) const;
  const CellTemplate& cell_by_code(int code) const;
  CellType cell_type(int cell_code) const {
    return cell_by_code(cell_code).cell_type;
  }
  const std::vector<int>& codes_of(CellType type) const {
    return type == CellType::kNormal ? normal_codes_ : reduction_codes_;
  }

  friend bool operator==(const CellLibrary& a, const CellLibrary& b) {
    return a.operations_ == b.operations_ && a.cells_ == b.cells_;
  }

 private:
  std::vector<OperationDescriptor> operations_;
  std::vector<CellTemplate> cells_;
  std::vector<int> normal_codes_;
  std::vector<int> reduction_codes_;
};

// Checks the library-level invariants (op codes bijective onto 1..13,
// 8 cells in code order, 4 Normal then 4 Reduction, valid graphs).
ValidationResult validate_library(const std::vector<OperationDescriptor>& ops,
                                  const std::vector<CellTemplate>& cells);

// Built-in library (the same content as data/cell_library.json).
const CellLibrary& default_cell_library();

CellLibrary parse_cell_library(const std::string& text);
CellLibrary load_cell_library(const std::filesystem::path& path);
// Canonical serialization: fixed field order, one node tuple per line.
std::string serialize_cell_library(const CellLibrary& library);

}  // namespace tsenas

#endif  // TSENAS_SEARCH_SPACE_HPP_
