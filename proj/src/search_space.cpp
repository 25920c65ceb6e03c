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

#include "tsenas/search_space.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace tsenas {

namespace {

using nlohmann::json;

bool valid_op_code(int code) { return code >= 1 && code <= kNumOperations; }

}  // namespace

const char* to_string(OpType type) {
  switch (type) {
    case OpType::kNone:
      return "none";
    case OpType::kConvolution:
      return "convolution";
    case OpType::kPooling:
      return "pooling";
  }
  return "?";
}

const char* to_string(CellType type) {
  return type == CellType::kNormal ? "normal" : "reduction";
}

OpType parse_op_type(const std::string& text) {
  if (text == "none") return OpType::kNone;
  if (text == "convolution") return OpType::kConvolution;
  if (text == "pooling") return OpType::kPooling;
  throw ConfigError("unknown operation type '" + text + "'");
}

CellType parse_cell_type(const std::string& text) {
  if (text == "normal") return CellType::kNormal;
  if (text == "reduction") return CellType::kReduction;
  throw ConfigError("unknown cell type '" + text + "'");
}

int CellGraph::live_count() const {
  return static_cast<int>(std::count_if(
      nodes.begin(), nodes.end(), [](const NodeGene& n) { return !n.pruned(); }));
}

std::vector<int> CellGraph::live_nodes() const {
  std::vector<int> live;
  for (int i = kNumCellInputs; i < num_nodes(); ++i) {
    if (!node(i).pruned()) live.push_back(i);
  }
  return live;
}

std::vector<int> CellGraph::output_fusion_set() const {
  std::vector<bool> consumed(static_cast<std::size_t>(num_nodes()), false);
  for (int i : live_nodes()) {
    const NodeGene& n = node(i);
    if (n.in1 >= 0 && n.in1 < num_nodes()) consumed[n.in1] = true;
    if (n.in2 >= 0 && n.in2 < num_nodes()) consumed[n.in2] = true;
  }
  std::vector<int> sinks;
  for (int i : live_nodes()) {
    if (!consumed[static_cast<std::size_t>(i)]) sinks.push_back(i);
  }
  return sinks;
}

ValidationResult validate_cell_graph(const CellGraph& graph) {
  ValidationResult result;
  if (graph.live_count() == 0) {
    result.add("empty cell: no live intermediate node");
  }
  for (int i = kNumCellInputs; i < graph.num_nodes(); ++i) {
    const NodeGene& n = graph.node(i);
    if (n.pruned()) continue;
    const std::string where = "node " + std::to_string(i) + ": ";
    if (!valid_op_code(n.op1) || !valid_op_code(n.op2)) {
      result.add(where + "bad op code (" + std::to_string(n.op1) + ", " +
                 std::to_string(n.op2) + ")");
    }
    for (int input : {n.in1, n.in2}) {
      if (input < 0) {
        result.add(where + "dangling input " + std::to_string(input));
      } else if (input >= i) {
        result.add(where + "acyclicity violation: input " +
                   std::to_string(input) + " is not an earlier node");
      } else if (!graph.is_live(input)) {
        result.add(where + "dangling input " + std::to_string(input) +
                   " refers to a pruned node");
      }
    }
  }
  return result;
}

ValidationResult validate_library(const std::vector<OperationDescriptor>& ops,
                                  const std::vector<CellTemplate>& cells) {
  ValidationResult result;
  if (ops.size() != kNumOperations) {
    result.add("expected " + std::to_string(kNumOperations) +
               " operations, got " + std::to_string(ops.size()));
  }
  std::vector<int> seen(kNumOperations + 1, 0);
  for (const auto& op : ops) {
    if (!valid_op_code(op.code)) {
      result.add("operation code " + std::to_string(op.code) + " out of range");
      continue;
    }
    if (++seen[static_cast<std::size_t>(op.code)] > 1) {
      result.add("duplicate operation code " + std::to_string(op.code));
    }
    if (op.code == 1 && op.op_type != OpType::kNone) {
      result.add("operation 1 must be the identity (type none)");
    }
  }
  if (cells.size() != kNumCells) {
    result.add("expected " + std::to_string(kNumCells) +
               " cell templates, got " + std::to_string(cells.size()));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const CellTemplate& cell = cells[i];
    const std::string where =
        "cell " + std::to_string(cell.code) + " (" + cell.name + "): ";
    if (cell.code != static_cast<int>(i) + 1) {
      result.add(where + "expected code " + std::to_string(i + 1));
    }
    const CellType expected =
        cell.code <= kNumCells / 2 ? CellType::kNormal : CellType::kReduction;
    if (cell.cell_type != expected) {
      result.add(where + "expected type " + to_string(expected));
    }
    result.merge(validate_cell_graph(cell.graph), where);
  }
  return result;
}

CellLibrary::CellLibrary(std::vector<OperationDescriptor> operations,
                         std::vector<CellTemplate> cells)
    : operations_(std::move(operations)), cells_(std::move(cells)) {
  ValidationResult check = validate_library(operations_, cells_);
  if (!check.ok()) {
    throw ConfigError("invalid cell library: " + check.to_string());
  }
  std::sort(operations_.begin(), operations_.end(),
            [](const auto& a, const auto& b) { return a.code < b.code; });
  for (const auto& cell : cells_) {
    (cell.cell_type == CellType::kNormal ? normal_codes_ : reduction_codes_)
        .push_back(cell.code);
  }
}

const OperationDescriptor& CellLibrary::op_by_code(int code) const {
  if (!valid_op_code(code) || operations_.size() != kNumOperations) {
    throw std::out_of_range("operation code " + std::to_string(code) +
                            " out of range 1.." +
                            std::to_string(kNumOperations));
  }
  return operations_[static_cast<std::size_t>(code - 1)];
}

const CellTemplate& CellLibrary::cell_by_code(int code) const {
  if (code < 1 || code > static_cast<int>(cells_.size())) {
    throw std::out_of_range("cell code " + std::to_string(code) +
                            " out of range 1.." + std::to_string(kNumCells));
  }
  return cells_[static_cast<std::size_t>(code - 1)];
}

CellLibrary parse_cell_library(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("cell library parse error: ") + e.what());
  }
  try {
    std::vector<OperationDescriptor> ops;
    for (const auto& item : doc.at("operations")) {
      ops.push_back({item.at("code").get<int>(),
                     item.at("name").get<std::string>(),
                     parse_op_type(item.at("type").get<std::string>()),
                     item.at("abbreviation").get<std::string>()});
    }
    std::vector<CellTemplate> cells;
    for (const auto& item : doc.at("cells")) {
      CellTemplate cell;
      cell.code = item.at("code").get<int>();
      cell.name = item.at("name").get<std::string>();
      cell.cell_type = parse_cell_type(item.at("type").get<std::string>());
      for (const auto& tuple : item.at("nodes")) {
        if (!tuple.is_array() || tuple.size() != 4) {
          throw ConfigError("cell " + std::to_string(cell.code) +
                            ": node entries must be arrays of 4 integers");
        }
        cell.graph.nodes.push_back({tuple[0].get<int>(), tuple[1].get<int>(),
                                    tuple[2].get<int>(), tuple[3].get<int>()});
      }
      cells.push_back(std::move(cell));
    }
    return CellLibrary(std::move(ops), std::move(cells));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("cell library schema error: ") + e.what());
  }
}

CellLibrary load_cell_library(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open cell library " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_cell_library(buffer.str());
}

std::string serialize_cell_library(const CellLibrary& library) {
  std::ostringstream out;
  out << "{\n  \"operations\": [\n";
  const auto& ops = library.operations();
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const auto& op = ops[i];
    out << "    {\"code\": " << op.code
        << ", \"name\": " << json(op.name).dump()
        << ", \"type\": \"" << to_string(op.op_type)
        << "\", \"abbreviation\": " << json(op.abbreviation).dump() << "}"
        << (i + 1 < ops.size() ? ",\n" : "\n");
  }
  out << "  ],\n  \"cells\": [\n";
  const auto& cells = library.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& cell = cells[i];
    out << "    {\n      \"code\": " << cell.code
        << ",\n      \"name\": " << json(cell.name).dump()
        << ",\n      \"type\": \"" << to_string(cell.cell_type)
        << "\",\n      \"nodes\": [";
    for (std::size_t k = 0; k < cell.graph.nodes.size(); ++k) {
      const NodeGene& n = cell.graph.nodes[k];
      out << (k == 0 ? "" : ", ") << "[" << n.in1 << ", " << n.in2 << ", "
          << n.op1 << ", " << n.op2 << "]";
    }
    out << "]\n    }" << (i + 1 < cells.size() ? ",\n" : "\n");
  }
  out << "  ]\n}\n";
  return out.str();
}

}  // namespace tsenas
