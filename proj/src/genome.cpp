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

#include "tsenas/genome.hpp"

#include <fstream>
#include <sstream>

namespace tsenas {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ValidationResult validate_macro(const std::vector<CellGene>& genes,
                                const CellLibrary& library,
                                DepthBounds bounds) {
  ValidationResult result;
  const int n = static_cast<int>(genes.size());
  if (n < bounds.n_min || n > bounds.n_max) {
    result.add("depth out of range: N = " + std::to_string(n) +
               " not in [" + std::to_string(bounds.n_min) + ", " +
               std::to_string(bounds.n_max) + "]");
  }
  if (n == 0) return result;
  int reductions = 0;
  for (int j = 1; j <= n; ++j) {
    const CellGene& g = genes[static_cast<std::size_t>(j - 1)];
    const std::string where = "gene " + std::to_string(j) + ": ";
    if (g.prev != j - 1) {
      result.add(where + "prev must be " + std::to_string(j - 1) + ", got " +
                 std::to_string(g.prev));
    }
    if (j == 1) {
      if (g.skip != 0) result.add(where + "skip must be 0 for the first cell");
    } else if (g.skip == j - 1) {
      result.add(where + "skip equals previous cell");
    } else if (g.skip < 0 || g.skip > j - 2) {
      result.add(where + "skip " + std::to_string(g.skip) +
                 " out of range [0, " + std::to_string(j - 2) + "]");
    }
    if (g.cell_code < 1 ||
        g.cell_code > static_cast<int>(library.cells().size())) {
      result.add(where + "cell code " + std::to_string(g.cell_code) +
                 " out of range");
    } else if (library.cell_type(g.cell_code) == CellType::kReduction) {
      ++reductions;
    }
  }
  if (reductions > max_reduction_cells(n)) {
    result.add("too many reduction cells: " + std::to_string(reductions) +
               " > " + std::to_string(max_reduction_cells(n)));
  }
  return result;
}

void append_graph(std::string& out, const CellGraph& graph) {
  const CellGraph normal = normalize_graph(graph);
  out += '[';
  for (std::size_t k = 0; k < normal.nodes.size(); ++k) {
    const NodeGene& n = normal.nodes[k];
    if (k != 0) out += '|';
    out += std::to_string(n.in1) + ',' + std::to_string(n.in2) + ',' +
           std::to_string(n.op1) + ',' + std::to_string(n.op2);
  }
  out += ']';
}

void append_macro(std::string& out, const CellGene& g) {
  out += std::to_string(g.prev) + ',' + std::to_string(g.skip) + ',' +
         std::to_string(g.cell_code);
}

}  // namespace

Stage1Genome Stage2Genome::macro() const {
  Stage1Genome out;
  out.genes.reserve(genes.size());
  for (const auto& g : genes) out.genes.push_back(g.macro);
  return out;
}

int Stage2Genome::live_node_count() const {
  int total = 0;
  for (const auto& g : genes) total += g.micro.live_count();
  return total;
}

int depth(const Genome& genome) {
  return std::visit([](const auto& g) { return g.depth(); }, genome);
}

int stage_of(const Genome& genome) {
  return std::holds_alternative<Stage1Genome>(genome) ? 1 : 2;
}

std::vector<CellType> type_vector(const Stage1Genome& genome,
                                  const CellLibrary& library) {
  std::vector<CellType> types;
  types.reserve(genome.genes.size());
  for (const auto& g : genome.genes) {
    types.push_back(library.cell_type(g.cell_code));
  }
  return types;
}

std::vector<CellType> type_vector(const Stage2Genome& genome,
                                  const CellLibrary& library) {
  return type_vector(genome.macro(), library);
}

int reduction_count(const Stage1Genome& genome, const CellLibrary& library) {
  int count = 0;
  for (const auto& g : genome.genes) {
    if (library.cell_type(g.cell_code) == CellType::kReduction) ++count;
  }
  return count;
}

ValidationResult validate_stage1(const Stage1Genome& genome,
                                 const CellLibrary& library,
                                 DepthBounds bounds) {
  return validate_macro(genome.genes, library, bounds);
}

ValidationResult validate_stage2(const Stage2Genome& genome,
                                 const CellLibrary& library,
                                 DepthBounds bounds) {
  ValidationResult result = validate_stage1(genome.macro(), library, bounds);
  for (std::size_t i = 0; i < genome.genes.size(); ++i) {
    result.merge(validate_cell_graph(genome.genes[i].micro),
                 "cell " + std::to_string(i + 1) + ": ");
  }
  return result;
}

ValidationResult validate_genome(const Genome& genome,
                                 const CellLibrary& library,
                                 DepthBounds bounds) {
  if (const auto* g1 = std::get_if<Stage1Genome>(&genome)) {
    return validate_stage1(*g1, library, bounds);
  }
  return validate_stage2(std::get<Stage2Genome>(genome), library, bounds);
}

Stage2Genome expand_to_stage2(const Stage1Genome& genome,
                              const CellLibrary& library,
                              DepthBounds bounds) {
  ValidationResult check = validate_stage1(genome, library, bounds);
  if (!check.ok()) {
    throw std::invalid_argument("cannot expand invalid genome: " +
                                check.to_string());
  }
  Stage2Genome out;
  out.genes.reserve(genome.genes.size());
  for (const auto& g : genome.genes) {
    out.genes.push_back({g, library.cell_by_code(g.cell_code).graph});
  }
  return out;
}

std::string StructuralKey::hex() const {
  return to_hex(static_cast<std::uint64_t>(cell_code), 2) + to_hex(graph_hash);
}

StructuralKey StructuralKey::from_hex(const std::string& text) {
  if (text.size() != 18) {
    throw std::invalid_argument("structural key must be 18 hex digits: " +
                                text);
  }
  return {static_cast<int>(parse_hex(std::string_view(text).substr(0, 2))),
          parse_hex(std::string_view(text).substr(2))};
}

CellGraph normalize_graph(const CellGraph& graph) {
  std::vector<int> remap(static_cast<std::size_t>(graph.num_nodes()), -1);
  remap[0] = 0;
  remap[1] = 1;
  int next = kNumCellInputs;
  CellGraph out;
  for (int i = kNumCellInputs; i < graph.num_nodes(); ++i) {
    if (graph.node(i).pruned()) continue;
    remap[static_cast<std::size_t>(i)] = next++;
  }
  auto map_ref = [&](int ref) {
    if (ref < 0 || ref >= graph.num_nodes()) return ref;
    const int mapped = remap[static_cast<std::size_t>(ref)];
    return mapped < 0 ? ref : mapped;
  };
  for (int i = kNumCellInputs; i < graph.num_nodes(); ++i) {
    const NodeGene& n = graph.node(i);
    if (n.pruned()) continue;
    out.nodes.push_back({map_ref(n.in1), map_ref(n.in2), n.op1, n.op2});
  }
  return out;
}

std::string canonical_graph_string(const CellGraph& graph) {
  std::string out;
  append_graph(out, graph);
  return out;
}

std::uint64_t graph_hash(const CellGraph& graph) {
  return fnv1a64(canonical_graph_string(graph));
}

StructuralKey structural_key(int cell_code, const CellGraph& graph) {
  return {cell_code, graph_hash(graph)};
}

StructuralKey structural_key(std::size_t position, const Stage2Genome& genome) {
  const Stage2Gene& gene = genome.genes.at(position);
  return structural_key(gene.macro.cell_code, gene.micro);
}

StructuralKey template_key(const CellLibrary& library, int cell_code) {
  return structural_key(cell_code, library.cell_by_code(cell_code).graph);
}

std::vector<StructuralKey> structural_keys(const Stage2Genome& genome) {
  std::vector<StructuralKey> keys;
  keys.reserve(genome.genes.size());
  for (std::size_t i = 0; i < genome.genes.size(); ++i) {
    keys.push_back(structural_key(i, genome));
  }
  return keys;
}

std::string canonical_string(const Stage1Genome& genome) {
  std::string out = "s1;";
  for (const auto& g : genome.genes) {
    append_macro(out, g);
    out += ';';
  }
  return out;
}

std::string canonical_string(const Stage2Genome& genome) {
  std::string out = "s2;";
  for (const auto& g : genome.genes) {
    append_macro(out, g.macro);
    append_graph(out, g.micro);
    out += ';';
  }
  return out;
}

std::uint64_t genome_hash(const Genome& genome) {
  return std::visit([](const auto& g) { return fnv1a64(canonical_string(g)); },
                    genome);
}

// ---------------------------------------------------------------------------
// JSON

ordered_json genome_to_json(const Genome& genome) {
  ordered_json doc;
  doc["stage"] = stage_of(genome);
  ordered_json genes = ordered_json::array();
  std::visit(
      [&genes](const auto& g) {
        using G = std::decay_t<decltype(g)>;
        for (const auto& gene : g.genes) {
          ordered_json item;
          if constexpr (std::is_same_v<G, Stage1Genome>) {
            item["prev"] = gene.prev;
            item["skip"] = gene.skip;
            item["cell"] = gene.cell_code;
          } else {
            item["prev"] = gene.macro.prev;
            item["skip"] = gene.macro.skip;
            item["cell"] = gene.macro.cell_code;
            ordered_json nodes = ordered_json::array();
            for (const auto& n : gene.micro.nodes) {
              nodes.push_back({n.in1, n.in2, n.op1, n.op2});
            }
            item["nodes"] = std::move(nodes);
          }
          genes.push_back(std::move(item));
        }
      },
      genome);
  doc["genes"] = std::move(genes);
  return doc;
}

Genome genome_from_json_unchecked(const json& doc,
                                  std::optional<int> expected_stage) {
  Genome genome;
  try {
    const int stage = doc.at("stage").get<int>();
    if (stage != 1 && stage != 2) {
      throw ConfigError("genome stage must be 1 or 2, got " +
                        std::to_string(stage));
    }
    if (expected_stage && *expected_stage != stage) {
      throw ConfigError("genome stage mismatch: expected " +
                        std::to_string(*expected_stage) + ", file has " +
                        std::to_string(stage));
    }
    auto read_macro = [](const json& item) {
      return CellGene{item.at("prev").get<int>(), item.at("skip").get<int>(),
                      item.at("cell").get<int>()};
    };
    if (stage == 1) {
      Stage1Genome g;
      for (const auto& item : doc.at("genes")) g.genes.push_back(read_macro(item));
      genome = std::move(g);
    } else {
      Stage2Genome g;
      for (const auto& item : doc.at("genes")) {
        Stage2Gene gene{read_macro(item), {}};
        for (const auto& t : item.at("nodes")) {
          if (!t.is_array() || t.size() != 4) {
            throw ConfigError("genome nodes must be arrays of 4 integers");
          }
          gene.micro.nodes.push_back({t[0].get<int>(), t[1].get<int>(),
                                      t[2].get<int>(), t[3].get<int>()});
        }
        g.genes.push_back(std::move(gene));
      }
      genome = std::move(g);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("genome schema error: ") + e.what());
  }
  return genome;
}

Genome genome_from_json(const json& doc, const CellLibrary& library,
                        DepthBounds bounds, std::optional<int> expected_stage) {
  Genome genome = genome_from_json_unchecked(doc, expected_stage);
  ValidationResult check = validate_genome(genome, library, bounds);
  if (!check.ok()) {
    throw ConfigError("invalid genome: " + check.to_string());
  }
  return genome;
}

std::string serialize_genome(const Genome& genome) {
  const ordered_json doc = genome_to_json(genome);
  std::string out = "{\n  \"stage\": " + doc["stage"].dump() +
                    ",\n  \"genes\": [\n";
  const auto& genes = doc["genes"];
  for (std::size_t i = 0; i < genes.size(); ++i) {
    out += "    " + genes[i].dump();
    out += i + 1 < genes.size() ? ",\n" : "\n";
  }
  out += "  ]\n}\n";
  return out;
}

Genome parse_genome(const std::string& text, const CellLibrary& library,
                    DepthBounds bounds, std::optional<int> expected_stage) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("genome parse error: ") + e.what());
  }
  return genome_from_json(doc, library, bounds, expected_stage);
}

void write_genome(const std::filesystem::path& path, const Genome& genome) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write genome " + path.string());
  out << serialize_genome(genome);
}

Genome read_genome(const std::filesystem::path& path,
                   const CellLibrary& library, DepthBounds bounds,
                   std::optional<int> expected_stage) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open genome " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_genome(buffer.str(), library, bounds, expected_stage);
}

}  // namespace tsenas
