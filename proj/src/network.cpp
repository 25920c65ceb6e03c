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

#include <map>
#include <sstream>

#include "tsenas/genome.hpp"

namespace tsenas {

namespace {

using nlohmann::ordered_json;

TensorShape halve(TensorShape s) {
  return {(s.height + 1) / 2, (s.width + 1) / 2, s.channels * 2};
}

// Rough weight count of one edge operation mapping `in` to `out` channels.
std::int64_t edge_params(int op_code, std::int64_t in, std::int64_t out) {
  const std::int64_t adapt = in == out ? 0 : in * out;
  switch (op_code) {
    case 1:  // identity
    case 5:
    case 6:
    case 7:
    case 8:  // pooling
      return adapt;
    case 2:
      return 3 * in * out + 3 * out * out;
    case 3:
      return 7 * in * out + 7 * out * out;
    case 4:
      return 9 * in * out;
    case 9:
      return in * out;
    case 10:
      return 9 * in * out;
    case 11:
      return 9 * in + in * out;
    case 12:
      return 25 * in + in * out;
    case 13:
      return 49 * in + in * out;
    default:
      return 0;
  }
}

std::string escape_dot(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string to_string(const TensorShape& shape) {
  return std::to_string(shape.height) + "×" + std::to_string(shape.width) +
         "×" + std::to_string(shape.channels);
}

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kInput:
      return "input";
    case LayerKind::kStem:
      return "stem";
    case LayerKind::kProjection:
      return "projection";
    case LayerKind::kNode:
      return "node";
    case LayerKind::kCellOutput:
      return "cell_output";
    case LayerKind::kGlobalPool:
      return "global_pool";
    case LayerKind::kLinear:
      return "linear";
  }
  return "?";
}

NetworkGraph decode_to_network(const Stage2Genome& genome,
                               const CellLibrary& library,
                               const DecodeConfig& config) {
  ValidationResult check = validate_stage2(genome, library);
  if (!check.ok()) {
    throw std::invalid_argument("cannot decode invalid genome: " +
                                check.to_string());
  }
  const TensorShape& in = config.input_shape;
  if (in.height < 1 || in.width < 1 || in.channels < 1 ||
      config.stem_channels < 1 || config.num_classes < 1) {
    throw std::runtime_error("decode: input shape, stem channels and class "
                             "count must be positive");
  }

  NetworkGraph net;
  auto add_layer = [&net](Layer layer) {
    layer.id = static_cast<int>(net.layers.size());
    net.layers.push_back(std::move(layer));
    return net.layers.back().id;
  };
  auto shape_of = [&net](int id) {
    return net.layers[static_cast<std::size_t>(id)].shape;
  };

  add_layer({0, LayerKind::kInput, "input", in, {}, 0, 0, -1});
  const TensorShape stem_shape{in.height, in.width, config.stem_channels};
  net.param_count += 9LL * in.channels * config.stem_channels;
  const int stem = add_layer(
      {0, LayerKind::kStem, "stem conv3", stem_shape, {{0, 10, 1, "conv3"}}, 0,
       0, -1});
  net.chain_outputs.push_back(stem);
  std::vector<int> halvings{0};

  for (int j = 1; j <= genome.depth(); ++j) {
    const Stage2Gene& gene = genome.genes[static_cast<std::size_t>(j - 1)];
    const CellTemplate& tmpl = library.cell_by_code(gene.macro.cell_code);
    const int prev = net.chain_outputs[static_cast<std::size_t>(gene.macro.prev)];
    int skip = net.chain_outputs[static_cast<std::size_t>(gene.macro.skip)];
    const TensorShape in_shape = shape_of(prev);

    if (shape_of(skip) != in_shape) {
      const int gap = halvings[static_cast<std::size_t>(gene.macro.prev)] -
                      halvings[static_cast<std::size_t>(gene.macro.skip)];
      TensorShape projected = shape_of(skip);
      for (int k = 0; k < gap; ++k) projected = halve(projected);
      if (gap < 0 || projected != in_shape) {
        throw std::runtime_error(
            "decode: cannot resolve shapes of cell " + std::to_string(j) +
            " inputs (" + to_string(in_shape) + " vs " +
            to_string(shape_of(skip)) + ")");
      }
      const int stride = 1 << gap;
      net.param_count +=
          static_cast<std::int64_t>(shape_of(skip).channels) * in_shape.channels;
      skip = add_layer({0, LayerKind::kProjection,
                        "proj conv1 /" + std::to_string(stride), in_shape,
                        {{skip, 9, stride, "conv1"}}, j, 0, -1});
      ++net.projection_count;
    }

    const bool reduce = tmpl.cell_type == CellType::kReduction;
    const TensorShape out_shape = reduce ? halve(in_shape) : in_shape;
    std::map<int, int> node_layer{{0, prev}, {1, skip}};
    for (int i : gene.micro.live_nodes()) {
      const NodeGene& n = gene.micro.node(i);
      Layer layer{0,  LayerKind::kNode, {}, out_shape, {}, j, tmpl.code, i};
      std::string label = "x" + std::to_string(i) + " =";
      bool first = true;
      for (auto [src, op] : {std::pair{n.in1, n.op1}, std::pair{n.in2, n.op2}}) {
        const std::string& abbr = library.op_by_code(op).abbreviation;
        const int stride = reduce && src < kNumCellInputs ? 2 : 1;
        const int in_c = stride == 2 ? in_shape.channels : out_shape.channels;
        net.param_count += edge_params(op, in_c, out_shape.channels);
        layer.inputs.push_back({node_layer.at(src), op, stride, abbr});
        label += (first ? " " : " + ") + abbr + "(x" + std::to_string(src) + ")";
        first = false;
      }
      layer.label = std::move(label);
      node_layer[i] = add_layer(std::move(layer));
    }
    Layer output{0, LayerKind::kCellOutput, {}, out_shape, {}, j, tmpl.code,
                 gene.micro.output_index()};
    output.label = "cell " + std::to_string(j) + " out (add)";
    for (int i : gene.micro.output_fusion_set()) {
      output.inputs.push_back({node_layer.at(i), 0, 1, ""});
    }
    net.chain_outputs.push_back(add_layer(std::move(output)));
    halvings.push_back(halvings.back() + (reduce ? 1 : 0));
  }

  net.pre_head_shape = shape_of(net.chain_outputs.back());
  const int pool = add_layer({0, LayerKind::kGlobalPool, "global avg pool",
                              {1, 1, net.pre_head_shape.channels},
                              {{net.chain_outputs.back(), 0, 1, ""}}, 0, 0, -1});
  net.param_count += static_cast<std::int64_t>(net.pre_head_shape.channels) *
                         config.num_classes +
                     config.num_classes;
  add_layer({0, LayerKind::kLinear, "linear", {1, 1, config.num_classes},
             {{pool, 0, 1, ""}}, 0, 0, -1});
  return net;
}

std::string export_dot(const NetworkGraph& network) {
  std::ostringstream out;
  out << "digraph network {\n  rankdir=TB;\n  node [shape=box];\n";
  auto emit_node = [&out](const Layer& layer, const char* indent) {
    out << indent << "L" << layer.id << " [label=\""
        << escape_dot(layer.label + "\n" + to_string(layer.shape)) << "\"];\n";
  };
  int open_cell = 0;
  for (const Layer& layer : network.layers) {
    const bool in_cluster =
        layer.kind == LayerKind::kNode || layer.kind == LayerKind::kCellOutput;
    if (open_cell != 0 && (!in_cluster || layer.cell != open_cell)) {
      out << "  }\n";
      open_cell = 0;
    }
    if (in_cluster && open_cell == 0) {
      open_cell = layer.cell;
      out << "  subgraph cluster_cell" << layer.cell << " {\n"
          << "    label=\"cell " << layer.cell << " (code " << layer.cell_code
          << ")\";\n";
    }
    emit_node(layer, in_cluster ? "    " : "  ");
  }
  if (open_cell != 0) out << "  }\n";
  for (const Layer& layer : network.layers) {
    for (const LayerEdge& edge : layer.inputs) {
      out << "  L" << edge.from << " -> L" << layer.id;
      if (!edge.op_label.empty()) {
        out << " [label=\"" << escape_dot(edge.op_label)
            << (edge.stride > 1 ? " /" + std::to_string(edge.stride) : "")
            << "\"]";
      }
      out << ";\n";
    }
  }
  out << "}\n";
  return out.str();
}

ordered_json network_to_json(const NetworkGraph& network) {
  ordered_json doc;
  ordered_json layers = ordered_json::array();
  for (const Layer& layer : network.layers) {
    ordered_json item;
    item["id"] = layer.id;
    item["kind"] = to_string(layer.kind);
    item["label"] = layer.label;
    item["shape"] = {layer.shape.height, layer.shape.width,
                     layer.shape.channels};
    item["cell"] = layer.cell;
    item["cell_code"] = layer.cell_code;
    item["node"] = layer.node_index;
    ordered_json inputs = ordered_json::array();
    for (const LayerEdge& e : layer.inputs) {
      inputs.push_back({{"from", e.from}, {"op", e.op_code},
                        {"stride", e.stride}});
    }
    item["inputs"] = std::move(inputs);
    layers.push_back(std::move(item));
  }
  doc["layers"] = std::move(layers);
  doc["pre_head_shape"] = {network.pre_head_shape.height,
                           network.pre_head_shape.width,
                           network.pre_head_shape.channels};
  doc["param_count"] = network.param_count;
  return doc;
}

}  // namespace tsenas
