#include "dse/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dse {

using nlohmann::json;

void validate_conv_params(const ConvParams& p, const std::string& context) {
  const std::pair<const char*, std::int64_t> dims[] = {
      {"nif", p.n_if}, {"nix", p.n_ix}, {"niy", p.n_iy},
      {"nkx", p.n_kx}, {"nky", p.n_ky}, {"nof", p.n_of},
      {"nox", p.n_ox}, {"noy", p.n_oy}, {"s", p.stride_s},
  };
  for (const auto& [name, value] : dims) {
    if (value < 1) {
      throw GraphError(context + ": parameter '" + name + "' must be >= 1, got " +
                       std::to_string(value));
    }
  }
  if (p.n_kx <= p.n_ix && p.n_ox > p.n_ix) {
    throw GraphError(context + ": output width " + std::to_string(p.n_ox) +
                     " exceeds input width " + std::to_string(p.n_ix));
  }
  if (p.n_ky <= p.n_iy && p.n_oy > p.n_iy) {
    throw GraphError(context + ": output height " + std::to_string(p.n_oy) +
                     " exceeds input height " + std::to_string(p.n_iy));
  }
}

const char* op_kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::Conv2D: return "conv2d";
    case OpKind::DepthwiseConv: return "depthwise_conv";
    case OpKind::ChannelMixing: return "channel_mixing";
    case OpKind::MatVecMul: return "matvec";
    case OpKind::MatMatMul: return "matmul";
    case OpKind::ZeroCost: return "zero_cost";
  }
  return "unknown";
}

std::optional<OpKind> op_kind_from_name(const std::string& name) {
  static const std::map<std::string, OpKind> table = {
      {"conv2d", OpKind::Conv2D},
      {"depthwise_conv", OpKind::DepthwiseConv},
      {"channel_mixing", OpKind::ChannelMixing},
      {"matvec", OpKind::MatVecMul},
      {"matmul", OpKind::MatMatMul},
      {"zero_cost", OpKind::ZeroCost},
  };
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

const GraphNode& ComputationGraph::node(const std::string& id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw GraphError("unknown node '" + id + "'");
  return it->second;
}

namespace {

std::int64_t require_int(const json& obj, const char* key, const std::string& context) {
  if (!obj.contains(key)) {
    throw GraphError(context + ": missing field '" + key + "'");
  }
  if (!obj[key].is_number_integer()) {
    throw GraphError(context + ": field '" + key + "' must be an integer");
  }
  return obj[key].get<std::int64_t>();
}

RawParams parse_params(OpKind kind, const json& node_obj, const std::string& context) {
  json params = node_obj.value("params", json::object());
  if (!params.is_object()) {
    throw GraphError(context + ": field 'params' must be an object");
  }
  switch (kind) {
    case OpKind::Conv2D:
    case OpKind::DepthwiseConv:
    case OpKind::ChannelMixing: {
      ConvParams p;
      p.n_if = require_int(params, "nif", context);
      p.n_ix = require_int(params, "nix", context);
      p.n_iy = require_int(params, "niy", context);
      p.n_kx = require_int(params, "nkx", context);
      p.n_ky = require_int(params, "nky", context);
      p.n_of = require_int(params, "nof", context);
      p.n_ox = require_int(params, "nox", context);
      p.n_oy = require_int(params, "noy", context);
      p.stride_s = require_int(params, "s", context);
      validate_conv_params(p, context);
      return p;
    }
    case OpKind::MatVecMul: {
      MatVecDims d;
      d.col = require_int(params, "col", context);
      d.row = require_int(params, "row", context);
      if (d.col < 1 || d.row < 1) {
        throw GraphError(context + ": matrix dims must be >= 1");
      }
      return d;
    }
    case OpKind::MatMatMul: {
      MatMatDims d;
      d.col1 = require_int(params, "col_1", context);
      d.row1 = require_int(params, "row_1", context);
      d.col2 = require_int(params, "col_2", context);
      if (d.col1 < 1 || d.row1 < 1 || d.col2 < 1) {
        throw GraphError(context + ": matrix dims must be >= 1");
      }
      return d;
    }
    case OpKind::ZeroCost:
      return std::monostate{};
  }
  throw GraphError(context + ": unhandled kind");
}

// Output element count implied by the declared dims, or 0 when the kind
// carries none.
std::int64_t output_elements(const GraphNode& node) {
  if (const auto* conv = std::get_if<ConvParams>(&node.params)) {
    return conv->n_of * conv->n_ox * conv->n_oy;
  }
  if (const auto* mv = std::get_if<MatVecDims>(&node.params)) {
    return mv->row;
  }
  if (const auto* mm = std::get_if<MatMatDims>(&node.params)) {
    return mm->row1 * mm->col2;
  }
  return 0;
}

void check_acyclic(const ComputationGraph& graph) {
  // Iterative DFS with coloring; reports one node on the first cycle found.
  enum class Color { White, Grey, Black };
  std::map<std::string, Color> color;
  for (const auto& [id, _] : graph.nodes) color[id] = Color::White;

  for (const auto& [start, _] : graph.nodes) {
    if (color[start] != Color::White) continue;
    std::vector<std::pair<std::string, std::size_t>> stack;
    stack.emplace_back(start, 0);
    color[start] = Color::Grey;
    while (!stack.empty()) {
      auto& [id, next_input] = stack.back();
      const GraphNode& node = graph.nodes.at(id);
      if (next_input < node.input_ids.size()) {
        const std::string& child = node.input_ids[next_input++];
        Color c = color.at(child);
        if (c == Color::Grey) {
          throw GraphError("cycle detected at " + child);
        }
        if (c == Color::White) {
          color[child] = Color::Grey;
          stack.emplace_back(child, 0);
        }
      } else {
        color[id] = Color::Black;
        stack.pop_back();
      }
    }
  }
}

}  // namespace

ComputationGraph parse_graph(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw GraphError(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("nodes") || !root["nodes"].is_array()) {
    throw GraphError("top-level object must contain a 'nodes' array");
  }

  ComputationGraph graph;
  std::size_t index = 0;
  for (const json& node_obj : root["nodes"]) {
    std::string context = "node " + std::to_string(index++);
    if (!node_obj.is_object()) throw GraphError(context + ": must be an object");
    if (!node_obj.contains("id") || !node_obj["id"].is_string()) {
      throw GraphError(context + ": missing field 'id'");
    }
    GraphNode node;
    node.id = node_obj["id"].get<std::string>();
    context = "node '" + node.id + "'";
    if (graph.nodes.count(node.id)) {
      throw GraphError(context + ": duplicate id");
    }
    if (!node_obj.contains("kind") || !node_obj["kind"].is_string()) {
      throw GraphError(context + ": missing field 'kind'");
    }
    auto kind = op_kind_from_name(node_obj["kind"].get<std::string>());
    if (!kind) {
      throw GraphError(context + ": unknown kind '" +
                       node_obj["kind"].get<std::string>() + "'");
    }
    node.kind = *kind;
    node.params = parse_params(node.kind, node_obj, context);
    if (node_obj.contains("inputs")) {
      if (!node_obj["inputs"].is_array()) {
        throw GraphError(context + ": field 'inputs' must be an array");
      }
      for (const json& in : node_obj["inputs"]) {
        if (!in.is_string()) throw GraphError(context + ": inputs must be strings");
        node.input_ids.push_back(in.get<std::string>());
      }
    }
    node.output_bytes = node_obj.value("output_bytes", std::int64_t{0});
    node.weight_bytes = node_obj.value("weight_bytes", std::int64_t{0});
    if (node.output_bytes < 0 || node.weight_bytes < 0) {
      throw GraphError(context + ": byte counts must be non-negative");
    }
    graph.nodes.emplace(node.id, std::move(node));
  }
  if (graph.nodes.empty()) {
    throw GraphError("graph has no nodes");
  }

  // Edge validation.
  for (const auto& [id, node] : graph.nodes) {
    std::set<std::string> seen;
    for (const std::string& in : node.input_ids) {
      if (in == id) {
        throw GraphError("cycle detected at " + id);
      }
      if (!graph.nodes.count(in)) {
        throw GraphError("dangling input '" + in + "' referenced by node '" + id + "'");
      }
      if (!seen.insert(in).second) {
        graph.warnings.push_back("node '" + id + "': duplicate input '" + in + "'");
      }
    }
  }
  check_acyclic(graph);

  // Declared output size vs. dims: warn when output_bytes is not a whole
  // number of bytes per element.
  for (const auto& [id, node] : graph.nodes) {
    std::int64_t elems = output_elements(node);
    if (elems > 0 && node.output_bytes > 0 && node.output_bytes % elems != 0) {
      graph.warnings.push_back("node '" + id + "': output_bytes " +
                               std::to_string(node.output_bytes) +
                               " is not a multiple of the declared output size " +
                               std::to_string(elems));
    }
  }

  // Sink resolution: a single sink becomes the end node; multiple sinks are
  // joined by a synthetic ZeroCost node.
  std::set<std::string> consumed;
  for (const auto& [id, node] : graph.nodes) {
    for (const std::string& in : node.input_ids) consumed.insert(in);
  }
  std::vector<std::string> sinks;
  for (const auto& [id, _] : graph.nodes) {
    if (!consumed.count(id)) sinks.push_back(id);
  }
  if (sinks.empty()) {
    throw GraphError("graph has no sink node");
  }
  if (sinks.size() == 1) {
    graph.end_id = sinks.front();
  } else {
    std::string end_id = "__end__";
    while (graph.nodes.count(end_id)) end_id += "_";
    GraphNode end;
    end.id = end_id;
    end.kind = OpKind::ZeroCost;
    end.input_ids = sinks;  // already lexicographic via the node map
    graph.nodes.emplace(end_id, std::move(end));
    graph.end_id = end_id;
  }
  return graph;
}

std::string serialize_graph(const ComputationGraph& graph) {
  json nodes = json::array();
  for (const auto& [id, node] : graph.nodes) {
    json obj;
    obj["id"] = id;
    obj["kind"] = op_kind_name(node.kind);
    json params = json::object();
    if (const auto* conv = std::get_if<ConvParams>(&node.params)) {
      params = {{"nif", conv->n_if}, {"nix", conv->n_ix}, {"niy", conv->n_iy},
                {"nkx", conv->n_kx}, {"nky", conv->n_ky}, {"nof", conv->n_of},
                {"nox", conv->n_ox}, {"noy", conv->n_oy}, {"s", conv->stride_s}};
    } else if (const auto* mv = std::get_if<MatVecDims>(&node.params)) {
      params = {{"col", mv->col}, {"row", mv->row}};
    } else if (const auto* mm = std::get_if<MatMatDims>(&node.params)) {
      params = {{"col_1", mm->col1}, {"row_1", mm->row1}, {"col_2", mm->col2}};
    }
    obj["params"] = params;
    obj["inputs"] = node.input_ids;
    obj["output_bytes"] = node.output_bytes;
    obj["weight_bytes"] = node.weight_bytes;
    nodes.push_back(obj);
  }
  json root;
  root["nodes"] = nodes;
  return root.dump(2) + "\n";
}

ConvParams lower_to_conv(const GraphNode& node) {
  switch (node.kind) {
    case OpKind::Conv2D: {
      ConvParams p = std::get<ConvParams>(node.params);
      validate_conv_params(p, "node '" + node.id + "'");
      return p;
    }
    case OpKind::DepthwiseConv: {
      ConvParams p = std::get<ConvParams>(node.params);
      p.n_of = 1;
      validate_conv_params(p, "node '" + node.id + "'");
      return p;
    }
    case OpKind::ChannelMixing: {
      ConvParams p = std::get<ConvParams>(node.params);
      p.n_kx = 1;
      p.n_ky = 1;
      validate_conv_params(p, "node '" + node.id + "'");
      return p;
    }
    case OpKind::MatVecMul: {
      const auto& d = std::get<MatVecDims>(node.params);
      ConvParams p;
      p.n_if = d.col;
      p.n_ix = d.row;
      p.n_iy = 1;
      p.n_kx = 1;
      p.n_ky = 1;
      p.n_of = 1;
      p.n_ox = d.row;
      p.n_oy = 1;
      p.stride_s = 1;
      return p;
    }
    case OpKind::MatMatMul: {
      const auto& d = std::get<MatMatDims>(node.params);
      ConvParams p;
      p.n_if = d.col1;
      p.n_ix = d.row1;
      p.n_iy = 1;
      p.n_kx = 1;
      p.n_ky = 1;
      p.n_of = d.col2;
      p.n_ox = d.row1;
      p.n_oy = 1;
      p.stride_s = 1;
      return p;
    }
    case OpKind::ZeroCost:
      throw GraphError("node '" + node.id + "': zero-cost ops have no convolution lowering");
  }
  throw GraphError("unhandled kind");
}

}  // namespace dse
