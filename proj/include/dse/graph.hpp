#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace dse {

/// Raised on malformed or inconsistent graph input.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The nine parameters every supported operation lowers to: a 2D convolution
/// over n_if input channels producing n_of output channels, with an
/// n_kx x n_ky kernel sliding at stride_s over an n_ix x n_iy feature map.
struct ConvParams {
  std::int64_t n_if = 1;
  std::int64_t n_ix = 1;
  std::int64_t n_iy = 1;
  std::int64_t n_kx = 1;
  std::int64_t n_ky = 1;
  std::int64_t n_of = 1;
  std::int64_t n_ox = 1;
  std::int64_t n_oy = 1;
  std::int64_t stride_s = 1;

  bool operator==(const ConvParams&) const = default;
};

/// Throws GraphError if any dimension is nonpositive or the output plane is
/// larger than the input plane (checked only when the kernel fits the input).
void validate_conv_params(const ConvParams& p, const std::string& context);

enum class OpKind {
  Conv2D,
  DepthwiseConv,
  ChannelMixing,
  MatVecMul,
  MatMatMul,
  ZeroCost,
};

const char* op_kind_name(OpKind kind);
std::optional<OpKind> op_kind_from_name(const std::string& name);

struct MatVecDims {
  std::int64_t col = 1;
  std::int64_t row = 1;
  bool operator==(const MatVecDims&) const = default;
};

struct MatMatDims {
  std::int64_t col1 = 1;
  std::int64_t row1 = 1;
  std::int64_t col2 = 1;
  bool operator==(const MatMatDims&) const = default;
};

/// Kind-specific raw parameters as declared in the input file. ZeroCost ops
/// carry no parameters (monostate).
using RawParams = std::variant<std::monostate, ConvParams, MatVecDims, MatMatDims>;

struct GraphNode {
  std::string id;
  OpKind kind = OpKind::ZeroCost;
  RawParams params;
  std::vector<std::string> input_ids;
  std::int64_t output_bytes = 0;
  std::int64_t weight_bytes = 0;
};

/// A validated DAG of operations. Nodes are keyed by id in a std::map so
/// every iteration order is lexicographic, which is the tie-break used by
/// all downstream traversals.
struct ComputationGraph {
  std::map<std::string, GraphNode> nodes;
  std::string end_id;
  std::vector<std::string> warnings;

  const GraphNode& node(const std::string& id) const;
};

/// Parses and validates a graph from JSON text (see README for the schema).
/// If the graph has multiple sinks, a synthetic ZeroCost end node joining
/// them is inserted and end_id points to it.
ComputationGraph parse_graph(const std::string& json_text);

/// Inverse of parse_graph for persisting generated graphs; stable key order.
std::string serialize_graph(const ComputationGraph& graph);

/// Maps a node onto the 2D-convolution parameter space.
/// Conv2D passes through, DepthwiseConv forces n_of = 1, ChannelMixing
/// forces a 1x1 kernel, and the matrix kinds embed as single-row feature
/// maps with 1x1 kernels. ZeroCost nodes have no lowering and throw.
ConvParams lower_to_conv(const GraphNode& node);

}  // namespace dse
