#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dse/graph.hpp"

namespace dse {

struct StreamEntry {
  std::string node_id;
  OpKind kind = OpKind::ZeroCost;
  /// Lowered convolution parameters; absent for ZeroCost entries.
  std::optional<ConvParams> conv;
  /// Index into OpStream::sources; distinguishes models in mixed streams.
  std::size_t source = 0;
  std::int64_t output_bytes = 0;
  std::int64_t weight_bytes = 0;
};

/// Linearized execution order of a graph (or of several interleaved graphs).
/// Every entry appears after all of its producers from the same source.
struct OpStream {
  std::vector<StreamEntry> entries;
  std::vector<std::string> sources = {""};
  std::vector<std::string> warnings;
};

struct MemoryProfile {
  std::int64_t peak_input_demand_bytes = 0;
  std::int64_t peak_weight_demand_bytes = 0;
  /// Resident activation bytes at each step, sampled after the step's output
  /// is allocated and before its inputs are released.
  std::vector<std::int64_t> timeline;
};

/// Linearizes the DAG by depth-first search backward from the end node,
/// visiting inputs in declared order. Nodes that cannot reach the end node
/// are excluded and reported in the stream's warnings.
OpStream build_op_stream(const ComputationGraph& graph);

/// Replays the stream with reference-counted liveness: each step allocates
/// the node's output, then releases any producer whose consumers have all
/// executed. Weights are resident only during their own op.
MemoryProfile profile_memory(const ComputationGraph& graph, const OpStream& stream);

/// Multi-source variant: graphs[i] backs entries with source == i and the
/// per-source resident sets are summed (no data sharing across models).
MemoryProfile profile_memory(std::span<const ComputationGraph* const> graphs,
                             const OpStream& stream);

/// Alternates entries a0, b0, a1, b1, ... and appends the longer tail.
/// Source tags are preserved; b's tags are shifted past a's.
OpStream interleave_streams(const OpStream& a, const OpStream& b);

}  // namespace dse
