#include "dse/analyzer.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace dse {

OpStream build_op_stream(const ComputationGraph& graph) {
  OpStream stream;
  if (graph.nodes.empty()) return stream;

  // Post-order DFS from the end node: a node is appended once all of its
  // producers are in the stream.
  std::set<std::string> emitted;
  std::set<std::string> on_path;
  std::vector<std::pair<std::string, std::size_t>> stack;
  stack.emplace_back(graph.end_id, 0);
  on_path.insert(graph.end_id);

  while (!stack.empty()) {
    auto& [id, next_input] = stack.back();
    const GraphNode& node = graph.node(id);
    if (next_input < node.input_ids.size()) {
      const std::string& producer = node.input_ids[next_input++];
      if (emitted.count(producer)) continue;
      if (on_path.count(producer)) {
        throw GraphError("cycle detected at " + producer);
      }
      on_path.insert(producer);
      stack.emplace_back(producer, 0);
    } else {
      StreamEntry entry;
      entry.node_id = id;
      entry.kind = node.kind;
      if (node.kind != OpKind::ZeroCost) {
        entry.conv = lower_to_conv(node);
      }
      entry.output_bytes = node.output_bytes;
      entry.weight_bytes = node.weight_bytes;
      stream.entries.push_back(std::move(entry));
      emitted.insert(id);
      on_path.erase(id);
      stack.pop_back();
    }
  }

  for (const auto& [id, _] : graph.nodes) {
    if (!emitted.count(id)) {
      stream.warnings.push_back("node '" + id + "' does not reach the end node; excluded");
    }
  }
  return stream;
}

MemoryProfile profile_memory(const ComputationGraph& graph, const OpStream& stream) {
  const ComputationGraph* graphs[] = {&graph};
  return profile_memory(graphs, stream);
}

MemoryProfile profile_memory(std::span<const ComputationGraph* const> graphs,
                             const OpStream& stream) {
  if (graphs.size() != stream.sources.size()) {
    throw std::invalid_argument("profile_memory: graph count does not match stream sources");
  }

  using Key = std::pair<std::size_t, std::string>;  // (source, node_id)

  // Consumers are counted among stream members of the same source only;
  // nodes excluded from the stream never execute and never release inputs.
  std::map<Key, int> pending_consumers;
  std::set<Key> members;
  for (const StreamEntry& entry : stream.entries) {
    if (!members.insert({entry.source, entry.node_id}).second) {
      throw std::invalid_argument("profile_memory: duplicate stream entry '" +
                                  entry.node_id + "'");
    }
  }
  for (const StreamEntry& entry : stream.entries) {
    const ComputationGraph& g = *graphs[entry.source];
    std::set<std::string> distinct;
    for (const std::string& in : g.node(entry.node_id).input_ids) {
      if (!distinct.insert(in).second) continue;
      Key key{entry.source, in};
      if (members.count(key)) pending_consumers[key] += 1;
    }
  }

  MemoryProfile profile;
  profile.timeline.reserve(stream.entries.size());
  std::int64_t resident = 0;
  std::map<Key, std::int64_t> live_bytes;

  for (const StreamEntry& entry : stream.entries) {
    const ComputationGraph& g = *graphs[entry.source];
    const GraphNode& node = g.node(entry.node_id);

    // Output allocated before any input is released.
    Key self{entry.source, entry.node_id};
    live_bytes[self] = node.output_bytes;
    resident += node.output_bytes;
    profile.timeline.push_back(resident);
    profile.peak_input_demand_bytes = std::max(profile.peak_input_demand_bytes, resident);
    profile.peak_weight_demand_bytes =
        std::max(profile.peak_weight_demand_bytes, node.weight_bytes);

    std::set<std::string> distinct;
    for (const std::string& in : node.input_ids) {
      if (!distinct.insert(in).second) continue;
      Key key{entry.source, in};
      auto it = pending_consumers.find(key);
      if (it == pending_consumers.end()) continue;
      if (--it->second == 0) {
        resident -= live_bytes.at(key);
        live_bytes.erase(key);
        pending_consumers.erase(it);
      }
    }
  }
  return profile;
}

OpStream interleave_streams(const OpStream& a, const OpStream& b) {
  OpStream mixed;
  mixed.sources = a.sources;
  mixed.sources.insert(mixed.sources.end(), b.sources.begin(), b.sources.end());
  mixed.warnings = a.warnings;
  mixed.warnings.insert(mixed.warnings.end(), b.warnings.begin(), b.warnings.end());
  mixed.entries.reserve(a.entries.size() + b.entries.size());

  const std::size_t shift = a.sources.size();
  const std::size_t common = std::min(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < common; ++i) {
    mixed.entries.push_back(a.entries[i]);
    StreamEntry from_b = b.entries[i];
    from_b.source += shift;
    mixed.entries.push_back(from_b);
  }
  for (std::size_t i = common; i < a.entries.size(); ++i) {
    mixed.entries.push_back(a.entries[i]);
  }
  for (std::size_t i = common; i < b.entries.size(); ++i) {
    StreamEntry from_b = b.entries[i];
    from_b.source += shift;
    mixed.entries.push_back(from_b);
  }
  return mixed;
}

}  // namespace dse
