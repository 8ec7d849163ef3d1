#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dse/analyzer.hpp"
#include "dse/arch.hpp"
#include "dse/cost.hpp"

namespace dse {
namespace buffer_sim {

/// A configuration whose buffers cannot hold even one tile of some class.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The six inter-tile loop dimensions in canonical order.
enum TileDim { DimIf = 0, DimKx, DimKy, DimOx, DimOy, DimOf };

/// Decodes a permutation index in [0, 720) into the loop nesting order,
/// outermost first, over the canonical dimensions.
std::array<int, 6> decode_loop_order(std::int64_t index);

enum class TileClass { Input, Weight, Output };

struct TileId {
  TileClass cls;
  std::int64_t a = 0, b = 0, c = 0;
  auto operator<=>(const TileId&) const = default;
};

struct Block {
  std::array<std::int64_t, 6> coords{};  // canonical dim order
  std::vector<TileId> input_tiles;
  std::vector<TileId> weight_tiles;
  std::vector<TileId> output_tiles;
  std::int64_t compute_cycles = 0;
};

struct BlockTrace {
  std::vector<Block> blocks;
  std::int64_t input_tile_bytes = 0;
  std::int64_t weight_tile_bytes = 0;
  std::int64_t output_tile_bytes = 0;
};

/// Walks the six inter-tile loops in the configured loop order; one block
/// per inter-tile coordinate, so the block count equals the layer's
/// inter-tile trip count.
BlockTrace enumerate_blocks(const ConvParams& p, const AcceleratorConfig& cfg);

/// Merges runs of `granularity` consecutive blocks, taking the union of
/// their tile sets. granularity <= 1 returns the trace unchanged.
BlockTrace merge_blocks(const BlockTrace& trace, std::int64_t granularity);

enum class Overlap {
  Sum,          // transfers stall compute
  MaxPerBlock,  // transfers hide behind compute within each block
};

struct BlockStats {
  std::size_t block_index = 0;
  int input_misses = 0;
  int weight_misses = 0;
  std::int64_t store_cycles = 0;
  std::int64_t compute_cycles = 0;
  std::int64_t transfer_cycles = 0;
};

/// Replays the blocks against LRU-managed weight and activation buffers,
/// charging fetch cycles for non-resident tiles and store cycles when dirty
/// output tiles are evicted. Buffers start empty.
CostBreakdown simulate(const BlockTrace& trace, const ConvParams& p,
                       const AcceleratorConfig& cfg, Overlap overlap = Overlap::Sum,
                       std::vector<BlockStats>* stats = nullptr);

/// Refined latency for a whole stream; ZeroCost entries contribute zero.
/// Per-op simulations are independent, so jobs > 1 runs them in parallel
/// with results identical to the serial order.
CostBreakdown refine_latency(const OpStream& stream, const AcceleratorConfig& cfg,
                             std::int64_t granularity = 1, Overlap overlap = Overlap::Sum,
                             int jobs = 1);

}  // namespace buffer_sim
}  // namespace dse
