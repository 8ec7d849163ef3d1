#include "dse/buffer_sim.hpp"

#include <algorithm>
#include <map>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dse {
namespace buffer_sim {

namespace {

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

inline std::int64_t bits_to_bytes(std::int64_t bits) { return (bits + 7) / 8; }

/// Cycles to move `bytes` at `words_per_cycle` words of `bit_width` bits.
inline std::int64_t transfer_cycles(std::int64_t bytes, std::int64_t words_per_cycle,
                                    std::int64_t bit_width) {
  return ceil_div(bytes * 8, words_per_cycle * bit_width);
}

struct BufferEntry {
  std::int64_t bytes = 0;
  bool dirty = false;
  std::uint64_t last_use = 0;
};

/// LRU-managed buffer with byte capacity. Tiles needed by the block being
/// processed are pinned and never evicted.
class LruBuffer {
 public:
  LruBuffer(std::int64_t capacity, std::int64_t store_words_per_cycle,
            std::int64_t bit_width)
      : capacity_(capacity), store_words_(store_words_per_cycle), bit_width_(bit_width) {}

  bool resident(const TileId& id) const { return entries_.count(id) != 0; }

  void touch(const TileId& id, bool mark_dirty) {
    BufferEntry& e = entries_.at(id);
    e.last_use = ++clock_;
    e.dirty = e.dirty || mark_dirty;
  }

  /// Inserts a tile, evicting least-recently-used unpinned tiles as needed.
  /// Returns store cycles charged for dirty evictions.
  std::int64_t insert(const TileId& id, std::int64_t bytes, bool dirty,
                      const std::set<TileId>& pinned) {
    std::int64_t store = 0;
    while (resident_bytes_ + bytes > capacity_) {
      auto victim = entries_.end();
      for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        if (pinned.count(it->first)) continue;
        if (victim == entries_.end() || it->second.last_use < victim->second.last_use) {
          victim = it;
        }
      }
      if (victim == entries_.end()) {
        throw CapacityError("buffer cannot hold the tiles required by one block");
      }
      if (victim->second.dirty) {
        store += transfer_cycles(victim->second.bytes, store_words_, bit_width_);
      }
      resident_bytes_ -= victim->second.bytes;
      entries_.erase(victim);
    }
    entries_[id] = BufferEntry{bytes, dirty, ++clock_};
    resident_bytes_ += bytes;
    if (resident_bytes_ > capacity_) {
      throw std::logic_error("buffer residency exceeded capacity");
    }
    return store;
  }

 private:
  std::int64_t capacity_;
  std::int64_t store_words_;
  std::int64_t bit_width_;
  std::int64_t resident_bytes_ = 0;
  std::uint64_t clock_ = 0;
  std::map<TileId, BufferEntry> entries_;
};

}  // namespace

std::array<int, 6> decode_loop_order(std::int64_t index) {
  if (index < 0 || index >= 720) {
    throw std::invalid_argument("loop_order index must be in [0, 720)");
  }
  std::array<int, 6> pool = {DimIf, DimKx, DimKy, DimOx, DimOy, DimOf};
  std::array<int, 6> order{};
  std::int64_t radix = 120;  // 5!
  std::size_t remaining = 6;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t digit = static_cast<std::size_t>(index / radix);
    index %= radix;
    order[i] = pool[digit];
    for (std::size_t j = digit; j + 1 < remaining; ++j) pool[j] = pool[j + 1];
    --remaining;
    if (remaining > 0) radix /= static_cast<std::int64_t>(remaining);
  }
  return order;
}

BlockTrace enumerate_blocks(const ConvParams& p, const AcceleratorConfig& cfg) {
  const EffectiveTiling t = EffectiveTiling::for_layer(p, cfg);
  const std::array<int, 6> order = decode_loop_order(cfg.loop_order);

  std::array<std::int64_t, 6> trips{};
  trips[DimIf] = ceil_div(p.n_if, t.t_if);
  trips[DimKx] = ceil_div(p.n_kx, t.t_kx);
  trips[DimKy] = ceil_div(p.n_ky, t.t_ky);
  trips[DimOx] = ceil_div(p.n_ox, t.t_ox);
  trips[DimOy] = ceil_div(p.n_oy, t.t_oy);
  trips[DimOf] = ceil_div(p.n_of, t.t_of);

  BlockTrace trace;
  const std::int64_t span_x = std::min((t.t_ox - 1) * p.stride_s + p.n_kx, p.n_ix);
  const std::int64_t span_y = std::min((t.t_oy - 1) * p.stride_s + p.n_ky, p.n_iy);
  trace.input_tile_bytes = bits_to_bytes(span_x * span_y * t.t_if * cfg.bit_width);
  trace.weight_tile_bytes = bits_to_bytes(p.n_kx * p.n_ky * t.t_if * t.t_of * cfg.bit_width);
  trace.output_tile_bytes = bits_to_bytes(t.t_ox * t.t_oy * t.t_of * cfg.bit_width);

  const std::int64_t per_block_compute =
      inner_tiling_latency(t) * ceil_div(cfg.batch_size, t.p_batch);

  std::int64_t block_count = 1;
  for (std::int64_t n : trips) block_count *= n;
  trace.blocks.reserve(static_cast<std::size_t>(block_count));

  std::array<std::int64_t, 6> coords{};
  for (std::int64_t step = 0; step < block_count; ++step) {
    Block block;
    block.coords = coords;
    block.input_tiles.push_back(
        {TileClass::Input, coords[DimIf], coords[DimOx], coords[DimOy]});
    block.weight_tiles.push_back({TileClass::Weight, coords[DimIf], coords[DimOf], 0});
    block.output_tiles.push_back(
        {TileClass::Output, coords[DimOf], coords[DimOx], coords[DimOy]});
    block.compute_cycles = per_block_compute;
    trace.blocks.push_back(std::move(block));

    // Advance the mixed-radix counter, innermost loop first.
    for (int i = 5; i >= 0; --i) {
      const int dim = order[static_cast<std::size_t>(i)];
      if (++coords[dim] < trips[dim]) break;
      coords[dim] = 0;
    }
  }
  return trace;
}

BlockTrace merge_blocks(const BlockTrace& trace, std::int64_t granularity) {
  if (granularity <= 1) return trace;
  BlockTrace merged;
  merged.input_tile_bytes = trace.input_tile_bytes;
  merged.weight_tile_bytes = trace.weight_tile_bytes;
  merged.output_tile_bytes = trace.output_tile_bytes;

  auto append_unique = [](std::vector<TileId>& dst, const std::vector<TileId>& src) {
    for (const TileId& id : src) {
      if (std::find(dst.begin(), dst.end(), id) == dst.end()) dst.push_back(id);
    }
  };
  for (std::size_t i = 0; i < trace.blocks.size(); i += static_cast<std::size_t>(granularity)) {
    Block big;
    big.coords = trace.blocks[i].coords;
    const std::size_t end =
        std::min(trace.blocks.size(), i + static_cast<std::size_t>(granularity));
    for (std::size_t j = i; j < end; ++j) {
      append_unique(big.input_tiles, trace.blocks[j].input_tiles);
      append_unique(big.weight_tiles, trace.blocks[j].weight_tiles);
      append_unique(big.output_tiles, trace.blocks[j].output_tiles);
      big.compute_cycles += trace.blocks[j].compute_cycles;
    }
    merged.blocks.push_back(std::move(big));
  }
  return merged;
}

CostBreakdown simulate(const BlockTrace& trace, const ConvParams& p,
                       const AcceleratorConfig& cfg, Overlap overlap,
                       std::vector<BlockStats>* stats) {
  const BufferCapacities caps = buffer_capacities(cfg);
  if (caps.weight_bytes < trace.weight_tile_bytes) {
    throw CapacityError("weight buffer smaller than one weight tile");
  }
  if (caps.activation_bytes < trace.input_tile_bytes + trace.output_tile_bytes) {
    throw CapacityError("activation buffer smaller than one input plus output tile");
  }

  // Stores use the input channel; weights are read-only.
  LruBuffer weight_buffer(caps.weight_bytes, cfg.input_bandwidth, cfg.bit_width);
  LruBuffer activation_buffer(caps.activation_bytes, cfg.input_bandwidth, cfg.bit_width);

  CostBreakdown out;
  std::int64_t total_overlapped = 0;

  for (std::size_t bi = 0; bi < trace.blocks.size(); ++bi) {
    const Block& block = trace.blocks[bi];
    BlockStats row;
    row.block_index = bi;
    row.compute_cycles = block.compute_cycles;

    std::set<TileId> pinned;
    for (const TileId& id : block.input_tiles) pinned.insert(id);
    for (const TileId& id : block.output_tiles) pinned.insert(id);
    std::set<TileId> pinned_weights(block.weight_tiles.begin(), block.weight_tiles.end());

    std::int64_t weight_fetch = 0, input_fetch = 0, store = 0;
    for (const TileId& id : block.weight_tiles) {
      if (weight_buffer.resident(id)) {
        weight_buffer.touch(id, false);
      } else {
        weight_fetch +=
            transfer_cycles(trace.weight_tile_bytes, cfg.weight_bandwidth, cfg.bit_width);
        store += weight_buffer.insert(id, trace.weight_tile_bytes, false, pinned_weights);
        ++row.weight_misses;
      }
    }
    for (const TileId& id : block.input_tiles) {
      if (activation_buffer.resident(id)) {
        activation_buffer.touch(id, false);
      } else {
        input_fetch +=
            transfer_cycles(trace.input_tile_bytes, cfg.input_bandwidth, cfg.bit_width);
        store += activation_buffer.insert(id, trace.input_tile_bytes, false, pinned);
        ++row.input_misses;
      }
    }
    for (const TileId& id : block.output_tiles) {
      if (activation_buffer.resident(id)) {
        activation_buffer.touch(id, true);
      } else {
        store += activation_buffer.insert(id, trace.output_tile_bytes, true, pinned);
      }
    }
    row.store_cycles = store;

    out.compute_cycles += block.compute_cycles;
    out.weight_cycles += weight_fetch;
    out.input_cycles += input_fetch + store;
    row.transfer_cycles = weight_fetch + input_fetch + store;
    total_overlapped += std::max(block.compute_cycles, row.transfer_cycles);
    if (stats) stats->push_back(row);
  }

  out.total_cycles = (overlap == Overlap::Sum)
                         ? out.compute_cycles + out.weight_cycles + out.input_cycles
                         : total_overlapped;
  out.mac_ops = mac_count(p) * cfg.batch_size;
  return out;
}

CostBreakdown refine_latency(const OpStream& stream, const AcceleratorConfig& cfg,
                             std::int64_t granularity, Overlap overlap, int jobs) {
  if (granularity < 1) {
    throw std::invalid_argument("granularity must be >= 1");
  }
  const std::size_t n = stream.entries.size();
  std::vector<CostBreakdown> per_op(n);
  std::exception_ptr error;

  auto run_one = [&](std::size_t i) {
    const StreamEntry& entry = stream.entries[i];
    if (!entry.conv) return;
    const BlockTrace trace = merge_blocks(enumerate_blocks(*entry.conv, cfg), granularity);
    per_op[i] = simulate(trace, *entry.conv, cfg, overlap);
  };

  if (jobs > 1) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (std::size_t i = 0; i < n; ++i) {
      try {
        run_one(i);
      } catch (...) {
#pragma omp critical
        if (!error) error = std::current_exception();
      }
    }
#else
    for (std::size_t i = 0; i < n; ++i) run_one(i);
#endif
  } else {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  }
  if (error) std::rethrow_exception(error);

  CostBreakdown total;
  for (const CostBreakdown& op : per_op) total += op;
  return total;
}

}  // namespace buffer_sim
}  // namespace dse
