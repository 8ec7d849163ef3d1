#pragma once

#include <cstdint>

#include <boost/rational.hpp>

#include "dse/analyzer.hpp"
#include "dse/arch.hpp"
#include "dse/graph.hpp"

namespace dse {

using Ratio = boost::rational<std::int64_t>;

/// Per-operation cycle counts. For a single op the total is the maximum of
/// the compute and transfer terms; for a stream it is the sum of the per-op
/// totals.
struct CostBreakdown {
  std::int64_t compute_cycles = 0;
  std::int64_t weight_cycles = 0;
  std::int64_t input_cycles = 0;
  std::int64_t total_cycles = 0;
  std::int64_t mac_ops = 0;

  CostBreakdown& operator+=(const CostBreakdown& other);
};

/// Tiling and unroll factors clamped to one layer's dimensions: the tile
/// never exceeds the problem size and the unroll never exceeds the tile.
/// Kernel windows are not tiled (t_kx/t_ky equal the layer's kernel dims)
/// and output tiles are derived from the input tile extent.
struct EffectiveTiling {
  std::int64_t t_if = 1, t_kx = 1, t_ky = 1, t_ox = 1, t_oy = 1, t_of = 1;
  std::int64_t p_if = 1, p_kx = 1, p_ky = 1, p_ox = 1, p_oy = 1, p_of = 1;
  std::int64_t p_batch = 1;

  static EffectiveTiling for_layer(const ConvParams& p, const AcceleratorConfig& cfg);
};

/// Multiply-accumulates for one batch element:
/// n_if * n_kx * n_ky * n_ox * n_oy * n_of. Throws std::overflow_error if
/// the product exceeds the 64-bit range.
std::int64_t mac_count(const ConvParams& p);

/// Inter-tile trip count: product of ceil(N/T) over the six loop dimensions.
std::int64_t inter_tiling_cycle(const ConvParams& p, const EffectiveTiling& t);

/// Cycles to process one tile: product of ceil(T/P) over the six dimensions.
std::int64_t inner_tiling_latency(const EffectiveTiling& t);

/// inter_tiling_cycle x inner_tiling_latency x ceil(batch / p_batch).
std::int64_t compute_cycles(const ConvParams& p, const AcceleratorConfig& cfg);

/// Times each kernel weight is reused per fetch: p_ox * p_oy * p_batch
/// (each weight is broadcast across the parallel window positions and
/// batch lanes).
Ratio weight_reuse(const EffectiveTiling& t);
Ratio weight_reuse(const AcceleratorConfig& cfg);

/// Average times each fetched input pixel is reused: parallel MAC uses over
/// the contiguous input window span covered per cycle.
Ratio input_reuse(const EffectiveTiling& t, std::int64_t stride);
Ratio input_reuse(const AcceleratorConfig& cfg, std::int64_t stride);

struct TransferCycles {
  std::int64_t weight_cycles = 0;
  std::int64_t input_cycles = 0;
};

/// Off-chip transfer cycles: total accesses divided by reuse and bandwidth,
/// rounded up, computed exactly in rational arithmetic.
TransferCycles memory_cycles(const ConvParams& p, const AcceleratorConfig& cfg);

/// Latency of one operation under the max-of-compute-and-transfer rule.
CostBreakdown op_latency(const ConvParams& p, const AcceleratorConfig& cfg);

/// Element-wise sum over the stream; ZeroCost entries contribute nothing.
CostBreakdown model_latency(const OpStream& stream, const AcceleratorConfig& cfg);

/// 2 operations per MAC: 2 * total_macs * f / (cycles * 1e9). Throws
/// std::invalid_argument when the stream has zero latency but nonzero work.
double throughput_gops(const CostBreakdown& total, double frequency_hz);
double throughput_gops(const OpStream& stream, const AcceleratorConfig& cfg);

}  // namespace dse
