#include "dse/cost.hpp"

#include <algorithm>
#include <stdexcept>

namespace dse {

namespace {

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::int64_t checked_product(std::initializer_list<std::int64_t> factors) {
  __int128 acc = 1;
  for (std::int64_t f : factors) {
    acc *= f;
    if (acc > std::numeric_limits<std::int64_t>::max()) {
      throw std::overflow_error("cycle/MAC count exceeds 64-bit range");
    }
  }
  return static_cast<std::int64_t>(acc);
}

/// ceil(amount / rate) for a positive rational rate, exact.
std::int64_t ceil_div_ratio(std::int64_t amount, const Ratio& rate) {
  const __int128 num = static_cast<__int128>(amount) * rate.denominator();
  const __int128 den = rate.numerator();
  const __int128 cycles = (num + den - 1) / den;
  if (cycles > std::numeric_limits<std::int64_t>::max()) {
    throw std::overflow_error("transfer cycle count exceeds 64-bit range");
  }
  return static_cast<std::int64_t>(cycles);
}

}  // namespace

CostBreakdown& CostBreakdown::operator+=(const CostBreakdown& other) {
  compute_cycles += other.compute_cycles;
  weight_cycles += other.weight_cycles;
  input_cycles += other.input_cycles;
  total_cycles += other.total_cycles;
  mac_ops += other.mac_ops;
  return *this;
}

EffectiveTiling EffectiveTiling::for_layer(const ConvParams& p, const AcceleratorConfig& cfg) {
  EffectiveTiling t;
  t.t_if = std::min(cfg.t_if, p.n_if);
  t.t_kx = p.n_kx;  // kernel windows are not tiled
  t.t_ky = p.n_ky;
  t.t_of = std::min(cfg.t_of, p.n_of);

  const std::int64_t t_ix = std::min(cfg.t_ix, p.n_ix);
  const std::int64_t t_iy = std::min(cfg.t_iy, p.n_iy);
  t.t_ox = std::clamp(output_tile_extent(t_ix, p.n_kx, p.stride_s), std::int64_t{1}, p.n_ox);
  t.t_oy = std::clamp(output_tile_extent(t_iy, p.n_ky, p.stride_s), std::int64_t{1}, p.n_oy);

  t.p_if = std::min(cfg.p_if, t.t_if);
  t.p_kx = std::min(cfg.p_kx, t.t_kx);
  t.p_ky = std::min(cfg.p_ky, t.t_ky);
  t.p_ox = std::min(cfg.p_ox, t.t_ox);
  t.p_oy = std::min(cfg.p_oy, t.t_oy);
  t.p_of = std::min(cfg.p_of, t.t_of);
  t.p_batch = std::min(cfg.p_batch, cfg.batch_size);
  return t;
}

std::int64_t mac_count(const ConvParams& p) {
  return checked_product({p.n_if, p.n_kx, p.n_ky, p.n_ox, p.n_oy, p.n_of});
}

std::int64_t inter_tiling_cycle(const ConvParams& p, const EffectiveTiling& t) {
  return checked_product({ceil_div(p.n_if, t.t_if), ceil_div(p.n_kx, t.t_kx),
                          ceil_div(p.n_ky, t.t_ky), ceil_div(p.n_ox, t.t_ox),
                          ceil_div(p.n_oy, t.t_oy), ceil_div(p.n_of, t.t_of)});
}

std::int64_t inner_tiling_latency(const EffectiveTiling& t) {
  return checked_product({ceil_div(t.t_if, t.p_if), ceil_div(t.t_kx, t.p_kx),
                          ceil_div(t.t_ky, t.p_ky), ceil_div(t.t_ox, t.p_ox),
                          ceil_div(t.t_oy, t.p_oy), ceil_div(t.t_of, t.p_of)});
}

std::int64_t compute_cycles(const ConvParams& p, const AcceleratorConfig& cfg) {
  const EffectiveTiling t = EffectiveTiling::for_layer(p, cfg);
  return checked_product({inter_tiling_cycle(p, t), inner_tiling_latency(t),
                          ceil_div(cfg.batch_size, t.p_batch)});
}

Ratio weight_reuse(const EffectiveTiling& t) {
  return Ratio(t.p_ox * t.p_oy * t.p_batch);
}

Ratio weight_reuse(const AcceleratorConfig& cfg) {
  return Ratio(cfg.p_ox * cfg.p_oy * cfg.p_batch);
}

Ratio input_reuse(const EffectiveTiling& t, std::int64_t stride) {
  const std::int64_t span_x = (t.p_ox - 1) * stride + t.p_kx;
  const std::int64_t span_y = (t.p_oy - 1) * stride + t.p_ky;
  return Ratio(t.p_of * t.p_kx * t.p_ky * t.p_ox * t.p_oy, span_x * span_y);
}

Ratio input_reuse(const AcceleratorConfig& cfg, std::int64_t stride) {
  EffectiveTiling t;
  t.p_of = cfg.p_of;
  t.p_kx = cfg.p_kx;
  t.p_ky = cfg.p_ky;
  t.p_ox = cfg.p_ox;
  t.p_oy = cfg.p_oy;
  return input_reuse(t, stride);
}

TransferCycles memory_cycles(const ConvParams& p, const AcceleratorConfig& cfg) {
  const EffectiveTiling t = EffectiveTiling::for_layer(p, cfg);
  const std::int64_t num_weight =
      checked_product({p.n_ox, p.n_oy, p.n_kx, p.n_ky, p.n_if, p.n_of});
  const std::int64_t num_input = checked_product({num_weight, cfg.batch_size});

  TransferCycles cycles;
  cycles.weight_cycles =
      ceil_div_ratio(num_weight, weight_reuse(t) * Ratio(cfg.weight_bandwidth));
  cycles.input_cycles =
      ceil_div_ratio(num_input, input_reuse(t, p.stride_s) * Ratio(cfg.input_bandwidth));
  return cycles;
}

CostBreakdown op_latency(const ConvParams& p, const AcceleratorConfig& cfg) {
  CostBreakdown out;
  out.compute_cycles = compute_cycles(p, cfg);
  const TransferCycles transfer = memory_cycles(p, cfg);
  out.weight_cycles = transfer.weight_cycles;
  out.input_cycles = transfer.input_cycles;
  out.total_cycles = std::max({out.compute_cycles, out.weight_cycles, out.input_cycles});
  out.mac_ops = checked_product({mac_count(p), cfg.batch_size});
  return out;
}

CostBreakdown model_latency(const OpStream& stream, const AcceleratorConfig& cfg) {
  CostBreakdown total;
  for (const StreamEntry& entry : stream.entries) {
    if (!entry.conv) continue;
    total += op_latency(*entry.conv, cfg);
  }
  return total;
}

double throughput_gops(const CostBreakdown& total, double frequency_hz) {
  if (total.total_cycles <= 0) {
    if (total.mac_ops == 0) return 0.0;
    throw std::invalid_argument("throughput undefined for a zero-latency stream");
  }
  return 2.0 * static_cast<double>(total.mac_ops) * frequency_hz /
         (static_cast<double>(total.total_cycles) * 1e9);
}

double throughput_gops(const OpStream& stream, const AcceleratorConfig& cfg) {
  return throughput_gops(model_latency(stream, cfg), cfg.frequency_hz);
}

}  // namespace dse
