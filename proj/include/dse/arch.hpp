#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dse/analyzer.hpp"
#include "dse/graph.hpp"
#include "dse/rng.hpp"

namespace dse {

/// One point in the accelerator design space. The integer fields up to
/// p_batch form the genome searched by the optimizer; the remaining fields
/// are fixed per experiment and copied from the design bounds.
struct AcceleratorConfig {
  std::int64_t loop_order = 0;  // permutation index over the six tile loops
  std::int64_t pe_group = 1;
  std::int64_t mac_per_group = 1;
  std::int64_t buffer_bank_height = 1;  // words per bank
  std::int64_t buffer_bank_width = 8;   // bits per word
  std::int64_t weight_bank_per_group = 1;
  std::int64_t activation_bank_per_group = 1;
  std::int64_t t_if = 1;
  std::int64_t t_ix = 1;
  std::int64_t t_iy = 1;
  std::int64_t t_of = 1;
  std::int64_t p_ox = 1;
  std::int64_t p_oy = 1;
  std::int64_t p_kx = 1;
  std::int64_t p_ky = 1;
  std::int64_t p_if = 1;
  std::int64_t p_of = 1;
  std::int64_t p_batch = 1;

  double frequency_hz = 1e9;
  std::int64_t weight_bandwidth = 1;  // words per cycle
  std::int64_t input_bandwidth = 1;   // words per cycle
  std::int64_t bit_width = 8;
  std::int64_t batch_size = 4;

  bool operator==(const AcceleratorConfig&) const = default;
};

inline constexpr std::size_t kGenomeSize = 18;

struct GenomeField {
  const char* name;
  std::int64_t AcceleratorConfig::* member;
};

/// Canonical genome order used by crossover, mutation, normalization and
/// the lexicographic tie-break.
const std::array<GenomeField, kGenomeSize>& genome_fields();

bool genome_equal(const AcceleratorConfig& a, const AcceleratorConfig& b);
bool genome_less(const AcceleratorConfig& a, const AcceleratorConfig& b);

struct BufferCapacities {
  std::int64_t weight_bytes = 0;
  std::int64_t activation_bytes = 0;
};

/// Bank geometry to bytes: groups x banks x height(words) x width(bits) / 8.
BufferCapacities buffer_capacities(const AcceleratorConfig& cfg);

struct AreaCoeffs {
  double c_mac = 1.0;
  double c_bit = 0.001;
  double c_ctrl = 10.0;
  double c_reg = 0.1;
};

struct AreaEstimate {
  double mac_area = 0;
  double buffer_area = 0;
  double control_area = 0;
  double regfile_area = 0;
  double total = 0;
};

AreaEstimate estimate_area(const AcceleratorConfig& cfg, const AreaCoeffs& coeffs);

/// Output pixels produced from a tile of `tile_extent` input pixels by a
/// kernel of the given width at the given stride, at least 1.
std::int64_t output_tile_extent(std::int64_t tile_extent, std::int64_t kernel,
                                std::int64_t stride);

enum class ConstraintKind {
  MacUnits,                // MAC array covers the parallel unroll product
  WeightTileCapacity,      // weight buffer holds one weight tile
  WeightDemand,            // weight buffer holds the peak dynamic weight demand
  ActivationTileCapacity,  // activation buffer holds input + output tiles
  ActivationDemand,        // activation buffer holds peak activations x batch
  UnrollExceedsTile,       // unroll factor above its tile size
};

const char* constraint_name(ConstraintKind kind);

struct ConstraintViolation {
  ConstraintKind kind;
  std::string detail;
  double required = 0;
  double available = 0;
};

/// Evaluates all feasibility rules for a workload; an empty result means the
/// configuration is feasible. Violations are data, not errors.
std::vector<ConstraintViolation> check_constraints(const AcceleratorConfig& cfg,
                                                   const MemoryProfile& profile,
                                                   std::span<const ConvParams> layers);

/// Per-variable candidate sets plus the experiment-level fixed parameters.
struct DesignBounds {
  std::array<std::vector<std::int64_t>, kGenomeSize> candidates;
  double area_budget = std::numeric_limits<double>::infinity();
  AreaCoeffs area_coeffs;
  double frequency_hz = 1e9;
  std::int64_t weight_bandwidth = 1;
  std::int64_t input_bandwidth = 1;
  std::int64_t bit_width = 8;
  std::int64_t batch_size = 4;

  /// Throws std::invalid_argument on empty candidate sets or out-of-range
  /// values (loop_order must stay below 720).
  void validate() const;
};

/// Builds a config from per-variable candidate choices, filling the fixed
/// fields from the bounds.
AcceleratorConfig config_from_choices(const DesignBounds& bounds,
                                      const std::array<std::size_t, kGenomeSize>& choice);

/// Uniform draw per variable, rejection-resampled until `feasible` accepts.
/// Throws std::runtime_error after max_retries failed draws.
AcceleratorConfig sample_config(Rng& rng, const DesignBounds& bounds,
                                const std::function<bool(const AcceleratorConfig&)>& feasible,
                                int max_retries = 10000);

/// Per-variable (value - min) / (max - min) over the candidate range;
/// a degenerate variable (min == max) maps to 0. Throws if a value lies
/// outside its candidate range.
std::vector<double> normalize_config(const AcceleratorConfig& cfg, const DesignBounds& bounds);

/// Maps each coordinate back to the nearest candidate value.
AcceleratorConfig denormalize_config(std::span<const double> values, const DesignBounds& bounds);

/// Arch-space description file (candidates, budget, coefficients, fixed
/// parameters). See README for the schema.
DesignBounds load_design_bounds(const std::string& json_text);

/// Flat JSON of all config fields, parseable by config_from_json.
std::string config_to_json(const AcceleratorConfig& cfg);
AcceleratorConfig config_from_json(const std::string& json_text);

}  // namespace dse
