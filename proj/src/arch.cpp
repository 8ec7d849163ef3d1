#include "dse/arch.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace dse {

using nlohmann::json;

const std::array<GenomeField, kGenomeSize>& genome_fields() {
  static const std::array<GenomeField, kGenomeSize> fields = {{
      {"loop_order", &AcceleratorConfig::loop_order},
      {"pe_group", &AcceleratorConfig::pe_group},
      {"mac_per_group", &AcceleratorConfig::mac_per_group},
      {"buffer_bank_height", &AcceleratorConfig::buffer_bank_height},
      {"buffer_bank_width", &AcceleratorConfig::buffer_bank_width},
      {"weight_bank_per_group", &AcceleratorConfig::weight_bank_per_group},
      {"activation_bank_per_group", &AcceleratorConfig::activation_bank_per_group},
      {"t_if", &AcceleratorConfig::t_if},
      {"t_ix", &AcceleratorConfig::t_ix},
      {"t_iy", &AcceleratorConfig::t_iy},
      {"t_of", &AcceleratorConfig::t_of},
      {"p_ox", &AcceleratorConfig::p_ox},
      {"p_oy", &AcceleratorConfig::p_oy},
      {"p_kx", &AcceleratorConfig::p_kx},
      {"p_ky", &AcceleratorConfig::p_ky},
      {"p_if", &AcceleratorConfig::p_if},
      {"p_of", &AcceleratorConfig::p_of},
      {"p_batch", &AcceleratorConfig::p_batch},
  }};
  return fields;
}

bool genome_equal(const AcceleratorConfig& a, const AcceleratorConfig& b) {
  for (const GenomeField& f : genome_fields()) {
    if (a.*f.member != b.*f.member) return false;
  }
  return true;
}

bool genome_less(const AcceleratorConfig& a, const AcceleratorConfig& b) {
  for (const GenomeField& f : genome_fields()) {
    if (a.*f.member != b.*f.member) return a.*f.member < b.*f.member;
  }
  return false;
}

BufferCapacities buffer_capacities(const AcceleratorConfig& cfg) {
  const std::int64_t bank_bits = cfg.buffer_bank_height * cfg.buffer_bank_width;
  BufferCapacities caps;
  caps.weight_bytes = cfg.pe_group * cfg.weight_bank_per_group * bank_bits / 8;
  caps.activation_bytes = cfg.pe_group * cfg.activation_bank_per_group * bank_bits / 8;
  return caps;
}

AreaEstimate estimate_area(const AcceleratorConfig& cfg, const AreaCoeffs& coeffs) {
  const double macs = static_cast<double>(cfg.pe_group * cfg.mac_per_group);
  const double buffer_bits =
      static_cast<double>(cfg.pe_group *
                          (cfg.weight_bank_per_group + cfg.activation_bank_per_group) *
                          cfg.buffer_bank_height * cfg.buffer_bank_width);
  AreaEstimate area;
  area.mac_area = coeffs.c_mac * macs;
  area.buffer_area = coeffs.c_bit * buffer_bits;
  area.control_area = coeffs.c_ctrl * static_cast<double>(cfg.pe_group);
  area.regfile_area = coeffs.c_reg * macs;
  area.total = area.mac_area + area.buffer_area + area.control_area + area.regfile_area;
  return area;
}

const char* constraint_name(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::MacUnits: return "mac_units";
    case ConstraintKind::WeightTileCapacity: return "weight_tile_capacity";
    case ConstraintKind::WeightDemand: return "weight_demand";
    case ConstraintKind::ActivationTileCapacity: return "activation_tile_capacity";
    case ConstraintKind::ActivationDemand: return "activation_demand";
    case ConstraintKind::UnrollExceedsTile: return "unroll_exceeds_tile";
  }
  return "unknown";
}

std::int64_t output_tile_extent(std::int64_t tile_extent, std::int64_t kernel,
                                std::int64_t stride) {
  if (tile_extent <= kernel) return 1;
  return (tile_extent - kernel) / stride + 1;
}

namespace {

void add_violation(std::vector<ConstraintViolation>& out, ConstraintKind kind,
                   double required, double available, const std::string& detail) {
  out.push_back({kind, detail, required, available});
}

}  // namespace

std::vector<ConstraintViolation> check_constraints(const AcceleratorConfig& cfg,
                                                   const MemoryProfile& profile,
                                                   std::span<const ConvParams> layers) {
  std::vector<ConstraintViolation> violations;

  // MAC array must cover the parallel MAC operations issued per cycle.
  const std::int64_t macs = cfg.pe_group * cfg.mac_per_group;
  const std::int64_t unroll_product =
      cfg.p_ox * cfg.p_oy * cfg.p_kx * cfg.p_ky * cfg.p_if * cfg.p_of * cfg.p_batch;
  if (macs < unroll_product) {
    std::ostringstream os;
    os << "pe_group*mac_per_group = " << macs << " < unroll product " << unroll_product;
    add_violation(violations, ConstraintKind::MacUnits,
                  static_cast<double>(unroll_product), static_cast<double>(macs), os.str());
  }

  const BufferCapacities caps = buffer_capacities(cfg);

  // Worst-case kernel window and derived output tile across the workload.
  // A graph with no lowered layers falls back to a 1x1 kernel at stride 1.
  std::int64_t kx_max = 1, ky_max = 1, kernel_area_max = 1;
  std::int64_t tox_max = cfg.t_ix, toy_max = cfg.t_iy, out_tile_max = cfg.t_ix * cfg.t_iy;
  if (!layers.empty()) {
    kx_max = ky_max = kernel_area_max = 0;
    tox_max = toy_max = out_tile_max = 0;
    for (const ConvParams& layer : layers) {
      kx_max = std::max(kx_max, layer.n_kx);
      ky_max = std::max(ky_max, layer.n_ky);
      kernel_area_max = std::max(kernel_area_max, layer.n_kx * layer.n_ky);
      const std::int64_t tox = output_tile_extent(cfg.t_ix, layer.n_kx, layer.stride_s);
      const std::int64_t toy = output_tile_extent(cfg.t_iy, layer.n_ky, layer.stride_s);
      tox_max = std::max(tox_max, tox);
      toy_max = std::max(toy_max, toy);
      out_tile_max = std::max(out_tile_max, tox * toy);
    }
  }

  // Weight buffer holds one weight tile.
  const std::int64_t weight_tile_bits = kernel_area_max * cfg.t_if * cfg.t_of * cfg.bit_width;
  if (caps.weight_bytes * 8 < weight_tile_bits) {
    std::ostringstream os;
    os << "weight buffer " << caps.weight_bytes << " B < weight tile "
       << (weight_tile_bits + 7) / 8 << " B";
    add_violation(violations, ConstraintKind::WeightTileCapacity,
                  static_cast<double>(weight_tile_bits) / 8.0,
                  static_cast<double>(caps.weight_bytes), os.str());
  }

  // Weight buffer holds the peak dynamic weight demand.
  if (caps.weight_bytes < profile.peak_weight_demand_bytes) {
    std::ostringstream os;
    os << "weight buffer " << caps.weight_bytes << " B < peak weight demand "
       << profile.peak_weight_demand_bytes << " B";
    add_violation(violations, ConstraintKind::WeightDemand,
                  static_cast<double>(profile.peak_weight_demand_bytes),
                  static_cast<double>(caps.weight_bytes), os.str());
  }

  // Activation buffer holds an input tile plus an output tile.
  const std::int64_t act_tile_bits =
      (cfg.t_ix * cfg.t_iy * cfg.t_if + out_tile_max * cfg.t_of) * cfg.bit_width;
  if (caps.activation_bytes * 8 < act_tile_bits) {
    std::ostringstream os;
    os << "activation buffer " << caps.activation_bytes << " B < tile footprint "
       << (act_tile_bits + 7) / 8 << " B";
    add_violation(violations, ConstraintKind::ActivationTileCapacity,
                  static_cast<double>(act_tile_bits) / 8.0,
                  static_cast<double>(caps.activation_bytes), os.str());
  }

  // Activation buffer holds the peak dynamic activation demand per batch.
  const std::int64_t act_demand = profile.peak_input_demand_bytes * cfg.batch_size;
  if (caps.activation_bytes < act_demand) {
    std::ostringstream os;
    os << "activation buffer " << caps.activation_bytes << " B < peak input demand x batch "
       << act_demand << " B";
    add_violation(violations, ConstraintKind::ActivationDemand,
                  static_cast<double>(act_demand),
                  static_cast<double>(caps.activation_bytes), os.str());
  }

  // Unroll factors must not exceed their tile sizes.
  auto check_order = [&](const char* p_name, std::int64_t p, const char* t_name,
                         std::int64_t t) {
    if (p > t) {
      std::ostringstream os;
      os << p_name << " = " << p << " > " << t_name << " = " << t;
      add_violation(violations, ConstraintKind::UnrollExceedsTile, static_cast<double>(p),
                    static_cast<double>(t), os.str());
    }
  };
  check_order("p_if", cfg.p_if, "t_if", cfg.t_if);
  check_order("p_of", cfg.p_of, "t_of", cfg.t_of);
  check_order("p_ox", cfg.p_ox, "derived t_ox", tox_max);
  check_order("p_oy", cfg.p_oy, "derived t_oy", toy_max);
  if (!layers.empty()) {
    check_order("p_kx", cfg.p_kx, "max kernel width", kx_max);
    check_order("p_ky", cfg.p_ky, "max kernel height", ky_max);
  }
  check_order("p_batch", cfg.p_batch, "batch_size", cfg.batch_size);

  return violations;
}

void DesignBounds::validate() const {
  const auto& fields = genome_fields();
  for (std::size_t i = 0; i < kGenomeSize; ++i) {
    if (candidates[i].empty()) {
      throw std::invalid_argument(std::string("empty candidate set for '") +
                                  fields[i].name + "'");
    }
    for (std::int64_t v : candidates[i]) {
      if (std::string(fields[i].name) == "loop_order") {
        if (v < 0 || v >= 720) {
          throw std::invalid_argument("loop_order candidate out of range: " +
                                      std::to_string(v));
        }
      } else if (v < 1) {
        throw std::invalid_argument(std::string("candidate for '") + fields[i].name +
                                    "' must be >= 1, got " + std::to_string(v));
      }
    }
  }
  if (!(area_budget > 0)) throw std::invalid_argument("area_budget must be positive");
  if (weight_bandwidth < 1 || input_bandwidth < 1) {
    throw std::invalid_argument("bandwidths must be >= 1");
  }
  if (bit_width < 1 || batch_size < 1 || !(frequency_hz > 0)) {
    throw std::invalid_argument("bit_width, batch_size and frequency_hz must be positive");
  }
}

AcceleratorConfig config_from_choices(const DesignBounds& bounds,
                                      const std::array<std::size_t, kGenomeSize>& choice) {
  AcceleratorConfig cfg;
  const auto& fields = genome_fields();
  for (std::size_t i = 0; i < kGenomeSize; ++i) {
    cfg.*fields[i].member = bounds.candidates[i].at(choice[i]);
  }
  cfg.frequency_hz = bounds.frequency_hz;
  cfg.weight_bandwidth = bounds.weight_bandwidth;
  cfg.input_bandwidth = bounds.input_bandwidth;
  cfg.bit_width = bounds.bit_width;
  cfg.batch_size = bounds.batch_size;
  return cfg;
}

AcceleratorConfig sample_config(Rng& rng, const DesignBounds& bounds,
                                const std::function<bool(const AcceleratorConfig&)>& feasible,
                                int max_retries) {
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::array<std::size_t, kGenomeSize> choice{};
    for (std::size_t i = 0; i < kGenomeSize; ++i) {
      choice[i] = static_cast<std::size_t>(pick_index(rng, bounds.candidates[i].size()));
    }
    AcceleratorConfig cfg = config_from_choices(bounds, choice);
    if (!feasible || feasible(cfg)) return cfg;
  }
  throw std::runtime_error("sample_config: no feasible configuration found in " +
                           std::to_string(max_retries) + " draws; bounds too tight");
}

std::vector<double> normalize_config(const AcceleratorConfig& cfg, const DesignBounds& bounds) {
  std::vector<double> out(kGenomeSize, 0.0);
  const auto& fields = genome_fields();
  for (std::size_t i = 0; i < kGenomeSize; ++i) {
    const auto [lo_it, hi_it] =
        std::minmax_element(bounds.candidates[i].begin(), bounds.candidates[i].end());
    const std::int64_t lo = *lo_it, hi = *hi_it;
    const std::int64_t v = cfg.*fields[i].member;
    if (v < lo || v > hi) {
      throw std::invalid_argument(std::string("value for '") + fields[i].name +
                                  "' outside bounds: " + std::to_string(v));
    }
    out[i] = (hi == lo) ? 0.0
                        : static_cast<double>(v - lo) / static_cast<double>(hi - lo);
  }
  return out;
}

AcceleratorConfig denormalize_config(std::span<const double> values,
                                     const DesignBounds& bounds) {
  if (values.size() != kGenomeSize) {
    throw std::invalid_argument("denormalize_config: expected " +
                                std::to_string(kGenomeSize) + " values");
  }
  std::array<std::size_t, kGenomeSize> choice{};
  for (std::size_t i = 0; i < kGenomeSize; ++i) {
    const auto& cands = bounds.candidates[i];
    const auto [lo_it, hi_it] = std::minmax_element(cands.begin(), cands.end());
    const double target = static_cast<double>(*lo_it) +
                          values[i] * static_cast<double>(*hi_it - *lo_it);
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cands.size(); ++j) {
      const double dist = std::abs(static_cast<double>(cands[j]) - target);
      if (dist < best_dist || (dist == best_dist && cands[j] < cands[best])) {
        best = j;
        best_dist = dist;
      }
    }
    choice[i] = best;
  }
  return config_from_choices(bounds, choice);
}

DesignBounds load_design_bounds(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("invalid arch-space JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("variables") || !root["variables"].is_object()) {
    throw std::invalid_argument("arch-space file must contain a 'variables' object");
  }
  DesignBounds bounds;
  const auto& fields = genome_fields();
  const json& vars = root["variables"];
  for (std::size_t i = 0; i < kGenomeSize; ++i) {
    if (!vars.contains(fields[i].name)) {
      throw std::invalid_argument(std::string("arch-space file missing variable '") +
                                  fields[i].name + "'");
    }
    const json& entry = vars[fields[i].name];
    if (!entry.is_object() || !entry.contains("candidates") ||
        !entry["candidates"].is_array() || entry["candidates"].empty()) {
      throw std::invalid_argument(std::string("variable '") + fields[i].name +
                                  "' needs a non-empty 'candidates' array");
    }
    for (const json& v : entry["candidates"]) {
      if (!v.is_number_integer()) {
        throw std::invalid_argument(std::string("candidates for '") + fields[i].name +
                                    "' must be integers");
      }
      bounds.candidates[i].push_back(v.get<std::int64_t>());
    }
  }
  bounds.area_budget = root.value("area_budget", bounds.area_budget);
  if (root.contains("area_coeffs")) {
    const json& c = root["area_coeffs"];
    bounds.area_coeffs.c_mac = c.value("mac", bounds.area_coeffs.c_mac);
    bounds.area_coeffs.c_bit = c.value("bit", bounds.area_coeffs.c_bit);
    bounds.area_coeffs.c_ctrl = c.value("control", bounds.area_coeffs.c_ctrl);
    bounds.area_coeffs.c_reg = c.value("regfile", bounds.area_coeffs.c_reg);
  }
  bounds.frequency_hz = root.value("frequency_hz", bounds.frequency_hz);
  if (root.contains("bandwidths")) {
    const json& b = root["bandwidths"];
    bounds.weight_bandwidth = b.value("weight", bounds.weight_bandwidth);
    bounds.input_bandwidth = b.value("input", bounds.input_bandwidth);
  }
  bounds.bit_width = root.value("bit_width", bounds.bit_width);
  bounds.batch_size = root.value("batch_size", bounds.batch_size);
  bounds.validate();
  return bounds;
}

std::string config_to_json(const AcceleratorConfig& cfg) {
  json obj;
  obj["schema_version"] = 1;
  for (const GenomeField& f : genome_fields()) {
    obj[f.name] = cfg.*f.member;
  }
  obj["frequency_hz"] = cfg.frequency_hz;
  obj["weight_bandwidth"] = cfg.weight_bandwidth;
  obj["input_bandwidth"] = cfg.input_bandwidth;
  obj["bit_width"] = cfg.bit_width;
  obj["batch_size"] = cfg.batch_size;
  return obj.dump(2) + "\n";
}

AcceleratorConfig config_from_json(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("invalid config JSON: ") + e.what());
  }
  AcceleratorConfig cfg;
  for (const GenomeField& f : genome_fields()) {
    if (!root.contains(f.name) || !root[f.name].is_number_integer()) {
      throw std::invalid_argument(std::string("config missing integer field '") + f.name + "'");
    }
    cfg.*f.member = root[f.name].get<std::int64_t>();
  }
  cfg.frequency_hz = root.value("frequency_hz", cfg.frequency_hz);
  cfg.weight_bandwidth = root.value("weight_bandwidth", cfg.weight_bandwidth);
  cfg.input_bandwidth = root.value("input_bandwidth", cfg.input_bandwidth);
  cfg.bit_width = root.value("bit_width", cfg.bit_width);
  cfg.batch_size = root.value("batch_size", cfg.batch_size);
  if (cfg.loop_order < 0 || cfg.loop_order >= 720) {
    throw std::invalid_argument("loop_order out of range");
  }
  return cfg;
}

}  // namespace dse
