#include "dse/ga.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dse {

namespace {

inline int ceil_fraction(double fraction, int n) {
  return static_cast<int>(std::ceil(fraction * n - 1e-12));
}

std::vector<ConvParams> stream_layers(const OpStream& stream) {
  std::vector<ConvParams> layers;
  for (const StreamEntry& entry : stream.entries) {
    if (entry.conv) layers.push_back(*entry.conv);
  }
  return layers;
}

bool record_before(const FitnessRecord& a, const FitnessRecord& b) {
  if (a.score != b.score) return a.score > b.score;
  return genome_less(a.config, b.config);
}

}  // namespace

void GaHyperparams::validate() const {
  if (population < 1) throw std::invalid_argument("population must be >= 1");
  if (generations < 1) throw std::invalid_argument("generations must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must be in (0,1)");
  if (beta < alpha) throw std::invalid_argument("beta must be >= alpha");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in [0,1)");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (ceil_fraction(alpha, population) < 1) {
    throw std::invalid_argument("alpha * population must round up to at least 1");
  }
  if (ceil_fraction(beta, population) < 2) {
    throw std::invalid_argument("beta * population must round up to at least 2");
  }
}

double geometric_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double log_sum = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) return 0.0;
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

bool config_feasible(const AcceleratorConfig& cfg, std::span<const WorkloadView> workloads,
                     const DesignBounds& bounds) {
  if (estimate_area(cfg, bounds.area_coeffs).total > bounds.area_budget) return false;
  for (const WorkloadView& w : workloads) {
    const std::vector<ConvParams> layers = stream_layers(*w.stream);
    if (!check_constraints(cfg, *w.profile, layers).empty()) return false;
  }
  return true;
}

FitnessRecord fitness(const AcceleratorConfig& cfg, std::span<const WorkloadView> workloads,
                      const DesignBounds& bounds, const FitnessOptions& opts) {
  if (workloads.empty()) throw std::invalid_argument("fitness needs at least one workload");

  FitnessRecord record;
  record.config = cfg;
  record.per_workload.assign(workloads.size(), 0.0);
  if (!config_feasible(cfg, workloads, bounds)) return record;

  for (std::size_t i = 0; i < workloads.size(); ++i) {
    CostBreakdown total;
    if (opts.refine) {
      try {
        total = buffer_sim::refine_latency(*workloads[i].stream, cfg, opts.granularity,
                                           opts.overlap);
      } catch (const buffer_sim::CapacityError&) {
        return record;  // feasible = false, score 0
      }
    } else {
      total = model_latency(*workloads[i].stream, cfg);
    }
    record.per_workload[i] =
        total.total_cycles > 0 ? throughput_gops(total, cfg.frequency_hz) : 0.0;
  }
  record.feasible = true;
  record.score = workloads.size() == 1 ? record.per_workload[0]
                                       : geometric_mean(record.per_workload);
  return record;
}

std::vector<FitnessRecord> evaluate_configs(std::span<const AcceleratorConfig> configs,
                                            std::span<const WorkloadView> workloads,
                                            const DesignBounds& bounds,
                                            const FitnessOptions& opts, int jobs) {
  std::vector<FitnessRecord> records(configs.size());
  std::exception_ptr error;
  if (jobs > 1) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
#endif
    for (std::size_t i = 0; i < configs.size(); ++i) {
      try {
        records[i] = fitness(configs[i], workloads, bounds, opts);
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
        if (!error) error = std::current_exception();
      }
    }
  } else {
    for (std::size_t i = 0; i < configs.size(); ++i) {
      records[i] = fitness(configs[i], workloads, bounds, opts);
    }
  }
  if (error) std::rethrow_exception(error);
  return records;
}

std::pair<AcceleratorConfig, AcceleratorConfig> crossover(const AcceleratorConfig& father,
                                                          const AcceleratorConfig& mother,
                                                          Rng& rng) {
  const auto& fields = genome_fields();
  const std::size_t subset_size = 1 + static_cast<std::size_t>(pick_index(rng, kGenomeSize - 1));
  const std::vector<std::size_t> subset = pick_distinct(rng, kGenomeSize, subset_size);

  AcceleratorConfig child1 = mother;  // complement from mother
  AcceleratorConfig child2 = father;
  for (std::size_t idx : subset) {
    child1.*fields[idx].member = father.*fields[idx].member;
    child2.*fields[idx].member = mother.*fields[idx].member;
  }
  return {child1, child2};
}

AcceleratorConfig mutate(const AcceleratorConfig& cfg, Rng& rng, const DesignBounds& bounds) {
  const auto& fields = genome_fields();
  const std::size_t subset_size = static_cast<std::size_t>(pick_index(rng, kGenomeSize + 1));
  AcceleratorConfig mutant = cfg;
  for (std::size_t idx : pick_distinct(rng, kGenomeSize, subset_size)) {
    const auto& cands = bounds.candidates[idx];
    mutant.*fields[idx].member = cands[pick_index(rng, cands.size())];
  }
  return mutant;
}

SearchResult evolve(std::span<const WorkloadView> workloads, const GaHyperparams& hyper,
                    const DesignBounds& bounds, std::uint64_t seed,
                    const FitnessOptions& fopts, const EvolveOptions& eopts) {
  hyper.validate();
  bounds.validate();
  const int n = hyper.population;
  Rng rng(seed);

  auto feasible = [&](const AcceleratorConfig& cfg) {
    return config_feasible(cfg, workloads, bounds);
  };

  std::vector<AcceleratorConfig> population;
  population.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    population.push_back(sample_config(rng, bounds, feasible, eopts.sample_retries));
  }

  SearchResult result;
  auto record_generation = [&](int gen) {
    std::vector<FitnessRecord> records =
        evaluate_configs(population, workloads, bounds, fopts, eopts.jobs);
    std::sort(records.begin(), records.end(), record_before);
    GenerationLog log_row;
    log_row.gen = gen;
    log_row.best = records.front().score;
    double sum = 0.0;
    for (const FitnessRecord& r : records) {
      sum += r.score;
      if (r.feasible) ++log_row.feasible_count;
    }
    log_row.mean = sum / static_cast<double>(records.size());
    result.best_per_generation.push_back(log_row.best);
    result.log.push_back(log_row);
    result.generations.push_back(std::move(records));
  };

  record_generation(0);

  const int elite_count = std::min(n, ceil_fraction(hyper.alpha, n));
  const int parent_pool = std::max(2, std::min(n, ceil_fraction(hyper.beta, n)));
  const int mutation_count = ceil_fraction(hyper.gamma, n);

  int stall = 0;
  for (int gen = 1; gen <= hyper.generations; ++gen) {
    const std::vector<FitnessRecord>& current = result.generations.back();

    std::vector<AcceleratorConfig> next;
    next.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < elite_count; ++i) next.push_back(current[i].config);
    while (static_cast<int>(next.size()) < n) {
      const auto f = static_cast<std::size_t>(pick_index(rng, parent_pool));
      const auto m = static_cast<std::size_t>(pick_index(rng, parent_pool));
      auto [child1, child2] = crossover(current[f].config, current[m].config, rng);
      next.push_back(child1);
      if (static_cast<int>(next.size()) < n) next.push_back(child2);
    }

    // Mutation spares the elite block so the best score never regresses.
    const int eligible = n - elite_count;
    const int to_mutate = std::min(mutation_count, eligible);
    if (to_mutate > 0) {
      for (std::size_t offset : pick_distinct(rng, static_cast<std::size_t>(eligible),
                                              static_cast<std::size_t>(to_mutate))) {
        auto& member = next[static_cast<std::size_t>(elite_count) + offset];
        member = mutate(member, rng, bounds);
      }
    }

    population = std::move(next);
    record_generation(gen);

    const std::size_t last = result.best_per_generation.size() - 1;
    if (result.best_per_generation[last] <= result.best_per_generation[last - 1]) {
      ++stall;
    } else {
      stall = 0;
    }
    if (stall >= hyper.patience) break;
  }
  return result;
}

CandidateSet top_candidates(const SearchResult& result, double fraction,
                            const DesignBounds& bounds) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("fraction must be in (0, 1]");
  }
  if (result.generations.empty()) {
    throw std::invalid_argument("empty search result");
  }

  std::vector<const FitnessRecord*> distinct;
  for (const FitnessRecord& record : result.final_population()) {
    if (!record.feasible) continue;
    const bool seen = std::any_of(distinct.begin(), distinct.end(),
                                  [&](const FitnessRecord* r) {
                                    return genome_equal(r->config, record.config);
                                  });
    if (!seen) distinct.push_back(&record);
  }
  if (distinct.empty()) {
    throw std::runtime_error("no feasible configurations in the final population");
  }

  const auto keep = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(distinct.size()) - 1e-12));
  CandidateSet set;
  for (std::size_t i = 0; i < std::min(keep, distinct.size()); ++i) {
    Candidate c;
    c.config = distinct[i]->config;
    c.score = distinct[i]->score;
    c.per_workload = distinct[i]->per_workload;
    c.normalized = normalize_config(c.config, bounds);
    set.candidates.push_back(std::move(c));
  }
  return set;
}

}  // namespace dse
