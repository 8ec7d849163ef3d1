#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dse/analyzer.hpp"
#include "dse/arch.hpp"
#include "dse/buffer_sim.hpp"
#include "dse/cost.hpp"
#include "dse/rng.hpp"

namespace dse {

struct GaHyperparams {
  int population = 100;  // n
  int generations = 50;  // K
  double alpha = 0.1;    // elite fraction passed through unchanged
  double beta = 0.3;     // fraction of the sorted population eligible as parents
  double gamma = 0.1;    // fraction of the population mutated per generation
  int patience = 10;     // stop once the best score stalls this many generations

  /// Throws std::invalid_argument unless ceil(alpha*n) >= 1,
  /// ceil(beta*n) >= 2 and all fractions are in range.
  void validate() const;
};

/// A workload as seen by the optimizer: its operation stream and memory
/// profile. Layer dimensions for the constraint checks are derived from the
/// stream entries.
struct WorkloadView {
  const OpStream* stream = nullptr;
  const MemoryProfile* profile = nullptr;
};

struct FitnessOptions {
  bool refine = false;  // route latency through the buffer simulator
  std::int64_t granularity = 1;
  buffer_sim::Overlap overlap = buffer_sim::Overlap::Sum;
};

struct FitnessRecord {
  AcceleratorConfig config;
  double score = 0.0;  // GOPS, or geometric-mean GOPS across workloads
  bool feasible = false;
  std::vector<double> per_workload;
};

/// True when the config satisfies every workload's constraints and fits the
/// area budget. This is the validity test used when sampling.
bool config_feasible(const AcceleratorConfig& cfg, std::span<const WorkloadView> workloads,
                     const DesignBounds& bounds);

/// Scores a configuration. Any constraint violation or budget excess yields
/// feasible = false and score 0.
FitnessRecord fitness(const AcceleratorConfig& cfg, std::span<const WorkloadView> workloads,
                      const DesignBounds& bounds, const FitnessOptions& opts = {});

/// Scores many configurations; jobs > 1 evaluates them in parallel with
/// results identical to the serial (jobs == 1) reference path.
std::vector<FitnessRecord> evaluate_configs(std::span<const AcceleratorConfig> configs,
                                            std::span<const WorkloadView> workloads,
                                            const DesignBounds& bounds,
                                            const FitnessOptions& opts = {}, int jobs = 1);

/// Swaps a random non-empty proper subset of genome variables between the
/// parents; each child variable equals one parent's value for that variable.
std::pair<AcceleratorConfig, AcceleratorConfig> crossover(const AcceleratorConfig& father,
                                                          const AcceleratorConfig& mother,
                                                          Rng& rng);

/// Re-draws a random (possibly empty) subset of variables from their
/// candidate sets. Feasibility is not enforced; infeasible mutants score 0.
AcceleratorConfig mutate(const AcceleratorConfig& cfg, Rng& rng, const DesignBounds& bounds);

struct GenerationLog {
  int gen = 0;
  double best = 0.0;
  double mean = 0.0;
  int feasible_count = 0;
};

struct SearchResult {
  /// Sorted population of every generation, initial population first.
  std::vector<std::vector<FitnessRecord>> generations;
  std::vector<double> best_per_generation;
  std::vector<GenerationLog> log;

  const std::vector<FitnessRecord>& final_population() const { return generations.back(); }
};

struct EvolveOptions {
  int jobs = 1;
  int sample_retries = 10000;
};

/// Elitist genetic search: seed with feasible samples, then per generation
/// sort by score (ties broken by lexicographic genome), carry the top
/// ceil(alpha*n) unchanged, refill via crossover between parents drawn from
/// the top ceil(beta*n), and mutate ceil(gamma*n) non-elite members.
/// Deterministic for a fixed seed regardless of jobs.
SearchResult evolve(std::span<const WorkloadView> workloads, const GaHyperparams& hyper,
                    const DesignBounds& bounds, std::uint64_t seed,
                    const FitnessOptions& fopts = {}, const EvolveOptions& eopts = {});

struct Candidate {
  AcceleratorConfig config;
  double score = 0.0;
  std::vector<double> per_workload;
  std::vector<double> normalized;
};

struct CandidateSet {
  std::vector<Candidate> candidates;
};

/// Deduplicated feasible configs from the final population, best first,
/// truncated to ceil(fraction * count). Throws if none are feasible.
CandidateSet top_candidates(const SearchResult& result, double fraction,
                            const DesignBounds& bounds);

/// Geometric mean with zero-annihilation: any non-positive element yields 0.
double geometric_mean(std::span<const double> values);

}  // namespace dse
