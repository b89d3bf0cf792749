#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "maxcap/choice.hpp"
#include "maxcap/types.hpp"

namespace maxcap {

using Clock = std::chrono::steady_clock;
/// Cooperative time budget; solvers poll it between iterations and inside
/// long neighborhood scans.
using Deadline = std::optional<Clock::time_point>;

inline bool expired(const Deadline& d) {
  return d.has_value() && Clock::now() >= *d;
}

struct TrustRegionConfig {
  int initial_radius = 0;  // 0 = auto: max(1, r/2) swaps
  double expand_threshold = 0.75;
  double shrink_threshold = 0.25;
  double expand_factor = 2.0;
  double shrink_factor = 0.5;
  int max_iterations = 500;
};

struct SolverReport {
  double objective = 0.0;
  long iterations = 0;
  long evaluations = 0;  // objective evaluations, incremental ones included
  long gradient_evaluations = 0;
  double wall_seconds = 0.0;
  bool completed = true;  // false when the deadline cut the run short
  std::vector<double> trajectory;  // start objective plus each accepted one
};

struct SolveResult {
  Solution solution;
  SolverReport report;
};

struct ExactResult {
  Solution solution;
  double objective = 0.0;
  bool completed = true;
  long evaluations = 0;
};

/// Uniform random r-subset of the candidates, deterministic per seed.
Solution random_solution(const UtilityTable& util, int r, std::uint64_t seed);
Solution random_solution(const Instance& instance, int r, std::uint64_t seed);

/// Exhaustive optimum; ties resolved to the lexicographically smallest set.
/// Refuses instances with C(n_candidates, r) > subset_cap.
ExactResult exact_enumerate(const UtilityTable& util, const ChoiceModelSpec& spec, int r,
                            std::uint64_t subset_cap = 1000000, Deadline deadline = {});
ExactResult exact_enumerate(const Instance& instance, const ChoiceModelSpec& spec, int r,
                            std::uint64_t subset_cap = 1000000, Deadline deadline = {});

/// r rounds of best-marginal-gain insertion; ties go to the smallest id.
Solution greedy(const UtilityTable& util, const ChoiceModelSpec& spec, int r,
                Deadline deadline = {});
Solution greedy(const Instance& instance, const ChoiceModelSpec& spec, int r,
                Deadline deadline = {});

/// Argmax of the linear model g.x over binary x with sum(x) = r and
/// Hamming(x, current) <= 2*radius: the radius lowest-gradient selected
/// locations are paired with the radius highest-gradient unselected ones
/// and every pair with strictly positive predicted gain is swapped.
/// Returns `current` unchanged when no pair gains.
Solution tr_subproblem(const std::vector<LocationId>& candidates, const Solution& current,
                       const std::vector<double>& gradient, int radius);

/// Binary trust region ascent from `start`: linearize the relaxed objective
/// at the incumbent, take the best swap set within the radius, accept on
/// actual improvement, and grow/shrink the radius by the achieved-to-
/// predicted ratio. Stops on radius < 1, no predicted gain, iteration cap,
/// or deadline.
SolveResult bitr(const UtilityTable& util, const ChoiceModelSpec& spec, const Solution& start,
                 const TrustRegionConfig& config = {}, Deadline deadline = {});
SolveResult bitr(const Instance& instance, const ChoiceModelSpec& spec, const Solution& start,
                 const TrustRegionConfig& config = {}, Deadline deadline = {});

/// Best of n_starts independent seeded BiTR runs.
SolveResult bitr_multistart(const UtilityTable& util, const ChoiceModelSpec& spec, int r,
                            int n_starts = 10, std::uint64_t seed = 0,
                            const TrustRegionConfig& config = {}, Deadline deadline = {});
SolveResult bitr_multistart(const Instance& instance, const ChoiceModelSpec& spec, int r,
                            int n_starts = 10, std::uint64_t seed = 0,
                            const TrustRegionConfig& config = {}, Deadline deadline = {});

/// The best of the same n_starts random solutions bitr_multistart starts
/// from, without any search. Baseline for dominance comparisons.
SolveResult best_random(const UtilityTable& util, const ChoiceModelSpec& spec, int r,
                        int n_starts = 10, std::uint64_t seed = 0);

/// Best-improvement local search: apply the best strictly improving
/// swap(1,1) until none exists, then try swap(2,2); any accepted 2-2 move
/// resumes the 1-1 phase. The result admits no improving move in either
/// neighborhood (unless the deadline struck first).
Solution local_search(const UtilityTable& util, const ChoiceModelSpec& spec,
                      const Solution& start, Deadline deadline = {},
                      SolverReport* report = nullptr);
Solution local_search(const Instance& instance, const ChoiceModelSpec& spec,
                      const Solution& start, Deadline deadline = {});

/// One seeded random start, BiTR, then local search.
SolveResult bitr_ls(const UtilityTable& util, const ChoiceModelSpec& spec, int r,
                    std::uint64_t seed = 0, const TrustRegionConfig& config = {},
                    Deadline deadline = {});
SolveResult bitr_ls(const Instance& instance, const ChoiceModelSpec& spec, int r,
                    std::uint64_t seed = 0, const TrustRegionConfig& config = {},
                    Deadline deadline = {});

}  // namespace maxcap
