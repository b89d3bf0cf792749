#include "maxcap/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "maxcap/rng.hpp"

namespace maxcap {

namespace {

// strictly-improving threshold; the objective carries rounding noise of
// roughly machine epsilon times the demand total
constexpr double kGainEps = 1e-9;

struct Timer {
  Clock::time_point t0 = Clock::now();
  double seconds() const {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }
};

std::size_t gradient_index(const std::vector<LocationId>& candidates, LocationId id) {
  auto it = std::lower_bound(candidates.begin(), candidates.end(), id);
  if (it == candidates.end() || *it != id)
    throw ContractError("location " + std::to_string(id) + " is not a candidate");
  return static_cast<std::size_t>(it - candidates.begin());
}

std::vector<double> binary_weights(const std::vector<LocationId>& candidates,
                                   const Solution& sol) {
  std::vector<double> x(candidates.size(), 0.0);
  for (LocationId id : sol.selected) x[gradient_index(candidates, id)] = 1.0;
  return x;
}

void check_r(int r, std::size_t n_candidates) {
  if (r < 0 || static_cast<std::size_t>(r) > n_candidates)
    throw ContractError("cardinality r=" + std::to_string(r) + " out of range 0.." +
                        std::to_string(n_candidates));
}

}  // namespace

// ---------------------------------------------------------------------------
// random start

namespace {

Solution random_subset(std::vector<LocationId> ids, int r, std::uint64_t seed) {
  check_r(r, ids.size());
  Rng rng(seed);
  // partial Fisher-Yates: the first r entries are a uniform r-subset
  for (int i = 0; i < r; ++i) {
    const std::size_t j = i + rng.below(ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(r);
  return make_solution(std::move(ids));
}

}  // namespace

Solution random_solution(const UtilityTable& util, int r, std::uint64_t seed) {
  return random_subset(util.candidate_ids(), r, seed);
}

Solution random_solution(const Instance& instance, int r, std::uint64_t seed) {
  return random_subset(instance.candidate_ids(), r, seed);
}

// ---------------------------------------------------------------------------
// exact enumeration

namespace {

/// C(n, r), saturating at `cap + 1` to avoid overflow.
std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t r, std::uint64_t cap) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  std::uint64_t c = 1;
  for (std::uint64_t k = 1; k <= r; ++k) {
    // c * (n - r + k) / k, guarding the multiply
    if (c > (cap + 1) / (n - r + k) * k) return cap + 1;
    c = c * (n - r + k) / k;
    if (c > cap) return cap + 1;
  }
  return c;
}

struct ExactSearch {
  ExactSearch(EvalCache& c, const std::vector<LocationId>& ids, int target, Deadline d)
      : cache(c), cand(ids), r(target), deadline(d) {}

  EvalCache& cache;
  const std::vector<LocationId>& cand;
  int r;
  Deadline deadline;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<LocationId> best_set;
  std::vector<LocationId> chosen;
  long evaluations = 0;
  bool aborted = false;

  // lexicographic DFS; the first optimum found is the lexicographically
  // smallest tie winner
  void run(std::size_t from) {
    if (aborted) return;
    if (static_cast<int>(chosen.size()) == r) {
      ++evaluations;
      if ((evaluations & 1023) == 0 && expired(deadline)) {
        aborted = true;
        return;
      }
      const double obj = cache.objective();
      if (obj > best) {
        best = obj;
        best_set = chosen;
      }
      return;
    }
    const std::size_t need = r - chosen.size();
    for (std::size_t idx = from; idx + need <= cand.size(); ++idx) {
      cache.commit_insert(cand[idx]);
      chosen.push_back(cand[idx]);
      run(idx + 1);
      chosen.pop_back();
      cache.commit_remove(cand[idx]);
      if (aborted) return;
    }
  }
};

}  // namespace

ExactResult exact_enumerate(const UtilityTable& util, const ChoiceModelSpec& spec, int r,
                            std::uint64_t subset_cap, Deadline deadline) {
  const auto& cand = util.candidate_ids();
  check_r(r, cand.size());
  const std::uint64_t count = binomial_capped(cand.size(), r, subset_cap);
  if (count > subset_cap)
    throw ContractError("exact enumeration cap exceeded: C(" + std::to_string(cand.size()) +
                        "," + std::to_string(r) + ") > " + std::to_string(subset_cap));

  EvalCache cache(util, spec, Solution{});
  ExactSearch search{cache, cand, r, deadline};
  search.run(0);

  ExactResult res;
  res.completed = !search.aborted;
  res.evaluations = search.evaluations;
  if (search.best_set.empty() && r > 0 && search.best == -std::numeric_limits<double>::infinity())
    throw ContractError("exact enumeration evaluated no subset (budget hit immediately)");
  res.solution = make_solution(search.best_set);
  res.objective = search.best == -std::numeric_limits<double>::infinity() ? 0.0 : search.best;
  if (r == 0) {
    res.solution = Solution{};
    res.objective = 0.0;
  }
  return res;
}

ExactResult exact_enumerate(const Instance& instance, const ChoiceModelSpec& spec, int r,
                            std::uint64_t subset_cap, Deadline deadline) {
  return exact_enumerate(build_utilities(instance, spec), spec, r, subset_cap, deadline);
}

// ---------------------------------------------------------------------------
// greedy

Solution greedy(const UtilityTable& util, const ChoiceModelSpec& spec, int r, Deadline deadline) {
  const auto& cand = util.candidate_ids();
  check_r(r, cand.size());
  EvalCache cache(util, spec, Solution{});
  for (int round = 0; round < r; ++round) {
    double best_val = -std::numeric_limits<double>::infinity();
    LocationId best_id = -1;
    for (LocationId id : cand) {
      if (cache.solution().contains(id)) continue;
      const double val = cache.insert_objective(id);
      if (val > best_val) {  // strict: ties keep the smallest id
        best_val = val;
        best_id = id;
      }
    }
    cache.commit_insert(best_id);
    if (expired(deadline)) {
      // finish the remaining rounds cheaply to stay feasible: take the
      // smallest unselected ids
      for (LocationId id : cand) {
        if (static_cast<int>(cache.solution().selected.size()) >= r) break;
        if (!cache.solution().contains(id)) cache.commit_insert(id);
      }
      break;
    }
  }
  return cache.solution();
}

Solution greedy(const Instance& instance, const ChoiceModelSpec& spec, int r, Deadline deadline) {
  return greedy(build_utilities(instance, spec), spec, r, deadline);
}

// ---------------------------------------------------------------------------
// trust region

Solution tr_subproblem(const std::vector<LocationId>& candidates, const Solution& current,
                       const std::vector<double>& gradient, int radius) {
  if (radius < 1) throw ContractError("trust region radius must be >= 1");
  if (gradient.size() != candidates.size())
    throw ContractError("gradient length does not match candidate count");

  struct Entry {
    double g;
    LocationId id;
  };
  std::vector<Entry> sel, unsel;
  sel.reserve(current.selected.size());
  unsel.reserve(candidates.size() - current.selected.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (current.contains(candidates[j]))
      sel.push_back({gradient[j], candidates[j]});
    else
      unsel.push_back({gradient[j], candidates[j]});
  }

  // candidates to leave: lowest gradient first; on ties the smaller id stays
  std::sort(sel.begin(), sel.end(), [](const Entry& a, const Entry& b) {
    return a.g != b.g ? a.g < b.g : a.id > b.id;
  });
  // candidates to enter: highest gradient first; on ties the smaller id enters
  std::sort(unsel.begin(), unsel.end(), [](const Entry& a, const Entry& b) {
    return a.g != b.g ? a.g > b.g : a.id < b.id;
  });

  const std::size_t pairs =
      std::min({static_cast<std::size_t>(radius), sel.size(), unsel.size()});
  std::vector<LocationId> ids = current.selected;
  bool changed = false;
  for (std::size_t k = 0; k < pairs; ++k) {
    if (unsel[k].g > sel[k].g) {
      ids.erase(std::find(ids.begin(), ids.end(), sel[k].id));
      ids.push_back(unsel[k].id);
      changed = true;
    }
  }
  if (!changed) return current;
  return make_solution(std::move(ids));
}

SolveResult bitr(const UtilityTable& util, const ChoiceModelSpec& spec, const Solution& start,
                 const TrustRegionConfig& config, Deadline deadline) {
  Timer timer;
  SolveResult out;
  const auto& cand = util.candidate_ids();

  Solution cur = start;
  double obj = capture(util, spec, cur);  // also validates feasibility
  out.report.evaluations = 1;
  out.report.trajectory.push_back(obj);

  const int r = cur.r;
  const int max_radius = static_cast<int>(std::min<std::size_t>(r, cand.size() - r));
  if (max_radius >= 1) {
    int radius = config.initial_radius > 0 ? config.initial_radius : std::max(1, r / 2);
    radius = std::min(radius, max_radius);

    for (int it = 0; it < config.max_iterations; ++it) {
      if (expired(deadline)) {
        out.report.completed = false;
        break;
      }
      ++out.report.iterations;

      const auto g = capture_gradient(util, spec, binary_weights(cand, cur));
      ++out.report.gradient_evaluations;
      const Solution prop = tr_subproblem(cand, cur, g, radius);

      // predicted gain of the linear model
      double predicted = 0.0;
      for (LocationId id : prop.selected)
        if (!cur.contains(id)) predicted += g[gradient_index(cand, id)];
      for (LocationId id : cur.selected)
        if (!prop.contains(id)) predicted -= g[gradient_index(cand, id)];
      if (!(predicted > 0.0)) break;  // model sees no improving swap set

      const double prop_obj = capture(util, spec, prop);
      ++out.report.evaluations;
      const double actual = prop_obj - obj;
      const double ratio = actual / predicted;

      if (actual > 0.0) {
        cur = prop;
        obj = prop_obj;
        out.report.trajectory.push_back(obj);
      }
      if (ratio >= config.expand_threshold)
        radius = std::min(static_cast<int>(radius * config.expand_factor), max_radius);
      else if (ratio < config.shrink_threshold)
        radius = static_cast<int>(radius * config.shrink_factor);  // integer floor
      if (radius < 1) break;
    }
  }

  out.solution = std::move(cur);
  out.report.objective = obj;
  out.report.wall_seconds = timer.seconds();
  return out;
}

SolveResult bitr(const Instance& instance, const ChoiceModelSpec& spec, const Solution& start,
                 const TrustRegionConfig& config, Deadline deadline) {
  return bitr(build_utilities(instance, spec), spec, start, config, deadline);
}

namespace {

constexpr std::uint64_t kStartStream = 0xB17A;

}  // namespace

SolveResult bitr_multistart(const UtilityTable& util, const ChoiceModelSpec& spec, int r,
                            int n_starts, std::uint64_t seed, const TrustRegionConfig& config,
                            Deadline deadline) {
  if (n_starts < 1) throw ContractError("multistart needs at least one start");
  Timer timer;
  SolveResult best;
  bool have = false;
  bool completed = true;
  long evals = 0, iters = 0, gevals = 0;
  for (int s = 0; s < n_starts; ++s) {
    // the first start always runs so an exhausted budget still yields a
    // feasible incumbent
    if (s > 0 && expired(deadline)) {
      completed = false;
      break;
    }
    const Solution start = random_solution(util, r, derive_seed(seed, {kStartStream, (std::uint64_t)s}));
    SolveResult res = bitr(util, spec, start, config, deadline);
    evals += res.report.evaluations;
    iters += res.report.iterations;
    gevals += res.report.gradient_evaluations;
    completed = completed && res.report.completed;
    if (!have || res.report.objective > best.report.objective) {
      best = std::move(res);
      have = true;
    }
  }
  best.report.evaluations = evals;
  best.report.iterations = iters;
  best.report.gradient_evaluations = gevals;
  best.report.completed = completed;
  best.report.wall_seconds = timer.seconds();
  return best;
}

SolveResult bitr_multistart(const Instance& instance, const ChoiceModelSpec& spec, int r,
                            int n_starts, std::uint64_t seed, const TrustRegionConfig& config,
                            Deadline deadline) {
  return bitr_multistart(build_utilities(instance, spec), spec, r, n_starts, seed, config,
                         deadline);
}

SolveResult best_random(const UtilityTable& util, const ChoiceModelSpec& spec, int r,
                        int n_starts, std::uint64_t seed) {
  if (n_starts < 1) throw ContractError("need at least one random draw");
  Timer timer;
  SolveResult out;
  bool have = false;
  for (int s = 0; s < n_starts; ++s) {
    // same start stream as bitr_multistart, so its result is a lower bound
    // for the multistart one by construction
    Solution sol = random_solution(util, r, derive_seed(seed, {kStartStream, (std::uint64_t)s}));
    const double obj = capture(util, spec, sol);
    ++out.report.evaluations;
    if (!have || obj > out.report.objective) {
      out.solution = std::move(sol);
      out.report.objective = obj;
      have = true;
    }
  }
  out.report.trajectory.push_back(out.report.objective);
  out.report.wall_seconds = timer.seconds();
  return out;
}

// ---------------------------------------------------------------------------
// local search

Solution local_search(const UtilityTable& util, const ChoiceModelSpec& spec,
                      const Solution& start, Deadline deadline, SolverReport* report) {
  Timer timer;
  EvalCache cache(util, spec, start);
  const auto& cand = util.candidate_ids();
  long evals = 0;
  long moves = 0;
  bool completed = true;
  if (report) report->trajectory.push_back(cache.objective());

  auto unselected = [&]() {
    std::vector<LocationId> out;
    out.reserve(cand.size() - cache.solution().selected.size());
    for (LocationId id : cand)
      if (!cache.solution().contains(id)) out.push_back(id);
    return out;
  };

  int poll = 0;
  auto out_of_time = [&]() {
    if ((++poll & 31) != 0) return false;
    return expired(deadline);
  };

  bool done = false;
  while (!done) {
    // swap(1,1) phase: repeat the best improving single exchange
    bool improved11 = true;
    while (improved11) {
      improved11 = false;
      if (expired(deadline)) {
        completed = false;
        done = true;
        break;
      }
      const std::vector<LocationId> sel = cache.solution().selected;
      const std::vector<LocationId> rest = unselected();
      const double base = cache.objective();
      double best_gain = kGainEps;
      LocationId best_rem = -1, best_add = -1;
      bool cut = false;
      for (LocationId rem : sel) {
        for (LocationId add : rest) {
          const double gain = cache.swap_objective(rem, add) - base;
          ++evals;
          if (gain > best_gain) {
            best_gain = gain;
            best_rem = rem;
            best_add = add;
          }
          if (out_of_time()) {
            cut = true;
            break;
          }
        }
        if (cut) break;
      }
      if (cut) {
        completed = false;
        done = true;
        break;
      }
      if (best_rem != -1) {
        cache.commit_swap(best_rem, best_add);
        ++moves;
        if (report) report->trajectory.push_back(cache.objective());
        improved11 = true;
      }
    }
    if (done) break;

    // swap(2,2) phase: one accepted move sends us back to swap(1,1)
    const std::vector<LocationId> sel = cache.solution().selected;
    const std::vector<LocationId> rest = unselected();
    const double base = cache.objective();
    double best_gain = kGainEps;
    LocationId br1 = -1, br2 = -1, ba1 = -1, ba2 = -1;
    bool cut = false;
    for (std::size_t i1 = 0; i1 + 1 < sel.size() && !cut; ++i1)
      for (std::size_t i2 = i1 + 1; i2 < sel.size() && !cut; ++i2)
        for (std::size_t a1 = 0; a1 + 1 < rest.size() && !cut; ++a1)
          for (std::size_t a2 = a1 + 1; a2 < rest.size(); ++a2) {
            const double gain =
                cache.swap2_objective(sel[i1], sel[i2], rest[a1], rest[a2]) - base;
            ++evals;
            if (gain > best_gain) {
              best_gain = gain;
              br1 = sel[i1];
              br2 = sel[i2];
              ba1 = rest[a1];
              ba2 = rest[a2];
            }
            if (out_of_time()) {
              cut = true;
              break;
            }
          }
    if (cut) {
      completed = false;
      break;
    }
    if (br1 != -1) {
      cache.commit_swap2(br1, br2, ba1, ba2);
      ++moves;
      if (report) report->trajectory.push_back(cache.objective());
    } else {
      break;  // local optimum for both neighborhoods
    }
  }

  if (report) {
    report->objective = cache.objective();
    report->evaluations += evals;
    report->iterations += moves;
    report->completed = completed;
    report->wall_seconds = timer.seconds();
  }
  return cache.solution();
}

Solution local_search(const Instance& instance, const ChoiceModelSpec& spec,
                      const Solution& start, Deadline deadline) {
  return local_search(build_utilities(instance, spec), spec, start, deadline, nullptr);
}

SolveResult bitr_ls(const UtilityTable& util, const ChoiceModelSpec& spec, int r,
                    std::uint64_t seed, const TrustRegionConfig& config, Deadline deadline) {
  Timer timer;
  const Solution start = random_solution(util, r, seed);
  SolveResult res = bitr(util, spec, start, config, deadline);

  SolverReport ls_report;
  Solution improved = local_search(util, spec, res.solution, deadline, &ls_report);

  SolveResult out;
  out.solution = std::move(improved);
  out.report = res.report;
  out.report.objective = std::max(res.report.objective, ls_report.objective);
  out.report.evaluations += ls_report.evaluations;
  out.report.iterations += ls_report.iterations;
  out.report.completed = res.report.completed && ls_report.completed;
  // skip the duplicated starting point of the local-search trajectory
  out.report.trajectory.insert(out.report.trajectory.end(), ls_report.trajectory.begin() + 1,
                               ls_report.trajectory.end());
  out.report.wall_seconds = timer.seconds();
  return out;
}

SolveResult bitr_ls(const Instance& instance, const ChoiceModelSpec& spec, int r,
                    std::uint64_t seed, const TrustRegionConfig& config, Deadline deadline) {
  return bitr_ls(build_utilities(instance, spec), spec, r, seed, config, deadline);
}

}  // namespace maxcap
