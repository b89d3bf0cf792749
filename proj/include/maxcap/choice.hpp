#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "maxcap/instance.hpp"
#include "maxcap/types.hpp"

namespace maxcap {

enum class ChoiceModel { MNL, MMNL, NestedLogit };

const char* to_string(ChoiceModel model);

/// Parameterization of the customer choice model.
///
/// Utilities are v_ij = -beta * c_ij for candidate locations and
/// v_ij = -beta * alpha * c_ij for competitor locations. MMNL replaces the
/// deterministic distance by K i.i.d. draws from
/// Uniform[(1-delta) c, (1+delta) c]. The nested model partitions all
/// locations into nests with dissimilarity mu_l > 0 and inclusion
/// coefficients a_j > 0.
struct ChoiceModelSpec {
  ChoiceModel model = ChoiceModel::MNL;
  double beta = 1.0;   // > 0, utility sensitivity
  double alpha = 1.0;  // > 0, competitor attractiveness multiplier

  // MMNL
  int sample_count = 1;                 // K >= 1
  double perturbation_halfwidth = 0.2;  // delta in [0,1)
  std::uint64_t rng_seed = 0;

  // Nested logit
  std::map<LocationId, int> nest_assignment;  // total map over all locations
  std::vector<double> mu_per_nest;            // each > 0
  std::map<LocationId, double> a_coefficients;  // missing entries mean 1.0

  static ChoiceModelSpec mnl(double beta, double alpha);
  static ChoiceModelSpec mmnl(double beta, double alpha, int sample_count,
                              double perturbation_halfwidth, std::uint64_t rng_seed);
  /// Uniform mu and a across nests; the common experimental setup.
  static ChoiceModelSpec nested(double beta, double alpha, const NestSpec& nests,
                                double mu = 2.0, double a = 1.0);

  int n_nests() const { return static_cast<int>(mu_per_nest.size()); }
};

/// Precomputed exponentiated utilities for one (instance, spec) pair.
///
/// Layout mirrors the instance: one column per location in id order. For
/// MNL there is a single sample; MMNL holds K samples. For the nested model
/// `weights` stores a_j * exp(mu_l(j) * v_ij) and `competitor_nest_total`
/// holds the fixed competitor part D_il per zone and nest.
///
/// Immutable after construction and safe to share across solver runs.
struct UtilityTable {
  ChoiceModel model = ChoiceModel::MNL;
  std::size_t n_zones = 0;
  std::size_t n_locations = 0;

  std::vector<ZoneId> zone_ids;
  std::vector<double> demand;            // q_i, per zone
  std::vector<LocationId> location_ids;  // id per column, ascending
  std::vector<std::uint8_t> candidate_mask;  // 1 per candidate column
  std::vector<LocationId> candidate_ids_;    // ascending

  // per sample: zone-major exponentiated utilities, n_zones * n_locations
  std::vector<std::vector<double>> weights;
  // per sample: per-zone competitor total U_i (MNL/MMNL)
  std::vector<std::vector<double>> competitor_total;

  // nested model only
  int n_nests = 0;
  std::vector<int> nest_of;                  // per column
  std::vector<double> mu;                    // per nest
  std::vector<double> competitor_nest_total; // zone-major, n_zones * n_nests: D_il

  std::size_t samples() const { return weights.size(); }
  const std::vector<LocationId>& candidate_ids() const { return candidate_ids_; }
  std::size_t n_candidates() const { return candidate_ids_.size(); }

  /// Column index of a location id; throws ContractError if unknown.
  std::size_t column_of(LocationId id) const;
  /// Row index of a zone id; throws ContractError if unknown.
  std::size_t row_of(ZoneId id) const;

  double weight(std::size_t sample, std::size_t zone_idx, std::size_t col) const {
    return weights[sample][zone_idx * n_locations + col];
  }
};

/// Exponentiates utilities for all zones and locations.
/// Throws ValidationError on nonfinite entries (naming zone and location)
/// and when some zone has a zero competitor total.
UtilityTable build_utilities(const Instance& instance, const ChoiceModelSpec& spec);

/// Choice probabilities over X union Y for one zone, as (location id, p)
/// pairs in id order. Entries sum to 1; an empty solution normalizes over
/// the competitors alone.
std::vector<std::pair<LocationId, double>> choice_probabilities(
    const UtilityTable& util, const ChoiceModelSpec& spec, ZoneId zone,
    const Solution& sol);

/// Expected number of captured customers R(X) for the selected set.
double capture(const UtilityTable& util, const ChoiceModelSpec& spec, const Solution& sol);

/// Continuous relaxation of R: the 0/1 membership of candidate j is
/// replaced by weights[j] in [0,1] (weights indexed like candidate_ids()).
/// At binary weights this equals capture() exactly.
double relaxed_capture(const UtilityTable& util, const ChoiceModelSpec& spec,
                       const std::vector<double>& weights);

/// Analytic gradient of relaxed_capture with respect to the weights.
std::vector<double> capture_gradient(const UtilityTable& util, const ChoiceModelSpec& spec,
                                     const std::vector<double>& weights);

/// Incremental evaluator for swap-based search. Owns the current solution
/// and per-zone (per-sample, per-nest) sums so that a hypothetical
/// swap(1,1) or swap(2,2) is evaluated in O(zones) / O(zones * samples)
/// without touching the cached state.
///
/// Exclusively owned by one solver run; the referenced UtilityTable may be
/// shared.
class EvalCache {
public:
  EvalCache(const UtilityTable& util, const ChoiceModelSpec& spec, const Solution& sol);

  const Solution& solution() const { return sol_; }
  double objective() const { return objective_; }

  /// Objective after replacing `remove` (selected) by `add` (unselected).
  double swap_objective(LocationId remove, LocationId add) const;
  /// Objective after a two-for-two exchange.
  double swap2_objective(LocationId remove1, LocationId remove2,
                         LocationId add1, LocationId add2) const;
  double insert_objective(LocationId add) const;

  void commit_swap(LocationId remove, LocationId add);
  void commit_swap2(LocationId remove1, LocationId remove2,
                    LocationId add1, LocationId add2);
  void commit_insert(LocationId add);
  void commit_remove(LocationId remove);

private:
  struct Delta;  // columns leaving/entering the solution

  double eval_delta(const Delta& d) const;
  void apply_delta(const Delta& d);
  void recompute_objective();
  Delta checked_delta(const std::vector<LocationId>& removes,
                      const std::vector<LocationId>& adds) const;
  std::vector<std::pair<int, std::vector<std::size_t>>> touched_nest_members(
      const Delta& d) const;

  const UtilityTable* util_;
  Solution sol_;
  // MNL/MMNL: per sample, per zone firm total A_i
  std::vector<std::vector<double>> firm_total_;
  // nested: zone-major per-nest candidate sums C_il and cached powers
  std::vector<double> nest_firm_;        // n_zones * n_nests
  std::vector<double> nest_pow_;         // W_il^(1/mu_l)
  std::vector<double> nest_num_;         // C_il * W_il^(1/mu_l - 1)
  double objective_ = 0.0;
};

}  // namespace maxcap
