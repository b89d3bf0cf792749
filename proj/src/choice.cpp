#include "maxcap/choice.hpp"

#include <algorithm>
#include <cmath>

#include "maxcap/rng.hpp"

namespace maxcap {

const char* to_string(ChoiceModel model) {
  switch (model) {
    case ChoiceModel::MNL: return "mnl";
    case ChoiceModel::MMNL: return "mmnl";
    case ChoiceModel::NestedLogit: return "nested";
  }
  return "?";
}

ChoiceModelSpec ChoiceModelSpec::mnl(double beta, double alpha) {
  ChoiceModelSpec s;
  s.model = ChoiceModel::MNL;
  s.beta = beta;
  s.alpha = alpha;
  return s;
}

ChoiceModelSpec ChoiceModelSpec::mmnl(double beta, double alpha, int sample_count,
                                      double perturbation_halfwidth, std::uint64_t rng_seed) {
  ChoiceModelSpec s;
  s.model = ChoiceModel::MMNL;
  s.beta = beta;
  s.alpha = alpha;
  s.sample_count = sample_count;
  s.perturbation_halfwidth = perturbation_halfwidth;
  s.rng_seed = rng_seed;
  return s;
}

ChoiceModelSpec ChoiceModelSpec::nested(double beta, double alpha, const NestSpec& nests,
                                        double mu, double a) {
  ChoiceModelSpec s;
  s.model = ChoiceModel::NestedLogit;
  s.beta = beta;
  s.alpha = alpha;
  s.nest_assignment = nests.assignment;
  s.mu_per_nest.assign(nests.n_nests, mu);
  if (a != 1.0)
    for (const auto& [id, nest] : nests.assignment) s.a_coefficients[id] = a;
  return s;
}

namespace {

void check_spec(const ChoiceModelSpec& spec) {
  if (!(spec.beta > 0.0)) throw ValidationError("beta must be > 0");
  if (!(spec.alpha > 0.0)) throw ValidationError("alpha must be > 0");
  if (spec.model == ChoiceModel::MMNL) {
    if (spec.sample_count < 1) throw ValidationError("MMNL sample count must be >= 1");
    if (!(spec.perturbation_halfwidth >= 0.0 && spec.perturbation_halfwidth < 1.0))
      throw ValidationError("MMNL perturbation halfwidth must lie in [0,1)");
  }
  if (spec.model == ChoiceModel::NestedLogit) {
    if (spec.mu_per_nest.empty()) throw ValidationError("nested model needs at least one nest");
    for (double m : spec.mu_per_nest)
      if (!(m > 0.0)) throw ValidationError("every nest mu must be > 0");
  }
}

/// W^e computed as exp(e log W), with the empty-nest limit W == 0 -> 0.
inline double guarded_pow(double w, double e) {
  return w > 0.0 ? std::exp(e * std::log(w)) : 0.0;
}

}  // namespace

std::size_t UtilityTable::column_of(LocationId id) const {
  auto it = std::lower_bound(location_ids.begin(), location_ids.end(), id);
  if (it == location_ids.end() || *it != id)
    throw ContractError("unknown location id " + std::to_string(id));
  return static_cast<std::size_t>(it - location_ids.begin());
}

std::size_t UtilityTable::row_of(ZoneId id) const {
  auto it = std::lower_bound(zone_ids.begin(), zone_ids.end(), id);
  if (it == zone_ids.end() || *it != id)
    throw ContractError("unknown zone id " + std::to_string(id));
  return static_cast<std::size_t>(it - zone_ids.begin());
}

// ---------------------------------------------------------------------------
// construction

UtilityTable build_utilities(const Instance& inst, const ChoiceModelSpec& spec) {
  require_valid(inst);
  check_spec(spec);

  UtilityTable t;
  t.model = spec.model;
  t.n_zones = inst.n_zones();
  t.n_locations = inst.n_locations();
  t.zone_ids.reserve(t.n_zones);
  t.demand.reserve(t.n_zones);
  for (const auto& z : inst.zones) {
    t.zone_ids.push_back(z.id);
    t.demand.push_back(z.demand);
  }
  t.location_ids.reserve(t.n_locations);
  t.candidate_mask.reserve(t.n_locations);
  for (const auto& loc : inst.locations) {
    t.location_ids.push_back(loc.id);
    t.candidate_mask.push_back(loc.role == LocationRole::Candidate ? 1 : 0);
    if (loc.role == LocationRole::Candidate) t.candidate_ids_.push_back(loc.id);
  }

  const std::size_t n = t.n_zones, m = t.n_locations;

  auto check_entry = [&](double v, std::size_t i, std::size_t j) {
    if (!std::isfinite(v))
      throw ValidationError("nonfinite utility for zone " + std::to_string(t.zone_ids[i]) +
                            ", location " + std::to_string(t.location_ids[j]));
  };

  switch (spec.model) {
    case ChoiceModel::MNL:
    case ChoiceModel::MMNL: {
      const int samples = spec.model == ChoiceModel::MNL ? 1 : spec.sample_count;
      const double delta = spec.model == ChoiceModel::MNL ? 0.0 : spec.perturbation_halfwidth;
      Rng rng(spec.rng_seed);
      t.weights.assign(samples, std::vector<double>(n * m));
      t.competitor_total.assign(samples, std::vector<double>(n, 0.0));
      for (int k = 0; k < samples; ++k) {
        auto& w = t.weights[k];
        auto& u = t.competitor_total[k];
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            double c = inst.distance(i, j);
            if (delta > 0.0) c = rng.uniform((1.0 - delta) * c, (1.0 + delta) * c);
            const double scale = t.candidate_mask[j] ? spec.beta : spec.beta * spec.alpha;
            const double v = std::exp(-scale * c);
            check_entry(v, i, j);
            w[i * m + j] = v;
            if (!t.candidate_mask[j]) u[i] += v;
          }
          if (!(u[i] > 0.0))
            throw ValidationError("zone " + std::to_string(t.zone_ids[i]) +
                                  ": competitor utility total is zero (utilities underflowed)");
        }
      }
      break;
    }
    case ChoiceModel::NestedLogit: {
      const int L = spec.n_nests();
      t.n_nests = L;
      t.mu = spec.mu_per_nest;
      t.nest_of.resize(m);
      for (std::size_t j = 0; j < m; ++j) {
        auto it = spec.nest_assignment.find(t.location_ids[j]);
        if (it == spec.nest_assignment.end())
          throw ValidationError("location " + std::to_string(t.location_ids[j]) +
                                " has no nest assignment");
        if (it->second < 0 || it->second >= L)
          throw ValidationError("location " + std::to_string(t.location_ids[j]) +
                                ": nest id out of range");
        t.nest_of[j] = it->second;
      }
      for (const auto& [id, nest] : spec.nest_assignment)
        if (std::find(t.location_ids.begin(), t.location_ids.end(), id) == t.location_ids.end())
          throw ValidationError("nest assignment names unknown location " + std::to_string(id));
      auto a_of = [&](LocationId id) {
        auto it = spec.a_coefficients.find(id);
        const double a = it == spec.a_coefficients.end() ? 1.0 : it->second;
        if (!(a > 0.0))
          throw ValidationError("inclusion coefficient for location " + std::to_string(id) +
                                " must be > 0");
        return a;
      };
      t.weights.assign(1, std::vector<double>(n * m));
      t.competitor_nest_total.assign(n * L, 0.0);
      auto& w = t.weights[0];
      for (std::size_t i = 0; i < n; ++i) {
        double comp_total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          const double c = inst.distance(i, j);
          const double scale = t.candidate_mask[j] ? spec.beta : spec.beta * spec.alpha;
          const double v = a_of(t.location_ids[j]) * std::exp(-t.mu[t.nest_of[j]] * scale * c);
          check_entry(v, i, j);
          w[i * m + j] = v;
          if (!t.candidate_mask[j]) {
            t.competitor_nest_total[i * L + t.nest_of[j]] += v;
            comp_total += v;
          }
        }
        if (!(comp_total > 0.0))
          throw ValidationError("zone " + std::to_string(t.zone_ids[i]) +
                                ": competitor utility total is zero (utilities underflowed)");
      }
      break;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// evaluation helpers

namespace {

void check_model(const UtilityTable& util, const ChoiceModelSpec& spec) {
  if (util.model != spec.model)
    throw ContractError("utility table was built for a different choice model");
}

/// Column indices of the selected candidates, ascending. Throws if some id
/// is not a candidate.
std::vector<std::size_t> solution_columns(const UtilityTable& util, const Solution& sol) {
  if (static_cast<int>(sol.selected.size()) != sol.r)
    throw ContractError("solution cardinality differs from its target r");
  std::vector<std::size_t> cols;
  cols.reserve(sol.selected.size());
  for (LocationId id : sol.selected) {
    const std::size_t col = util.column_of(id);
    if (!util.candidate_mask[col])
      throw ContractError("location " + std::to_string(id) + " is not a candidate");
    cols.push_back(col);
  }
  return cols;
}

double capture_mnl_like(const UtilityTable& util, const std::vector<std::size_t>& cols) {
  const std::size_t n = util.n_zones, m = util.n_locations;
  double total = 0.0;
  for (std::size_t k = 0; k < util.samples(); ++k) {
    const auto& w = util.weights[k];
    const auto& u = util.competitor_total[k];
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double firm = 0.0;
      for (std::size_t col : cols) firm += w[i * m + col];
      acc += util.demand[i] * firm / (firm + u[i]);
    }
    total += acc;
  }
  return total / static_cast<double>(util.samples());
}

double nested_zone_value(const UtilityTable& util, std::size_t i, const double* firm_nest) {
  const int L = util.n_nests;
  double num = 0.0, den = 0.0;
  for (int l = 0; l < L; ++l) {
    const double c = firm_nest[l];
    const double w = c + util.competitor_nest_total[i * L + l];
    if (w <= 0.0) continue;
    const double pw = guarded_pow(w, 1.0 / util.mu[l]);
    den += pw;
    num += c * (pw / w);  // c * w^(1/mu - 1)
  }
  return den > 0.0 ? num / den : 0.0;
}

double capture_nested(const UtilityTable& util, const std::vector<std::size_t>& cols) {
  const std::size_t n = util.n_zones, m = util.n_locations;
  const int L = util.n_nests;
  const auto& w = util.weights[0];
  std::vector<double> firm(L);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(firm.begin(), firm.end(), 0.0);
    for (std::size_t col : cols) firm[util.nest_of[col]] += w[i * m + col];
    acc += util.demand[i] * nested_zone_value(util, i, firm.data());
  }
  return acc;
}

}  // namespace

double capture(const UtilityTable& util, const ChoiceModelSpec& spec, const Solution& sol) {
  check_model(util, spec);
  const auto cols = solution_columns(util, sol);
  if (util.model == ChoiceModel::NestedLogit) return capture_nested(util, cols);
  return capture_mnl_like(util, cols);
}

// ---------------------------------------------------------------------------
// choice probabilities

std::vector<std::pair<LocationId, double>> choice_probabilities(const UtilityTable& util,
                                                                const ChoiceModelSpec& spec,
                                                                ZoneId zone,
                                                                const Solution& sol) {
  check_model(util, spec);
  const std::size_t i = util.row_of(zone);
  const auto cols = solution_columns(util, sol);
  const std::size_t m = util.n_locations;

  // alternatives = selected candidates plus every competitor, id order
  std::vector<std::size_t> alt;
  {
    std::vector<std::size_t> comp;
    for (std::size_t j = 0; j < m; ++j)
      if (!util.candidate_mask[j]) comp.push_back(j);
    alt.resize(cols.size() + comp.size());
    std::merge(cols.begin(), cols.end(), comp.begin(), comp.end(), alt.begin());
  }

  std::vector<std::pair<LocationId, double>> out;
  out.reserve(alt.size());

  if (util.model == ChoiceModel::NestedLogit) {
    const auto& w = util.weights[0];
    const int L = util.n_nests;
    std::vector<double> nest_total(L, 0.0);  // W_il over X union Y
    for (std::size_t col : alt) nest_total[util.nest_of[col]] += w[i * m + col];
    double den = 0.0;
    std::vector<double> p1(L, 0.0);  // W^(1/mu - 1)
    for (int l = 0; l < L; ++l) {
      const double W = nest_total[l];
      if (W <= 0.0) continue;
      const double pw = guarded_pow(W, 1.0 / util.mu[l]);
      den += pw;
      p1[l] = pw / W;
    }
    for (std::size_t col : alt) {
      const double p = den > 0.0 ? w[i * m + col] * p1[util.nest_of[col]] / den : 0.0;
      out.emplace_back(util.location_ids[col], p);
    }
    return out;
  }

  // MNL / MMNL: average the per-sample shares
  std::vector<double> p(alt.size(), 0.0);
  for (std::size_t k = 0; k < util.samples(); ++k) {
    const auto& w = util.weights[k];
    double den = 0.0;
    for (std::size_t col : alt) den += w[i * m + col];
    for (std::size_t a = 0; a < alt.size(); ++a) p[a] += w[i * m + alt[a]] / den;
  }
  for (std::size_t a = 0; a < alt.size(); ++a)
    out.emplace_back(util.location_ids[alt[a]], p[a] / static_cast<double>(util.samples()));
  return out;
}

// ---------------------------------------------------------------------------
// relaxation and gradient

namespace {

void check_weights(const UtilityTable& util, const std::vector<double>& x) {
  if (x.size() != util.n_candidates())
    throw ContractError("weight vector length " + std::to_string(x.size()) +
                        " does not match candidate count " + std::to_string(util.n_candidates()));
  for (double v : x)
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError("relaxation weights must lie in [0,1]");
}

/// Candidate columns in id order (positions of candidate_mask == 1).
std::vector<std::size_t> candidate_columns(const UtilityTable& util) {
  std::vector<std::size_t> cols;
  cols.reserve(util.n_candidates());
  for (std::size_t j = 0; j < util.n_locations; ++j)
    if (util.candidate_mask[j]) cols.push_back(j);
  return cols;
}

}  // namespace

double relaxed_capture(const UtilityTable& util, const ChoiceModelSpec& spec,
                       const std::vector<double>& x) {
  check_model(util, spec);
  check_weights(util, x);
  const auto cand = candidate_columns(util);
  const std::size_t n = util.n_zones, m = util.n_locations;

  if (util.model == ChoiceModel::NestedLogit) {
    const auto& w = util.weights[0];
    const int L = util.n_nests;
    std::vector<double> firm(L);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(firm.begin(), firm.end(), 0.0);
      // zero weights are skipped so that binary weights reproduce the exact
      // arithmetic of capture()
      for (std::size_t j = 0; j < cand.size(); ++j)
        if (x[j] != 0.0) firm[util.nest_of[cand[j]]] += x[j] * w[i * m + cand[j]];
      acc += util.demand[i] * nested_zone_value(util, i, firm.data());
    }
    return acc;
  }

  double total = 0.0;
  for (std::size_t k = 0; k < util.samples(); ++k) {
    const auto& w = util.weights[k];
    const auto& u = util.competitor_total[k];
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double firm = 0.0;
      for (std::size_t j = 0; j < cand.size(); ++j)
        if (x[j] != 0.0) firm += x[j] * w[i * m + cand[j]];
      acc += util.demand[i] * firm / (firm + u[i]);
    }
    total += acc;
  }
  return total / static_cast<double>(util.samples());
}

std::vector<double> capture_gradient(const UtilityTable& util, const ChoiceModelSpec& spec,
                                     const std::vector<double>& x) {
  check_model(util, spec);
  check_weights(util, x);
  const auto cand = candidate_columns(util);
  const std::size_t n = util.n_zones, m = util.n_locations;
  std::vector<double> g(cand.size(), 0.0);

  if (util.model == ChoiceModel::NestedLogit) {
    const auto& w = util.weights[0];
    const int L = util.n_nests;
    std::vector<double> firm(L), p1(L), p2(L);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(firm.begin(), firm.end(), 0.0);
      for (std::size_t j = 0; j < cand.size(); ++j)
        if (x[j] != 0.0) firm[util.nest_of[cand[j]]] += x[j] * w[i * m + cand[j]];
      double num = 0.0, den = 0.0;
      for (int l = 0; l < L; ++l) {
        const double W = firm[l] + util.competitor_nest_total[i * L + l];
        if (W <= 0.0) {
          p1[l] = p2[l] = 0.0;
          continue;
        }
        const double pw = guarded_pow(W, 1.0 / util.mu[l]);
        p1[l] = pw / W;
        p2[l] = p1[l] / W;
        den += pw;
        num += firm[l] * p1[l];
      }
      if (den <= 0.0) continue;
      const double q = util.demand[i];
      const double den2 = den * den;
      for (std::size_t j = 0; j < cand.size(); ++j) {
        const std::size_t col = cand[j];
        const int l = util.nest_of[col];
        if (p1[l] == 0.0) continue;  // empty nest: zero by the W=0 guard
        const double t = w[i * m + col];
        const double inv_mu = 1.0 / util.mu[l];
        const double dnum = t * p1[l] + firm[l] * (inv_mu - 1.0) * p2[l] * t;
        const double dden = inv_mu * p1[l] * t;
        g[j] += q * (dnum * den - num * dden) / den2;
      }
    }
    return g;
  }

  // MNL / MMNL: d/dx_j of q A/(A+U) is q V_j U/(A+U)^2, averaged over samples
  for (std::size_t k = 0; k < util.samples(); ++k) {
    const auto& w = util.weights[k];
    const auto& u = util.competitor_total[k];
    for (std::size_t i = 0; i < n; ++i) {
      double firm = 0.0;
      for (std::size_t j = 0; j < cand.size(); ++j)
        if (x[j] != 0.0) firm += x[j] * w[i * m + cand[j]];
      const double d = firm + u[i];
      const double factor = util.demand[i] * u[i] / (d * d);
      for (std::size_t j = 0; j < cand.size(); ++j) g[j] += factor * w[i * m + cand[j]];
    }
  }
  const double inv_k = 1.0 / static_cast<double>(util.samples());
  for (double& v : g) v *= inv_k;
  return g;
}

// ---------------------------------------------------------------------------
// EvalCache

struct EvalCache::Delta {
  std::size_t removes[2];
  std::size_t adds[2];
  int n_removes = 0;
  int n_adds = 0;
  LocationId remove_ids[2];
  LocationId add_ids[2];
};

EvalCache::EvalCache(const UtilityTable& util, const ChoiceModelSpec& spec, const Solution& sol)
    : util_(&util), sol_(sol) {
  check_model(util, spec);
  const auto cols = solution_columns(util, sol);
  const std::size_t n = util.n_zones, m = util.n_locations;

  if (util.model == ChoiceModel::NestedLogit) {
    const int L = util.n_nests;
    const auto& w = util.weights[0];
    nest_firm_.assign(n * L, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t col : cols) nest_firm_[i * L + util.nest_of[col]] += w[i * m + col];
    nest_pow_.assign(n * L, 0.0);
    nest_num_.assign(n * L, 0.0);
  } else {
    firm_total_.assign(util.samples(), std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < util.samples(); ++k) {
      const auto& w = util.weights[k];
      auto& a = firm_total_[k];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t col : cols) a[i] += w[i * m + col];
    }
  }
  recompute_objective();
}

void EvalCache::recompute_objective() {
  const UtilityTable& util = *util_;
  const std::size_t n = util.n_zones;

  if (util.model == ChoiceModel::NestedLogit) {
    const int L = util.n_nests;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double num = 0.0, den = 0.0;
      for (int l = 0; l < L; ++l) {
        const double c = nest_firm_[i * L + l];
        const double W = c + util.competitor_nest_total[i * L + l];
        if (W <= 0.0) {
          nest_pow_[i * L + l] = 0.0;
          nest_num_[i * L + l] = 0.0;
          continue;
        }
        const double pw = guarded_pow(W, 1.0 / util.mu[l]);
        nest_pow_[i * L + l] = pw;
        nest_num_[i * L + l] = c * (pw / W);
        den += pw;
        num += nest_num_[i * L + l];
      }
      acc += util.demand[i] * (den > 0.0 ? num / den : 0.0);
    }
    objective_ = acc;
    return;
  }

  double total = 0.0;
  for (std::size_t k = 0; k < util.samples(); ++k) {
    const auto& u = util.competitor_total[k];
    const auto& a = firm_total_[k];
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += util.demand[i] * a[i] / (a[i] + u[i]);
    total += acc;
  }
  objective_ = total / static_cast<double>(util.samples());
}

EvalCache::Delta EvalCache::checked_delta(const std::vector<LocationId>& removes,
                                          const std::vector<LocationId>& adds) const {
  Delta d;
  for (LocationId id : removes) {
    if (!sol_.contains(id))
      throw ContractError("swap: location " + std::to_string(id) + " is not selected");
    d.remove_ids[d.n_removes] = id;
    d.removes[d.n_removes++] = util_->column_of(id);
  }
  for (LocationId id : adds) {
    if (sol_.contains(id))
      throw ContractError("swap: location " + std::to_string(id) + " is already selected");
    const std::size_t col = util_->column_of(id);
    if (!util_->candidate_mask[col])
      throw ContractError("swap: location " + std::to_string(id) + " is not a candidate");
    d.add_ids[d.n_adds] = id;
    d.adds[d.n_adds++] = col;
  }
  if (d.n_removes == 2 && d.remove_ids[0] == d.remove_ids[1])
    throw ContractError("swap: duplicate removal id");
  if (d.n_adds == 2 && d.add_ids[0] == d.add_ids[1])
    throw ContractError("swap: duplicate insertion id");
  return d;
}

// Hypothetical member columns, ascending, of every nest the exchange
// touches. The nest sums C_il are resummed from these exact member lists
// rather than adjusted in place: an incremental add/subtract update can
// leave a ~1e-17 residue in an algebraically empty nest, which the concave
// power W^(1/mu) then amplifies far past the 1e-9 cache contract.
std::vector<std::pair<int, std::vector<std::size_t>>> EvalCache::touched_nest_members(
    const Delta& d) const {
  const UtilityTable& util = *util_;
  std::vector<std::pair<int, std::vector<std::size_t>>> out;
  auto slot = [&](int nest) -> std::vector<std::size_t>& {
    for (auto& [l, cols] : out)
      if (l == nest) return cols;
    out.emplace_back(nest, std::vector<std::size_t>{});
    return out.back().second;
  };
  auto removed = [&](std::size_t col) {
    for (int t = 0; t < d.n_removes; ++t)
      if (d.removes[t] == col) return true;
    return false;
  };
  for (int t = 0; t < d.n_removes; ++t) slot(util.nest_of[d.removes[t]]);
  for (int t = 0; t < d.n_adds; ++t) slot(util.nest_of[d.adds[t]]);
  for (auto& [nest, cols] : out) {
    for (LocationId id : sol_.selected) {
      const std::size_t col = util.column_of(id);
      if (util.nest_of[col] == nest && !removed(col)) cols.push_back(col);
    }
    for (int t = 0; t < d.n_adds; ++t)
      if (util.nest_of[d.adds[t]] == nest) cols.push_back(d.adds[t]);
    std::sort(cols.begin(), cols.end());
  }
  return out;
}

double EvalCache::eval_delta(const Delta& d) const {
  const UtilityTable& util = *util_;
  const std::size_t n = util.n_zones, m = util.n_locations;

  if (util.model == ChoiceModel::NestedLogit) {
    const int L = util.n_nests;
    const auto& w = util.weights[0];
    const auto touched = touched_nest_members(d);

    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // start from the cached per-nest contributions and replace the
      // touched nests with exact resummations
      double num = 0.0, den = 0.0;
      for (int l = 0; l < L; ++l) {
        den += nest_pow_[i * L + l];
        num += nest_num_[i * L + l];
      }
      for (const auto& [l, cols] : touched) {
        den -= nest_pow_[i * L + l];
        num -= nest_num_[i * L + l];
        double firm = 0.0;
        for (std::size_t col : cols) firm += w[i * m + col];
        const double W = firm + util.competitor_nest_total[i * L + l];
        if (W > 0.0) {
          const double pw = guarded_pow(W, 1.0 / util.mu[l]);
          den += pw;
          num += firm * (pw / W);
        }
      }
      acc += util.demand[i] * (den > 0.0 ? num / den : 0.0);
    }
    return acc;
  }

  double total = 0.0;
  for (std::size_t k = 0; k < util.samples(); ++k) {
    const auto& w = util.weights[k];
    const auto& u = util.competitor_total[k];
    const auto& a = firm_total_[k];
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double firm = a[i];
      for (int t = 0; t < d.n_removes; ++t) firm -= w[i * m + d.removes[t]];
      for (int t = 0; t < d.n_adds; ++t) firm += w[i * m + d.adds[t]];
      acc += util.demand[i] * firm / (firm + u[i]);
    }
    total += acc;
  }
  return total / static_cast<double>(util.samples());
}

void EvalCache::apply_delta(const Delta& d) {
  const UtilityTable& util = *util_;
  const std::size_t n = util.n_zones, m = util.n_locations;

  if (util.model == ChoiceModel::NestedLogit) {
    const int L = util.n_nests;
    const auto& w = util.weights[0];
    const auto touched = touched_nest_members(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& [l, cols] : touched) {
        double firm = 0.0;
        for (std::size_t col : cols) firm += w[i * m + col];
        nest_firm_[i * L + l] = firm;
      }
    }
  } else {
    for (std::size_t k = 0; k < util.samples(); ++k) {
      const auto& w = util.weights[k];
      auto& a = firm_total_[k];
      for (std::size_t i = 0; i < n; ++i) {
        for (int t = 0; t < d.n_removes; ++t) a[i] -= w[i * m + d.removes[t]];
        for (int t = 0; t < d.n_adds; ++t) a[i] += w[i * m + d.adds[t]];
      }
    }
  }

  // update the selected set
  auto& sel = sol_.selected;
  for (int t = 0; t < d.n_removes; ++t)
    sel.erase(std::lower_bound(sel.begin(), sel.end(), d.remove_ids[t]));
  for (int t = 0; t < d.n_adds; ++t)
    sel.insert(std::upper_bound(sel.begin(), sel.end(), d.add_ids[t]), d.add_ids[t]);
  sol_.r = static_cast<int>(sel.size());

  // refresh per-nest powers / objective from the updated sums
  recompute_objective();
}

double EvalCache::swap_objective(LocationId remove, LocationId add) const {
  return eval_delta(checked_delta({remove}, {add}));
}

double EvalCache::swap2_objective(LocationId remove1, LocationId remove2, LocationId add1,
                                  LocationId add2) const {
  return eval_delta(checked_delta({remove1, remove2}, {add1, add2}));
}

double EvalCache::insert_objective(LocationId add) const {
  return eval_delta(checked_delta({}, {add}));
}

void EvalCache::commit_swap(LocationId remove, LocationId add) {
  apply_delta(checked_delta({remove}, {add}));
}

void EvalCache::commit_swap2(LocationId remove1, LocationId remove2, LocationId add1,
                             LocationId add2) {
  apply_delta(checked_delta({remove1, remove2}, {add1, add2}));
}

void EvalCache::commit_insert(LocationId add) { apply_delta(checked_delta({}, {add})); }

void EvalCache::commit_remove(LocationId remove) { apply_delta(checked_delta({remove}, {})); }

}  // namespace maxcap
