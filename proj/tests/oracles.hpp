#pragma once

// Independent reference implementations used only by tests. Everything here
// evaluates the choice formulas directly from first principles (explicit
// sums over X and Y, no shared code with the library evaluation paths), so
// library results can be checked against a second route.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "maxcap/choice.hpp"
#include "maxcap/instance.hpp"
#include "maxcap/types.hpp"

namespace oracle {

using namespace maxcap;

inline double util_exp(const Instance& inst, std::size_t zone_idx, std::size_t col, double beta,
                       double alpha) {
  const double c = inst.distance(zone_idx, col);
  const bool competitor = inst.locations[col].role == LocationRole::Competitor;
  return std::exp(-(competitor ? beta * alpha : beta) * c);
}

/// Capture under plain MNL: sum_i q_i * (sum_{j in X} V_ij) / (sum_{X u Y} V).
inline double mnl_capture_direct(const Instance& inst, double beta, double alpha,
                                 const std::vector<LocationId>& selected) {
  double total = 0.0;
  for (std::size_t i = 0; i < inst.n_zones(); ++i) {
    double firm = 0.0, all = 0.0;
    for (std::size_t j = 0; j < inst.n_locations(); ++j) {
      const auto& loc = inst.locations[j];
      const bool in_x =
          std::find(selected.begin(), selected.end(), loc.id) != selected.end();
      if (loc.role == LocationRole::Candidate && !in_x) continue;
      const double v = util_exp(inst, i, j, beta, alpha);
      all += v;
      if (in_x) firm += v;
    }
    total += inst.zones[i].demand * (all > 0.0 ? firm / all : 0.0);
  }
  return total;
}

/// Per-alternative MNL probabilities for one zone, id order over X union Y.
inline std::vector<std::pair<LocationId, double>> mnl_probabilities_direct(
    const Instance& inst, double beta, double alpha, std::size_t zone_idx,
    const std::vector<LocationId>& selected) {
  std::vector<std::pair<LocationId, double>> out;
  double denom = 0.0;
  for (std::size_t j = 0; j < inst.n_locations(); ++j) {
    const auto& loc = inst.locations[j];
    const bool in_x = std::find(selected.begin(), selected.end(), loc.id) != selected.end();
    if (loc.role == LocationRole::Candidate && !in_x) continue;
    const double v = util_exp(inst, zone_idx, j, beta, alpha);
    denom += v;
    out.emplace_back(loc.id, v);
  }
  for (auto& [id, p] : out) p /= denom;
  return out;
}

/// Nested-logit capture evaluated directly: per zone,
///   sum_j e_j * W_{l(j)}^(1/mu - 1) over selected j, divided by
///   sum_l W_l^(1/mu), with W_l summing a_k e^(mu_l v_ik) over X u Y.
inline double nested_capture_direct(const Instance& inst, double beta, double alpha,
                                    const NestSpec& nests, const std::vector<double>& mu,
                                    const std::map<LocationId, double>& a,
                                    const std::vector<LocationId>& selected) {
  auto a_of = [&](LocationId id) {
    auto it = a.find(id);
    return it == a.end() ? 1.0 : it->second;
  };
  double total = 0.0;
  for (std::size_t i = 0; i < inst.n_zones(); ++i) {
    std::vector<double> w(nests.n_nests, 0.0), firm(nests.n_nests, 0.0);
    for (std::size_t j = 0; j < inst.n_locations(); ++j) {
      const auto& loc = inst.locations[j];
      const bool in_x = std::find(selected.begin(), selected.end(), loc.id) != selected.end();
      if (loc.role == LocationRole::Candidate && !in_x) continue;
      const int l = nests.assignment.at(loc.id);
      const double c = inst.distance(i, j);
      const double scale = loc.role == LocationRole::Competitor ? beta * alpha : beta;
      const double term = a_of(loc.id) * std::exp(-mu[l] * scale * c);
      w[l] += term;
      if (in_x) firm[l] += term;
    }
    double num = 0.0, den = 0.0;
    for (int l = 0; l < nests.n_nests; ++l) {
      if (w[l] <= 0.0) continue;
      den += std::pow(w[l], 1.0 / mu[l]);
      num += firm[l] * std::pow(w[l], 1.0 / mu[l] - 1.0);
    }
    total += inst.zones[i].demand * (den > 0.0 ? num / den : 0.0);
  }
  return total;
}

/// Nested-logit probabilities for one zone (Eq.-style direct evaluation).
inline std::vector<std::pair<LocationId, double>> nested_probabilities_direct(
    const Instance& inst, double beta, double alpha, const NestSpec& nests,
    const std::vector<double>& mu, const std::map<LocationId, double>& a, std::size_t zone_idx,
    const std::vector<LocationId>& selected) {
  auto a_of = [&](LocationId id) {
    auto it = a.find(id);
    return it == a.end() ? 1.0 : it->second;
  };
  std::vector<double> w(nests.n_nests, 0.0);
  std::vector<std::pair<LocationId, double>> terms;  // a_j e^(mu v) per alternative
  for (std::size_t j = 0; j < inst.n_locations(); ++j) {
    const auto& loc = inst.locations[j];
    const bool in_x = std::find(selected.begin(), selected.end(), loc.id) != selected.end();
    if (loc.role == LocationRole::Candidate && !in_x) continue;
    const int l = nests.assignment.at(loc.id);
    const double c = inst.distance(zone_idx, j);
    const double scale = loc.role == LocationRole::Competitor ? beta * alpha : beta;
    const double term = a_of(loc.id) * std::exp(-mu[l] * scale * c);
    w[l] += term;
    terms.emplace_back(loc.id, term);
  }
  double den = 0.0;
  for (int l = 0; l < nests.n_nests; ++l)
    if (w[l] > 0.0) den += std::pow(w[l], 1.0 / mu[l]);
  std::vector<std::pair<LocationId, double>> out;
  for (auto& [id, term] : terms) {
    const int l = nests.assignment.at(id);
    const double p =
        w[l] > 0.0 && den > 0.0 ? term * std::pow(w[l], 1.0 / mu[l] - 1.0) / den : 0.0;
    out.emplace_back(id, p);
  }
  return out;
}

/// MMNL capture by direct per-sample summation over the stored sample
/// tables (Monte-Carlo average of per-sample MNL captures). The sampled
/// exponentials are taken as given data.
inline double mmnl_capture_from_tables(const UtilityTable& util,
                                       const std::vector<LocationId>& selected) {
  double total = 0.0;
  for (std::size_t k = 0; k < util.samples(); ++k) {
    for (std::size_t i = 0; i < util.n_zones; ++i) {
      double firm = 0.0, all = 0.0;
      for (std::size_t j = 0; j < util.n_locations; ++j) {
        const LocationId id = util.location_ids[j];
        const bool in_x = std::find(selected.begin(), selected.end(), id) != selected.end();
        if (util.candidate_mask[j] && !in_x) continue;
        const double v = util.weight(k, i, j);
        all += v;
        if (in_x) firm += v;
      }
      total += util.demand[i] * (all > 0.0 ? firm / all : 0.0) / double(util.samples());
    }
  }
  return total;
}

/// Central finite differences of relaxed_capture, h = 1e-6.
inline std::vector<double> fd_gradient(const UtilityTable& util, const ChoiceModelSpec& spec,
                                       std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double saved = x[j];
    x[j] = saved + h;
    const double up = relaxed_capture(util, spec, x);
    x[j] = saved - h;
    const double dn = relaxed_capture(util, spec, x);
    x[j] = saved;
    g[j] = (up - dn) / (2.0 * h);
  }
  return g;
}

/// All r-subsets of `ids` (lexicographic).
inline void for_each_subset(const std::vector<LocationId>& ids, int r,
                            const std::function<void(const std::vector<LocationId>&)>& fn) {
  std::vector<LocationId> chosen;
  std::function<void(std::size_t)> rec = [&](std::size_t from) {
    if (static_cast<int>(chosen.size()) == r) {
      fn(chosen);
      return;
    }
    const std::size_t need = r - chosen.size();
    for (std::size_t i = from; i + need <= ids.size(); ++i) {
      chosen.push_back(ids[i]);
      rec(i + 1);
      chosen.pop_back();
    }
  };
  rec(0);
}

/// Small planar instance for randomized property tests.
inline Instance small_instance(int zones, int candidates, int competitors, std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.n_zones = zones;
  cfg.n_candidates = candidates;
  cfg.n_competitors = competitors;
  cfg.seed = seed;
  return generate_planar(cfg);
}

}  // namespace oracle
