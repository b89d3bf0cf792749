#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maxcap/types.hpp"

namespace maxcap {

enum class LocationRole { Candidate, Competitor };

struct Zone {
  ZoneId id = 0;
  double demand = 0.0;  // q_i > 0

  bool operator==(const Zone&) const = default;
};

struct Location {
  LocationId id = 0;
  LocationRole role = LocationRole::Candidate;

  bool operator==(const Location&) const = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

struct InstanceMeta {
  std::uint64_t seed = 0;
  std::string generator = "unknown";

  bool operator==(const InstanceMeta&) const = default;
};

/// A maximum-capture problem instance: demand zones, candidate locations
/// the firm may open, competitor locations already open, and the dense
/// zone x location distance matrix.
///
/// Zones and locations are kept sorted by id. The distance matrix is
/// row-major, one row per zone, one column per location in id order.
struct Instance {
  std::vector<Zone> zones;
  std::vector<Location> locations;
  std::vector<double> distances;  // zones.size() * locations.size()

  // planar provenance, present for generated instances
  std::optional<std::vector<Point>> zone_coords;
  std::optional<std::vector<Point>> location_coords;

  InstanceMeta meta;

  std::size_t n_zones() const { return zones.size(); }
  std::size_t n_locations() const { return locations.size(); }

  double distance(std::size_t zone_idx, std::size_t loc_idx) const {
    return distances[zone_idx * locations.size() + loc_idx];
  }

  std::vector<LocationId> candidate_ids() const;
  std::vector<LocationId> competitor_ids() const;

  /// Column index of a location id, or -1 if absent.
  int column_of(LocationId id) const;
  /// Row index of a zone id, or -1 if absent.
  int row_of(ZoneId id) const;

  bool operator==(const Instance&) const = default;
};

struct GeneratorConfig {
  int n_zones = 50;
  int n_candidates = 25;
  int n_competitors = 5;
  double square_side = 1.0;
  std::uint64_t seed = 0;
};

/// Disjoint partition of all locations into nests, by location id.
struct NestSpec {
  int n_nests = 0;
  std::map<LocationId, int> assignment;  // location id -> nest in [0, n_nests)

  bool operator==(const NestSpec&) const = default;
};

/// Zones, candidates and competitors placed i.i.d. uniform in a square,
/// Euclidean distances, integer demands in [1,100]. Deterministic per seed.
Instance generate_planar(const GeneratorConfig& config);

/// Reads a cap-style file: header "m n", then per location two ignored
/// reals, then per zone its demand followed by m costs (free line breaks).
/// Cap files do not mark competitors, so the competitor id set is supplied
/// by the caller (CLI flag or sidecar file).
Instance parse_orlib(std::istream& input, const std::vector<LocationId>& competitors);
Instance parse_orlib(const std::string& text, const std::vector<LocationId>& competitors);

/// Canonical text format, see README. load(save(x)) == x exactly.
std::string save_canonical(const Instance& instance);
Instance load_canonical(std::istream& input);
Instance load_canonical(const std::string& text);
Instance load_canonical_file(const std::string& path);

/// Splits all locations, ordered by id, into n_groups contiguous nests
/// whose sizes differ by at most one (larger groups first).
NestSpec make_nests(const Instance& instance, int n_groups = 5);

/// Every invariant violation found, empty if the instance is well formed.
std::vector<std::string> validate(const Instance& instance);

/// Throws ValidationError listing all violations if validate() is nonempty.
void require_valid(const Instance& instance);

}  // namespace maxcap
