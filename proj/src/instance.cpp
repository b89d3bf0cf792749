#include "maxcap/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "maxcap/rng.hpp"
#include "text_util.hpp"

namespace maxcap {

using detail::format_double;
using detail::parse_double;
using detail::parse_int;
using detail::parse_u64;

std::vector<LocationId> Instance::candidate_ids() const {
  std::vector<LocationId> out;
  for (const auto& loc : locations)
    if (loc.role == LocationRole::Candidate) out.push_back(loc.id);
  return out;
}

std::vector<LocationId> Instance::competitor_ids() const {
  std::vector<LocationId> out;
  for (const auto& loc : locations)
    if (loc.role == LocationRole::Competitor) out.push_back(loc.id);
  return out;
}

int Instance::column_of(LocationId id) const {
  auto it = std::lower_bound(locations.begin(), locations.end(), id,
                             [](const Location& l, LocationId v) { return l.id < v; });
  if (it == locations.end() || it->id != id) return -1;
  return static_cast<int>(it - locations.begin());
}

int Instance::row_of(ZoneId id) const {
  auto it = std::lower_bound(zones.begin(), zones.end(), id,
                             [](const Zone& z, ZoneId v) { return z.id < v; });
  if (it == zones.end() || it->id != id) return -1;
  return static_cast<int>(it - zones.begin());
}

// ---------------------------------------------------------------------------
// generation

Instance generate_planar(const GeneratorConfig& config) {
  if (config.n_zones < 1 || config.n_candidates < 1 || config.n_competitors < 1)
    throw ContractError("generator counts must all be >= 1");
  if (!(config.square_side > 0.0))
    throw ContractError("generator square side must be positive");

  Rng rng(config.seed);
  const double side = config.square_side;
  Instance inst;
  inst.meta.seed = config.seed;
  inst.meta.generator = "planar";

  // draw order is fixed: zone points, candidate points, competitor points,
  // then demands
  std::vector<Point> zpts(config.n_zones), lpts;
  for (auto& p : zpts) {
    p.x = rng.uniform(0.0, side);
    p.y = rng.uniform(0.0, side);
  }
  lpts.resize(config.n_candidates + config.n_competitors);
  for (auto& p : lpts) {
    p.x = rng.uniform(0.0, side);
    p.y = rng.uniform(0.0, side);
  }

  inst.zones.resize(config.n_zones);
  for (int i = 0; i < config.n_zones; ++i) {
    inst.zones[i].id = i + 1;
    inst.zones[i].demand = rng.uniform_int(1, 100);
  }

  const int total = config.n_candidates + config.n_competitors;
  inst.locations.resize(total);
  for (int j = 0; j < total; ++j) {
    inst.locations[j].id = j + 1;
    inst.locations[j].role =
        j < config.n_candidates ? LocationRole::Candidate : LocationRole::Competitor;
  }

  inst.distances.resize(static_cast<std::size_t>(config.n_zones) * total);
  for (int i = 0; i < config.n_zones; ++i)
    for (int j = 0; j < total; ++j)
      inst.distances[static_cast<std::size_t>(i) * total + j] =
          std::hypot(zpts[i].x - lpts[j].x, zpts[i].y - lpts[j].y);

  inst.zone_coords = std::move(zpts);
  inst.location_coords = std::move(lpts);
  return inst;
}

// ---------------------------------------------------------------------------
// ORlib cap-style parsing

namespace {

// whitespace tokenizer that remembers the current line for error messages
class TokenReader {
public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next(const std::string& what) {
    std::string tok;
    while (true) {
      int c = in_.get();
      if (c == EOF) {
        if (tok.empty())
          throw ParseError("line " + std::to_string(line_) + ": unexpected end of file while reading " + what);
        return tok;
      }
      if (c == '\n') {
        if (!tok.empty()) {
          in_.unget();
          return tok;
        }
        ++line_;
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
  }

  double next_double(const std::string& what) {
    return parse_double(next(what), "line " + std::to_string(line_) + " (" + what + ")");
  }

  long long next_int(const std::string& what) {
    return parse_int(next(what), "line " + std::to_string(line_) + " (" + what + ")");
  }

  int line() const { return line_; }

private:
  std::istream& in_;
  int line_ = 1;
};

}  // namespace

Instance parse_orlib(std::istream& input, const std::vector<LocationId>& competitors) {
  TokenReader tok(input);
  const long long m = tok.next_int("location count");
  const long long n = tok.next_int("zone count");
  if (m < 1 || n < 1)
    throw ParseError("line " + std::to_string(tok.line()) + ": header counts must be positive");

  // per-location capacity and fixed cost, present in cap files but unused here
  for (long long j = 0; j < m; ++j) {
    tok.next_double("capacity of location " + std::to_string(j + 1));
    tok.next_double("fixed cost of location " + std::to_string(j + 1));
  }

  Instance inst;
  inst.meta.generator = "orlib";
  inst.meta.seed = 0;

  std::set<LocationId> comp(competitors.begin(), competitors.end());
  for (LocationId id : comp)
    if (id < 1 || id > m)
      throw ValidationError("competitor id " + std::to_string(id) + " outside 1.." + std::to_string(m));

  inst.locations.resize(m);
  for (long long j = 0; j < m; ++j) {
    inst.locations[j].id = static_cast<LocationId>(j + 1);
    inst.locations[j].role =
        comp.count(static_cast<LocationId>(j + 1)) ? LocationRole::Competitor : LocationRole::Candidate;
  }

  inst.zones.resize(n);
  inst.distances.resize(static_cast<std::size_t>(n) * m);
  for (long long i = 0; i < n; ++i) {
    inst.zones[i].id = static_cast<ZoneId>(i + 1);
    inst.zones[i].demand = tok.next_double("demand of zone " + std::to_string(i + 1));
    for (long long j = 0; j < m; ++j)
      inst.distances[static_cast<std::size_t>(i) * m + j] =
          tok.next_double("cost row of zone " + std::to_string(i + 1));
  }

  require_valid(inst);
  return inst;
}

Instance parse_orlib(const std::string& text, const std::vector<LocationId>& competitors) {
  std::istringstream in(text);
  return parse_orlib(in, competitors);
}

// ---------------------------------------------------------------------------
// canonical format

namespace {

constexpr const char* kMagic = "maxcap instance v1";

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

}  // namespace

std::string save_canonical(const Instance& inst) {
  std::string out;
  out.reserve(64 + inst.distances.size() * 12);
  out += kMagic;
  out += '\n';

  out += "[zones]\n";
  for (std::size_t i = 0; i < inst.zones.size(); ++i) {
    out += std::to_string(inst.zones[i].id);
    out += ' ';
    out += format_double(inst.zones[i].demand);
    if (inst.zone_coords) {
      out += ' ';
      out += format_double((*inst.zone_coords)[i].x);
      out += ' ';
      out += format_double((*inst.zone_coords)[i].y);
    }
    out += '\n';
  }

  out += "[locations]\n";
  for (std::size_t j = 0; j < inst.locations.size(); ++j) {
    out += std::to_string(inst.locations[j].id);
    out += ' ';
    out += inst.locations[j].role == LocationRole::Candidate ? "candidate" : "competitor";
    if (inst.location_coords) {
      out += ' ';
      out += format_double((*inst.location_coords)[j].x);
      out += ' ';
      out += format_double((*inst.location_coords)[j].y);
    }
    out += '\n';
  }

  out += "[distances]\n";
  const std::size_t m = inst.locations.size();
  for (std::size_t i = 0; i < inst.zones.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (j) out += ' ';
      out += format_double(inst.distances[i * m + j]);
    }
    out += '\n';
  }

  out += "[meta]\n";
  out += "seed ";
  out += std::to_string(inst.meta.seed);
  out += '\n';
  out += "generator ";
  out += inst.meta.generator;
  out += '\n';
  return out;
}

Instance load_canonical(std::istream& input) {
  std::string line;
  int lineno = 0;
  auto where = [&]() { return "line " + std::to_string(lineno); };
  auto next_line = [&](std::string& out) {
    if (!std::getline(input, out)) return false;
    ++lineno;
    return true;
  };

  if (!next_line(line) || line != kMagic)
    throw ParseError("line 1: missing '" + std::string(kMagic) + "' header");

  // sections must appear exactly in this order
  const char* expected[] = {"[zones]", "[locations]", "[distances]", "[meta]"};
  int section = -1;
  Instance inst;
  bool zones_have_coords = false, locs_have_coords = false;
  std::vector<std::vector<double>> rows;
  bool saw_seed = false, saw_generator = false;

  while (next_line(line)) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      ++section;
      if (section > 3 || line != expected[section])
        throw ParseError(where() + ": unexpected section '" + line + "'");
      continue;
    }
    if (section < 0)
      throw ParseError(where() + ": content before [zones] section");

    auto fields = split_ws(line);
    switch (section) {
      case 0: {  // zones: id demand [x y]
        if (fields.size() != 2 && fields.size() != 4)
          throw ParseError(where() + ": zones: expected 'id demand' or 'id demand x y'");
        Zone z;
        z.id = static_cast<ZoneId>(parse_int(fields[0], where() + ": zones.id"));
        z.demand = parse_double(fields[1], where() + ": zones.demand");
        if (fields.size() == 4) {
          if (!inst.zones.empty() && !zones_have_coords)
            throw ParseError(where() + ": zones: inconsistent coordinate columns");
          zones_have_coords = true;
          if (!inst.zone_coords) inst.zone_coords.emplace();
          inst.zone_coords->push_back({parse_double(fields[2], where() + ": zones.x"),
                                       parse_double(fields[3], where() + ": zones.y")});
        } else if (zones_have_coords) {
          throw ParseError(where() + ": zones: inconsistent coordinate columns");
        }
        inst.zones.push_back(z);
        break;
      }
      case 1: {  // locations: id role [x y]
        if (fields.size() != 2 && fields.size() != 4)
          throw ParseError(where() + ": locations: expected 'id role' or 'id role x y'");
        Location loc;
        loc.id = static_cast<LocationId>(parse_int(fields[0], where() + ": locations.id"));
        if (fields[1] == "candidate")
          loc.role = LocationRole::Candidate;
        else if (fields[1] == "competitor")
          loc.role = LocationRole::Competitor;
        else
          throw ParseError(where() + ": locations.role: unknown role '" + fields[1] + "'");
        if (fields.size() == 4) {
          if (!inst.locations.empty() && !locs_have_coords)
            throw ParseError(where() + ": locations: inconsistent coordinate columns");
          locs_have_coords = true;
          if (!inst.location_coords) inst.location_coords.emplace();
          inst.location_coords->push_back({parse_double(fields[2], where() + ": locations.x"),
                                           parse_double(fields[3], where() + ": locations.y")});
        } else if (locs_have_coords) {
          throw ParseError(where() + ": locations: inconsistent coordinate columns");
        }
        inst.locations.push_back(loc);
        break;
      }
      case 2: {  // distances: one row per zone
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_double(f, where() + ": distances"));
        rows.push_back(std::move(row));
        break;
      }
      case 3: {  // meta: seed N / generator NAME
        if (fields.size() != 2)
          throw ParseError(where() + ": meta: expected 'key value'");
        if (fields[0] == "seed") {
          inst.meta.seed = parse_u64(fields[1], where() + ": meta.seed");
          saw_seed = true;
        } else if (fields[0] == "generator") {
          inst.meta.generator = fields[1];
          saw_generator = true;
        } else {
          throw ParseError(where() + ": meta: unknown key '" + fields[0] + "'");
        }
        break;
      }
    }
  }

  if (section < 3)
    throw ParseError("missing section '" + std::string(expected[section + 1]) + "'");
  if (!saw_seed || !saw_generator)
    throw ParseError("[meta]: needs both 'seed' and 'generator'");
  if (rows.size() != inst.zones.size())
    throw ParseError("[distances]: " + std::to_string(rows.size()) + " rows for " +
                     std::to_string(inst.zones.size()) + " zones");
  const std::size_t m = inst.locations.size();
  inst.distances.reserve(rows.size() * m);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m)
      throw ParseError("[distances]: row " + std::to_string(i + 1) + " has " +
                       std::to_string(rows[i].size()) + " entries for " + std::to_string(m) +
                       " locations");
    inst.distances.insert(inst.distances.end(), rows[i].begin(), rows[i].end());
  }

  require_valid(inst);
  return inst;
}

Instance load_canonical(const std::string& text) {
  std::istringstream in(text);
  return load_canonical(in);
}

Instance load_canonical_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open instance file: " + path);
  return load_canonical(in);
}

// ---------------------------------------------------------------------------
// nests

NestSpec make_nests(const Instance& inst, int n_groups) {
  const int n = static_cast<int>(inst.locations.size());
  if (n_groups < 1 || n_groups > n)
    throw ContractError("nest group count " + std::to_string(n_groups) + " out of range 1.." +
                        std::to_string(n));
  NestSpec spec;
  spec.n_nests = n_groups;
  // contiguous groups in id order; the first (n mod g) groups take the
  // extra element
  const int base = n / n_groups;
  const int extra = n % n_groups;
  int idx = 0;
  for (int g = 0; g < n_groups; ++g) {
    const int size = base + (g < extra ? 1 : 0);
    for (int k = 0; k < size; ++k) spec.assignment[inst.locations[idx++].id] = g;
  }
  return spec;
}

// ---------------------------------------------------------------------------
// validation

std::vector<std::string> validate(const Instance& inst) {
  std::vector<std::string> bad;
  if (inst.zones.empty()) bad.push_back("instance has no zones");
  if (inst.locations.empty()) bad.push_back("instance has no locations");

  for (std::size_t i = 0; i + 1 < inst.zones.size(); ++i)
    if (inst.zones[i].id >= inst.zones[i + 1].id) {
      bad.push_back("zone ids are not strictly increasing");
      break;
    }
  for (std::size_t j = 0; j + 1 < inst.locations.size(); ++j) {
    if (inst.locations[j].id == inst.locations[j + 1].id) {
      bad.push_back("location id " + std::to_string(inst.locations[j].id) +
                    " appears more than once (candidate/competitor overlap)");
      break;
    }
    if (inst.locations[j].id > inst.locations[j + 1].id) {
      bad.push_back("location ids are not sorted ascending");
      break;
    }
  }

  for (const auto& z : inst.zones)
    if (!(z.demand > 0.0) || !std::isfinite(z.demand))
      bad.push_back("zone " + std::to_string(z.id) + ": demand must be positive and finite");

  std::size_t n_comp = 0;
  for (const auto& loc : inst.locations)
    if (loc.role == LocationRole::Competitor) ++n_comp;
  if (n_comp == 0) bad.push_back("instance has no competitor locations");

  const std::size_t expect = inst.zones.size() * inst.locations.size();
  if (inst.distances.size() != expect) {
    bad.push_back("distance matrix has " + std::to_string(inst.distances.size()) +
                  " entries, expected " + std::to_string(expect));
  } else {
    const std::size_t m = inst.locations.size();
    for (std::size_t i = 0; i < inst.zones.size(); ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double d = inst.distances[i * m + j];
        if (!(d >= 0.0) || !std::isfinite(d))
          bad.push_back("distance(zone " + std::to_string(inst.zones[i].id) + ", location " +
                        std::to_string(inst.locations[j].id) + ") must be finite and >= 0");
      }
  }

  if (inst.zone_coords && inst.zone_coords->size() != inst.zones.size())
    bad.push_back("zone coordinate count does not match zone count");
  if (inst.location_coords && inst.location_coords->size() != inst.locations.size())
    bad.push_back("location coordinate count does not match location count");

  return bad;
}

void require_valid(const Instance& inst) {
  auto bad = validate(inst);
  if (bad.empty()) return;
  std::string msg = "invalid instance:";
  for (const auto& b : bad) {
    msg += "\n  - ";
    msg += b;
  }
  throw ValidationError(msg);
}

}  // namespace maxcap
