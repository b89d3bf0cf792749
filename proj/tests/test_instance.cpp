#include <doctest.h>

#include <cmath>
#include <set>

#include "maxcap/instance.hpp"
#include "maxcap/types.hpp"

using namespace maxcap;

namespace {

GeneratorConfig config(int zones, int candidates, int competitors, std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.n_zones = zones;
  cfg.n_candidates = candidates;
  cfg.n_competitors = competitors;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("generate_planar: deterministic per seed, byte for byte") {
  const Instance a = generate_planar(config(50, 25, 5, 42));
  const Instance b = generate_planar(config(50, 25, 5, 42));
  CHECK(a == b);
  CHECK(save_canonical(a) == save_canonical(b));
  const Instance c = generate_planar(config(50, 25, 5, 43));
  CHECK(save_canonical(a) != save_canonical(c));
}

TEST_CASE("generate_planar: shapes and unit-square geometry") {
  const Instance inst = generate_planar(config(50, 25, 5, 1));
  CHECK(inst.n_zones() == 50);
  CHECK(inst.n_locations() == 30);
  CHECK(inst.distances.size() == 50u * 30u);
  CHECK(inst.candidate_ids().size() == 25);
  CHECK(inst.competitor_ids().size() == 5);
  const double limit = std::sqrt(2.0);
  for (double d : inst.distances) {
    CHECK(d >= 0.0);
    CHECK(d <= limit);
  }
  for (const auto& z : inst.zones) {
    CHECK(z.demand >= 1.0);
    CHECK(z.demand <= 100.0);
    CHECK(z.demand == std::floor(z.demand));
  }
}

TEST_CASE("generate_planar: valid for many seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance inst = generate_planar(config(10, 8, 3, seed));
    CHECK(validate(inst).empty());
  }
}

TEST_CASE("validate: reports violations with their location") {
  Instance inst = generate_planar(config(4, 3, 2, 9));

  SUBCASE("negative distance names the cell") {
    inst.distances[1 * 5 + 2] = -0.25;
    const auto bad = validate(inst);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0].find("zone 2") != std::string::npos);
    CHECK(bad[0].find("location 3") != std::string::npos);
  }
  SUBCASE("zero demand") {
    inst.zones[2].demand = 0.0;
    const auto bad = validate(inst);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0].find("zone 3") != std::string::npos);
  }
  SUBCASE("duplicate location id reads as candidate/competitor overlap") {
    inst.locations[1].id = inst.locations[0].id;
    const auto bad = validate(inst);
    CHECK(!bad.empty());
    CHECK(bad[0].find("overlap") != std::string::npos);
  }
  SUBCASE("no competitors") {
    for (auto& loc : inst.locations) loc.role = LocationRole::Candidate;
    const auto bad = validate(inst);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0].find("competitor") != std::string::npos);
  }
}

TEST_CASE("canonical round-trip is the identity") {
  const Instance inst = generate_planar(config(12, 6, 4, 77));
  const std::string bytes = save_canonical(inst);
  const Instance back = load_canonical(bytes);
  CHECK(back == inst);
  CHECK(save_canonical(back) == bytes);
}

TEST_CASE("canonical round-trip without provenance coordinates") {
  // orlib-parsed instances carry no planar coordinates
  const std::string text = " 2 2\n 0 1\n 0 1\n 10 1.5 2.5\n 20 3.5 4.5\n";
  const Instance inst = parse_orlib(text, {2});
  REQUIRE(!inst.zone_coords.has_value());
  const std::string bytes = save_canonical(inst);
  CHECK(bytes.find("candidate\n") != std::string::npos);  // two-field location lines
  const Instance back = load_canonical(bytes);
  CHECK(back == inst);
}

TEST_CASE("canonical round-trip at NYC scale (82341 zones, 59 locations)") {
  const Instance inst = generate_planar(config(82341, 54, 5, 314));
  REQUIRE(inst.n_locations() == 59);
  const std::string bytes = save_canonical(inst);
  const Instance back = load_canonical(bytes);
  CHECK(back == inst);
}

TEST_CASE("canonical parser rejects broken documents") {
  const Instance inst = generate_planar(config(3, 2, 1, 5));
  const std::string good = save_canonical(inst);

  SUBCASE("missing magic") {
    CHECK_THROWS_AS(load_canonical(std::string("nope\n") + good), ParseError);
  }
  SUBCASE("unknown section rejected") {
    std::string bad = good;
    bad += "[extras]\n1 2\n";
    CHECK_THROWS_AS(load_canonical(bad), ParseError);
  }
  SUBCASE("missing competitors fails validation") {
    std::string bad = good;
    const auto pos = bad.find("competitor");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 10, "candidate ");
    CHECK_THROWS_AS(load_canonical(bad), ValidationError);
  }
  SUBCASE("missing meta section") {
    std::string bad = good.substr(0, good.find("[meta]"));
    CHECK_THROWS_AS(load_canonical(bad), ParseError);
  }
  SUBCASE("distance row length mismatch") {
    std::string bad = good;
    const auto pos = bad.find("[distances]\n");
    REQUIRE(pos != std::string::npos);
    const auto eol = bad.find('\n', pos + 12);
    const auto sp = bad.rfind(' ', eol);
    bad.erase(sp, eol - sp);  // drop the last entry of row 1
    CHECK_THROWS_AS(load_canonical(bad), ParseError);
  }
}

TEST_CASE("orlib: minimal synthetic file parses to the given costs") {
  // 2 locations, 1 zone; capacity/fixed-cost columns ignored
  const std::string text =
      " 2 1\n"
      " 0 100.5\n"
      " 0 200.0\n"
      " 50\n"
      " 3.5 4.5\n";
  const Instance inst = parse_orlib(text, {2});
  CHECK(inst.n_zones() == 1);
  CHECK(inst.n_locations() == 2);
  CHECK(inst.zones[0].demand == 50.0);
  CHECK(inst.distance(0, 0) == 3.5);
  CHECK(inst.distance(0, 1) == 4.5);
  CHECK(inst.candidate_ids() == std::vector<LocationId>{1});
  CHECK(inst.competitor_ids() == std::vector<LocationId>{2});
  CHECK(inst.meta.generator == "orlib");
}

TEST_CASE("orlib: free line breaks inside cost rows") {
  const std::string text = "2 2\n0 1\n0 1\n10 1.0\n2.0\n20\n3.0 4.0\n";
  const Instance inst = parse_orlib(text, {1});
  CHECK(inst.distance(0, 0) == 1.0);
  CHECK(inst.distance(0, 1) == 2.0);
  CHECK(inst.distance(1, 0) == 3.0);
  CHECK(inst.distance(1, 1) == 4.0);
}

TEST_CASE("orlib: truncated file errors with the position") {
  const std::string text =
      " 2 1\n"
      " 0 100.5\n"
      " 0 200.0\n"
      " 50\n"
      " 3.5\n";  // second cost missing
  try {
    parse_orlib(text, {2});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("zone 1") != std::string::npos);
  }
}

TEST_CASE("orlib: nonnumeric token errors with line number") {
  const std::string text = " 2 1\n 0 bogus\n 0 200.0\n 50\n 3.5 4.5\n";
  try {
    parse_orlib(text, {2});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("orlib: zero demand is a validation error") {
  const std::string text = " 2 1\n 0 1\n 0 1\n 0\n 3.5 4.5\n";
  CHECK_THROWS_AS(parse_orlib(text, {2}), ValidationError);
}

TEST_CASE("orlib: unknown competitor id rejected") {
  const std::string text = " 2 1\n 0 1\n 0 1\n 5\n 3.5 4.5\n";
  CHECK_THROWS_AS(parse_orlib(text, {7}), ValidationError);
}

TEST_CASE("make_nests: contiguous near-equal groups in id order") {
  SUBCASE("10 locations, 5 groups -> pairs") {
    const Instance inst = generate_planar(config(3, 7, 3, 2));
    const NestSpec nests = make_nests(inst, 5);
    CHECK(nests.n_nests == 5);
    for (LocationId id = 1; id <= 10; ++id) CHECK(nests.assignment.at(id) == (id - 1) / 2);
  }
  SUBCASE("59 locations, 5 groups -> sizes 12,12,12,12,11") {
    const Instance inst = generate_planar(config(3, 54, 5, 2));
    const NestSpec nests = make_nests(inst, 5);
    std::vector<int> sizes(5, 0);
    for (const auto& [id, nest] : nests.assignment) sizes[nest]++;
    CHECK(sizes == std::vector<int>{12, 12, 12, 12, 11});
    // contiguity: nest index is nondecreasing in id
    int prev = 0;
    for (LocationId id = 1; id <= 59; ++id) {
      CHECK(nests.assignment.at(id) >= prev);
      prev = nests.assignment.at(id);
    }
  }
  SUBCASE("one group per location -> singletons") {
    const Instance inst = generate_planar(config(3, 4, 2, 2));
    const NestSpec nests = make_nests(inst, 6);
    std::set<int> used;
    for (const auto& [id, nest] : nests.assignment) CHECK(used.insert(nest).second);
  }
  SUBCASE("out of range") {
    const Instance inst = generate_planar(config(3, 4, 2, 2));
    CHECK_THROWS_AS(make_nests(inst, 0), ContractError);
    CHECK_THROWS_AS(make_nests(inst, 7), ContractError);
  }
}

TEST_CASE("make_nests: partition property for many shapes") {
  for (int n_loc : {5, 9, 13, 30}) {
    const Instance inst = generate_planar(config(2, n_loc - 2, 2, 3));
    for (int g = 1; g <= n_loc; g += 3) {
      const NestSpec nests = make_nests(inst, g);
      REQUIRE(static_cast<int>(nests.assignment.size()) == n_loc);
      std::vector<int> sizes(g, 0);
      for (const auto& [id, nest] : nests.assignment) {
        REQUIRE(nest >= 0);
        REQUIRE(nest < g);
        sizes[nest]++;
      }
      const auto [mn, mx] = std::minmax_element(sizes.begin(), sizes.end());
      CHECK(*mx - *mn <= 1);
    }
  }
}
