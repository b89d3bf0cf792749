#include <doctest.h>

#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "maxcap/bench.hpp"
#include "maxcap/choice.hpp"
#include "maxcap/instance.hpp"
#include "maxcap/rng.hpp"
#include "maxcap/solver.hpp"

using namespace maxcap;
namespace fs = std::filesystem;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run(const std::string& args, bool merge_stderr = true) {
  const std::string cmd =
      std::string(MAXCAP_CLI_PATH) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CommandResult res;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) res.output.append(buf.data(), n);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double result_field(const std::string& output, const std::string& key) {
  const auto line_pos = output.find("RESULT ");
  REQUIRE(line_pos != std::string::npos);
  const auto pos = output.find(key + "=", line_pos);
  REQUIRE(pos != std::string::npos);
  return std::stod(output.substr(pos + key.size() + 1));
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("maxcap_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("cli generate: writes a valid instance, deterministically") {
  TempDir tmp;
  const auto out = (tmp.path / "a.inst").string();
  const auto res = run("generate --zones 50 --candidates 25 --seed 1 --out " + out);
  CHECK(res.exit_code == 0);
  const Instance inst = load_canonical_file(out);
  CHECK(validate(inst).empty());
  CHECK(inst.n_zones() == 50);
  CHECK(inst.candidate_ids().size() == 25);

  const auto out2 = (tmp.path / "b.inst").string();
  run("generate --zones 50 --candidates 25 --seed 1 --out " + out2);
  CHECK(read_file(out) == read_file(out2));
}

TEST_CASE("cli generate: zero zones is a usage error") {
  const auto res = run("generate --zones 0 --candidates 5 --out /tmp/x.inst");
  CHECK(res.exit_code == 1);
}

TEST_CASE("cli generate: unwritable path is a data error") {
  const auto res = run("generate --zones 3 --candidates 3 --out /does/not/exist/a.inst");
  CHECK(res.exit_code == 2);
}

TEST_CASE("cli: unknown flags are rejected") {
  CHECK(run("generate --zones 3 --candidates 3 --out /tmp/a.inst --frobnicate").exit_code == 1);
  CHECK(run("frobnicate").exit_code == 1);
}

TEST_CASE("cli solve: exact matches the in-process result") {
  TempDir tmp;
  const auto path = (tmp.path / "t.inst").string();
  REQUIRE(run("generate --zones 10 --candidates 8 --competitors 3 --seed 4 --out " + path)
              .exit_code == 0);
  const auto res = run("solve --instance " + path +
                       " --model mnl --method exact --r 3 --alpha 0.5 --beta 2 --seed 1");
  CHECK(res.exit_code == 0);

  const Instance inst = load_canonical_file(path);
  const auto spec = ChoiceModelSpec::mnl(2.0, 0.5);
  const auto expected = exact_enumerate(build_utilities(inst, spec), spec, 3);
  CHECK(result_field(res.output, "objective") ==
        doctest::Approx(expected.objective).epsilon(1e-12));
}

TEST_CASE("cli solve: nested with mu=1 equals mnl") {
  TempDir tmp;
  const auto path = (tmp.path / "t.inst").string();
  REQUIRE(run("generate --zones 8 --candidates 7 --seed 9 --out " + path).exit_code == 0);
  const auto nested = run("solve --instance " + path +
                          " --model nested --mu 1 --method exact --r 2 --alpha 0.1 --beta 5");
  const auto mnl =
      run("solve --instance " + path + " --model mnl --method exact --r 2 --alpha 0.1 --beta 5");
  REQUIRE(nested.exit_code == 0);
  REQUIRE(mnl.exit_code == 0);
  CHECK(std::abs(result_field(nested.output, "objective") - result_field(mnl.output, "objective")) <=
        1e-9);
}

TEST_CASE("cli solve: mmnl uses the derived table seed") {
  TempDir tmp;
  const auto path = (tmp.path / "t.inst").string();
  REQUIRE(run("generate --zones 6 --candidates 6 --seed 3 --out " + path).exit_code == 0);
  const auto res = run("solve --instance " + path +
                       " --model mmnl --method exact --r 2 --k 5 --delta 0.3 --seed 11");
  REQUIRE(res.exit_code == 0);
  const Instance inst = load_canonical_file(path);
  const auto spec = ChoiceModelSpec::mmnl(1.0, 1.0, 5, 0.3, derive_seed(11, {0x7ab1eULL}));
  const auto expected = exact_enumerate(build_utilities(inst, spec), spec, 2);
  CHECK(result_field(res.output, "objective") ==
        doctest::Approx(expected.objective).epsilon(1e-12));
}

TEST_CASE("cli solve: infeasible r is a usage error") {
  TempDir tmp;
  const auto path = (tmp.path / "t.inst").string();
  REQUIRE(run("generate --zones 5 --candidates 25 --seed 2 --out " + path).exit_code == 0);
  CHECK(run("solve --instance " + path + " --method greedy --r 100").exit_code == 1);
}

TEST_CASE("cli solve: missing instance is a data error") {
  CHECK(run("solve --instance /nope.inst --method greedy --r 2").exit_code == 2);
}

TEST_CASE("cli solve: zero budget exits with the budget code") {
  TempDir tmp;
  const auto path = (tmp.path / "t.inst").string();
  REQUIRE(run("generate --zones 5 --candidates 6 --seed 2 --out " + path).exit_code == 0);
  CHECK(run("solve --instance " + path + " --method bitr-ls --r 2 --budget 0").exit_code == 3);
}

TEST_CASE("cli solve: orlib instances need a competitor set") {
  TempDir tmp;
  const auto path = (tmp.path / "t.cap").string();
  std::ofstream(path) << " 3 2\n 0 1\n 0 1\n 0 1\n 10\n 1.0 2.0 3.0\n 20\n 2.0 1.0 4.0\n";
  CHECK(run("solve --instance " + path + " --method greedy --r 1").exit_code == 2);
  const auto ok =
      run("solve --instance " + path + " --method greedy --r 1 --competitors 3");
  CHECK(ok.exit_code == 0);
  // sidecar variant
  std::ofstream(path + ".y") << "3\n";
  CHECK(run("solve --instance " + path + " --method greedy --r 1").exit_code == 0);
}

TEST_CASE("cli bench: default grid writes 81 records and a report") {
  TempDir tmp;
  const auto cfg = (tmp.path / "bench.cfg").string();
  std::ofstream(cfg) << "generate name=toy zones=6 candidates=10 seed=3\nmodel mnl\nseed 7\n";
  const auto out_dir = (tmp.path / "out").string();
  const auto res = run("bench --config " + cfg + " --out-dir " + out_dir);
  CHECK(res.exit_code == 0);
  const auto records = parse_records_csv(read_file(out_dir + "/records.csv"));
  CHECK(records.size() == 81);
  for (const auto& rec : records) CHECK(rec.method == "bitr_ls");
  CHECK(read_file(out_dir + "/report.md").find("| toy |") != std::string::npos);
}

TEST_CASE("cli bench: records identical across --parallel (seconds aside)") {
  TempDir tmp;
  const auto cfg = (tmp.path / "bench.cfg").string();
  std::ofstream(cfg) << "generate name=toy zones=6 candidates=8 seed=3\n"
                        "model mnl\nmethods greedy,bitr_ls\nr 2,3\nalpha 0.1,1\nbeta 1,5\nseed 5\n";
  const auto res1 = run("bench --config " + cfg + " --out-dir " + (tmp.path / "o1").string() +
                        " --parallel 1");
  const auto res2 = run("bench --config " + cfg + " --out-dir " + (tmp.path / "o2").string() +
                        " --parallel 8");
  REQUIRE(res1.exit_code == 0);
  REQUIRE(res2.exit_code == 0);
  const auto a = parse_records_csv(read_file((tmp.path / "o1" / "records.csv").string()));
  const auto b = parse_records_csv(read_file((tmp.path / "o2" / "records.csv").string()));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].instance == b[i].instance);
    CHECK(a[i].r == b[i].r);
    CHECK(a[i].alpha == b[i].alpha);
    CHECK(a[i].beta == b[i].beta);
    CHECK(a[i].method == b[i].method);
    CHECK(a[i].objective == b[i].objective);  // bitwise
    CHECK(a[i].completed == b[i].completed);
  }
}

TEST_CASE("cli bench: malformed config is a data error") {
  TempDir tmp;
  const auto cfg = (tmp.path / "bench.cfg").string();
  std::ofstream(cfg) << "model quantum\n";
  CHECK(run("bench --config " + cfg + " --out-dir " + (tmp.path / "out").string()).exit_code == 2);
}

TEST_CASE("cli report: renders the golden fixture byte for byte") {
  const std::string fixture = std::string(MAXCAP_TEST_DATA) + "/records_fixture.csv";
  const auto md = run("report --records " + fixture + " --format markdown", false);
  CHECK(md.exit_code == 0);
  CHECK(md.output == read_file(std::string(MAXCAP_TEST_DATA) + "/report_fixture.md"));
  const auto csv = run("report --records " + fixture + " --format csv", false);
  CHECK(csv.output == read_file(std::string(MAXCAP_TEST_DATA) + "/report_fixture.csv"));
}

TEST_CASE("cli report: missing records file is a data error") {
  CHECK(run("report --records /nope.csv").exit_code == 2);
}
