#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "maxcap/bench.hpp"
#include "maxcap/choice.hpp"
#include "maxcap/instance.hpp"
#include "maxcap/rng.hpp"
#include "maxcap/solver.hpp"

namespace {

using namespace maxcap;

// exit codes: 0 ok, 1 usage, 2 data, 3 budget exhausted without a result
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kBudget = 3;

std::vector<LocationId> parse_id_list(const std::string& csv) {
  std::vector<LocationId> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  return out;
}

Instance load_instance(const std::string& path, const std::string& format,
                       const std::string& competitors_csv) {
  const bool orlib = format == "orlib" || (format == "auto" && path.size() > 4 &&
                                           path.substr(path.size() - 4) == ".cap");
  if (!orlib) return load_canonical_file(path);

  std::vector<LocationId> comp;
  if (!competitors_csv.empty()) {
    comp = parse_id_list(competitors_csv);
  } else {
    // sidecar file: one competitor id per line next to the cap file
    std::ifstream side(path + ".y");
    if (side) {
      LocationId id;
      while (side >> id) comp.push_back(id);
    }
  }
  if (comp.empty())
    throw ValidationError("cap files carry no competitor set; pass --competitors or a '" + path +
                          ".y' sidecar");
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open instance file: " + path);
  return parse_orlib(in, comp);
}

std::string full_precision(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_ids(const std::vector<LocationId>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(ids[i]);
  }
  return out;
}

int cmd_generate(int zones, int candidates, int competitors, std::uint64_t seed,
                 const std::string& out_path) {
  GeneratorConfig cfg;
  cfg.n_zones = zones;
  cfg.n_candidates = candidates;
  cfg.n_competitors = competitors;
  cfg.seed = seed;
  const Instance inst = generate_planar(cfg);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return kData;
  }
  out << save_canonical(inst);
  if (!out) {
    std::cerr << "error: short write to " << out_path << "\n";
    return kData;
  }
  std::cout << "generated " << zones << " zones, " << candidates << " candidates, " << competitors
            << " competitors (seed " << seed << ") -> " << out_path << "\n";
  return kOk;
}

struct SolveArgs {
  std::string instance_path;
  std::string model = "mnl";
  std::string method = "bitr-ls";
  int r = 2;
  double alpha = 1.0;
  double beta = 1.0;
  int k = 100;
  double delta = 0.2;
  double mu = 2.0;
  int nests = 5;
  std::uint64_t seed = 0;
  double budget = 600.0;
  std::string format = "auto";
  std::string competitors;
};

int cmd_solve(const SolveArgs& args) {
  const Instance inst = load_instance(args.instance_path, args.format, args.competitors);

  ChoiceModelSpec spec;
  if (args.model == "mnl") {
    spec = ChoiceModelSpec::mnl(args.beta, args.alpha);
  } else if (args.model == "mmnl") {
    spec = ChoiceModelSpec::mmnl(args.beta, args.alpha, args.k, args.delta,
                                 derive_seed(args.seed, {0x7ab1eULL}));
  } else {
    spec = ChoiceModelSpec::nested(args.beta, args.alpha, make_nests(inst, args.nests), args.mu);
  }

  if (args.budget <= 0.0) {
    std::cerr << "error: budget exhausted before any feasible result\n";
    return kBudget;
  }
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(args.budget));

  const UtilityTable util = build_utilities(inst, spec);
  const auto t0 = Clock::now();
  Solution sol;
  double objective = 0.0;
  long iterations = 0, evaluations = 0;
  bool completed = true;

  if (args.method == "exact") {
    auto res = exact_enumerate(util, spec, args.r, 1000000, deadline);
    sol = res.solution;
    objective = res.objective;
    evaluations = res.evaluations;
    completed = res.completed;
  } else if (args.method == "greedy") {
    sol = greedy(util, spec, args.r, deadline);
    objective = capture(util, spec, sol);
  } else if (args.method == "bitr") {
    auto res = bitr(util, spec, random_solution(util, args.r, args.seed), {}, deadline);
    sol = res.solution;
    objective = res.report.objective;
    iterations = res.report.iterations;
    evaluations = res.report.evaluations;
    completed = res.report.completed;
  } else if (args.method == "bitr-ms") {
    auto res = bitr_multistart(util, spec, args.r, 10, args.seed, {}, deadline);
    sol = res.solution;
    objective = res.report.objective;
    iterations = res.report.iterations;
    evaluations = res.report.evaluations;
    completed = res.report.completed;
  } else {  // bitr-ls
    auto res = bitr_ls(util, spec, args.r, args.seed, {}, deadline);
    sol = res.solution;
    objective = res.report.objective;
    iterations = res.report.iterations;
    evaluations = res.report.evaluations;
    completed = res.report.completed;
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();

  std::cout << "instance:  " << args.instance_path << " (" << inst.n_zones() << " zones, "
            << inst.candidate_ids().size() << " candidates, " << inst.competitor_ids().size()
            << " competitors)\n";
  std::cout << "model:     " << args.model << "  method: " << args.method << "  r=" << args.r
            << "  alpha=" << args.alpha << "  beta=" << args.beta << "\n";
  std::cout << "objective: " << objective << "\n";
  std::cout << "selected:  {" << join_ids(sol.selected) << "}\n";
  std::cout << "time:      " << seconds << " s" << (completed ? "" : "  (budget hit)") << "\n";
  std::cout << "RESULT method=" << args.method << " model=" << args.model << " r=" << args.r
            << " alpha=" << args.alpha << " beta=" << args.beta << " seed=" << args.seed
            << " objective=" << full_precision(objective) << " seconds=" << full_precision(seconds)
            << " iterations=" << iterations << " evaluations=" << evaluations
            << " completed=" << (completed ? 1 : 0) << " selected=" << join_ids(sol.selected)
            << "\n";
  return kOk;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir, int parallel) {
  const BenchConfig config = load_bench_config(config_path);
  std::filesystem::create_directories(out_dir);

  const GridResult result = run_grid(config, parallel);
  for (const auto& f : result.failures) std::cerr << "warning: " << f << "\n";
  if (result.records.empty()) {
    std::cerr << "error: the grid produced no records\n";
    return kData;
  }

  const auto records_path = out_dir + "/records.csv";
  const auto report_path = out_dir + "/report.md";
  {
    std::ofstream out(records_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write " << records_path << "\n";
      return kData;
    }
    out << emit_records_csv(result.records);
  }
  {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write " << report_path << "\n";
      return kData;
    }
    out << emit_report_markdown(best_counts(result.records, config.tolerance));
  }
  std::cout << result.records.size() << " records -> " << records_path << "\n";
  std::cout << "report -> " << report_path << "\n";
  return kOk;
}

int cmd_report(const std::string& records_path, const std::string& format, double tolerance) {
  std::ifstream in(records_path);
  if (!in) throw ParseError("cannot open records file: " + records_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto records = parse_records_csv(ss.str());
  const auto report = best_counts(records, tolerance);
  if (format == "csv")
    std::cout << emit_report_csv(report);
  else
    std::cout << emit_report_markdown(report);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maximum-capture facility location under MNL / mixed MNL / nested logit"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a random planar instance");
  int g_zones = 0, g_candidates = 0, g_competitors = 5;
  std::uint64_t g_seed = 0;
  std::string g_out;
  gen->add_option("--zones", g_zones, "zone count")->required()->check(CLI::PositiveNumber);
  gen->add_option("--candidates", g_candidates, "candidate location count")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--competitors", g_competitors, "competitor location count")
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", g_seed, "generator seed");
  gen->add_option("--out", g_out, "output path")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "solve one instance with one method");
  SolveArgs s;
  solve->add_option("--instance", s.instance_path, "instance file")->required();
  solve->add_option("--model", s.model, "choice model")
      ->check(CLI::IsMember({"mnl", "mmnl", "nested"}));
  solve->add_option("--method", s.method, "solver")
      ->check(CLI::IsMember({"exact", "greedy", "bitr", "bitr-ms", "bitr-ls"}));
  solve->add_option("--r", s.r, "facilities to open")->required()->check(CLI::PositiveNumber);
  solve->add_option("--alpha", s.alpha, "competitor attractiveness multiplier");
  solve->add_option("--beta", s.beta, "utility sensitivity");
  solve->add_option("--k", s.k, "MMNL sample count")->check(CLI::PositiveNumber);
  solve->add_option("--delta", s.delta, "MMNL distance perturbation halfwidth");
  solve->add_option("--mu", s.mu, "nested logit dissimilarity");
  solve->add_option("--nests", s.nests, "nested logit group count")->check(CLI::PositiveNumber);
  solve->add_option("--seed", s.seed, "random seed");
  solve->add_option("--budget", s.budget, "time budget in seconds");
  solve->add_option("--format", s.format, "instance format")
      ->check(CLI::IsMember({"auto", "canonical", "orlib"}));
  solve->add_option("--competitors", s.competitors, "competitor ids for cap files (comma list)");

  // bench
  auto* bench = app.add_subcommand("bench", "run a benchmark grid from a config file");
  std::string b_config, b_out_dir;
  int b_parallel = 1;
  bench->add_option("--config", b_config, "bench config file")->required();
  bench->add_option("--out-dir", b_out_dir, "output directory")->required();
  bench->add_option("--parallel", b_parallel, "worker threads")->check(CLI::PositiveNumber);

  // report
  auto* report = app.add_subcommand("report", "render a report from a records csv");
  std::string r_records, r_format = "markdown";
  double r_tolerance = 0.005;
  report->add_option("--records", r_records, "records csv")->required();
  report->add_option("--format", r_format, "output format")
      ->check(CLI::IsMember({"csv", "markdown"}));
  report->add_option("--tolerance", r_tolerance, "equivalence tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(g_zones, g_candidates, g_competitors, g_seed, g_out);
    if (solve->parsed()) return cmd_solve(s);
    if (bench->parsed()) return cmd_bench(b_config, b_out_dir, b_parallel);
    if (report->parsed()) return cmd_report(r_records, r_format, r_tolerance);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
