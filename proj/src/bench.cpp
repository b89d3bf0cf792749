#include "maxcap/bench.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "maxcap/rng.hpp"
#include "maxcap/solver.hpp"
#include "text_util.hpp"

namespace maxcap {

using detail::format_double;
using detail::parse_double;
using detail::parse_int;
using detail::parse_u64;

const char* to_string(Method method) {
  switch (method) {
    case Method::Exact: return "exact";
    case Method::Greedy: return "greedy";
    case Method::Bitr: return "bitr";
    case Method::BitrMultistart: return "bitr_multistart";
    case Method::BitrLs: return "bitr_ls";
  }
  return "?";
}

std::optional<Method> parse_method(const std::string& token) {
  if (token == "exact") return Method::Exact;
  if (token == "greedy") return Method::Greedy;
  if (token == "bitr") return Method::Bitr;
  if (token == "bitr_multistart" || token == "bitr-ms") return Method::BitrMultistart;
  if (token == "bitr_ls" || token == "bitr-ls") return Method::BitrLs;
  return std::nullopt;
}

namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

std::string two_decimals(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// canonical method column order for reports
int method_rank(const std::string& m) {
  if (m == "exact") return 0;
  if (m == "greedy") return 1;
  if (m == "bitr") return 2;
  if (m == "bitr_multistart") return 3;
  if (m == "bitr_ls") return 4;
  return 5;
}

}  // namespace

// ---------------------------------------------------------------------------
// config parsing

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<double> parse_double_list(const std::string& value, const std::string& where) {
  std::vector<double> out;
  for (const auto& tok : split(value, ','))
    if (!tok.empty()) out.push_back(parse_double(tok, where));
  if (out.empty()) throw ParseError(where + ": empty list");
  return out;
}

// "2..10" or "2,3,4"
std::vector<int> parse_int_list(const std::string& value, const std::string& where) {
  std::vector<int> out;
  const auto dots = value.find("..");
  if (dots != std::string::npos) {
    const int lo = static_cast<int>(parse_int(value.substr(0, dots), where));
    const int hi = static_cast<int>(parse_int(value.substr(dots + 2), where));
    if (hi < lo) throw ParseError(where + ": empty range");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  for (const auto& tok : split(value, ','))
    if (!tok.empty()) out.push_back(static_cast<int>(parse_int(tok, where)));
  if (out.empty()) throw ParseError(where + ": empty list");
  return out;
}

std::map<std::string, std::string> parse_kv_pairs(const std::string& rest,
                                                  const std::string& where) {
  std::map<std::string, std::string> out;
  std::istringstream in(rest);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected key=value, got '" + tok + "'");
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

}  // namespace

BenchConfig parse_bench_config(const std::string& text) {
  BenchConfig cfg;
  cfg.methods.clear();
  bool saw_methods = false;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string rest;
    std::getline(ls, rest);
    // trim
    const auto b = rest.find_first_not_of(" \t");
    rest = b == std::string::npos ? "" : rest.substr(b);
    const auto e = rest.find_last_not_of(" \t\r");
    if (e != std::string::npos) rest.resize(e + 1);
    const std::string where = "config line " + std::to_string(lineno);

    if (key == "instance") {
      std::istringstream rs(rest);
      std::string path;
      if (!(rs >> path)) throw ParseError(where + ": instance needs a path");
      std::string extra;
      std::getline(rs, extra);
      auto kv = parse_kv_pairs(extra, where);
      InstanceSource src;
      src.source = path;
      src.name = kv.count("name") ? kv["name"] : path;
      if (kv.count("competitors"))
        for (const auto& tok : split(kv["competitors"], ','))
          src.competitors.push_back(static_cast<LocationId>(parse_int(tok, where)));
      cfg.instances.push_back(std::move(src));
    } else if (key == "generate") {
      auto kv = parse_kv_pairs(rest, where);
      GeneratorConfig gen;
      if (!kv.count("zones") || !kv.count("candidates"))
        throw ParseError(where + ": generate needs zones= and candidates=");
      gen.n_zones = static_cast<int>(parse_int(kv["zones"], where));
      gen.n_candidates = static_cast<int>(parse_int(kv["candidates"], where));
      if (kv.count("competitors"))
        gen.n_competitors = static_cast<int>(parse_int(kv["competitors"], where));
      if (kv.count("seed")) gen.seed = parse_u64(kv["seed"], where);
      InstanceSource src;
      src.name = kv.count("name")
                     ? kv["name"]
                     : "gen_z" + std::to_string(gen.n_zones) + "_c" + std::to_string(gen.n_candidates) +
                           "_s" + std::to_string(gen.seed);
      src.source = gen;
      cfg.instances.push_back(std::move(src));
    } else if (key == "model") {
      if (rest == "mnl")
        cfg.model = ChoiceModel::MNL;
      else if (rest == "mmnl")
        cfg.model = ChoiceModel::MMNL;
      else if (rest == "nested")
        cfg.model = ChoiceModel::NestedLogit;
      else
        throw ParseError(where + ": unknown model '" + rest + "'");
    } else if (key == "methods") {
      saw_methods = true;
      for (const auto& tok : split(rest, ',')) {
        auto m = parse_method(tok);
        if (!m) throw ParseError(where + ": unknown method '" + tok + "'");
        cfg.methods.push_back(*m);
      }
    } else if (key == "r") {
      cfg.r_values = parse_int_list(rest, where);
    } else if (key == "alpha") {
      cfg.alphas = parse_double_list(rest, where);
    } else if (key == "beta") {
      cfg.betas = parse_double_list(rest, where);
    } else if (key == "budget") {
      cfg.budget_seconds = parse_double(rest, where);
    } else if (key == "tolerance") {
      cfg.tolerance = parse_double(rest, where);
    } else if (key == "samples") {
      cfg.mmnl_samples = static_cast<int>(parse_int(rest, where));
    } else if (key == "delta") {
      cfg.mmnl_delta = parse_double(rest, where);
    } else if (key == "nests") {
      cfg.nest_groups = static_cast<int>(parse_int(rest, where));
    } else if (key == "mu") {
      cfg.nest_mu = parse_double(rest, where);
    } else if (key == "a") {
      cfg.nest_a = parse_double(rest, where);
    } else if (key == "multistarts") {
      cfg.multistarts = static_cast<int>(parse_int(rest, where));
    } else if (key == "seed") {
      cfg.master_seed = parse_u64(rest, where);
    } else if (key == "exact_cap") {
      cfg.exact_cap = parse_u64(rest, where);
    } else {
      throw ParseError(where + ": unknown key '" + key + "'");
    }
  }

  if (!saw_methods) cfg.methods.push_back(Method::BitrLs);
  if (cfg.instances.empty()) throw ParseError("config declares no instances");
  if (cfg.methods.empty()) throw ParseError("config declares no methods");
  if (cfg.r_values.empty() || cfg.alphas.empty() || cfg.betas.empty())
    throw ParseError("config has an empty r/alpha/beta grid");
  if (!(cfg.tolerance > 0.0 && cfg.tolerance < 1.0))
    throw ParseError("tolerance must lie in (0,1)");
  if (!(cfg.budget_seconds > 0.0)) throw ParseError("budget must be positive");
  return cfg;
}

BenchConfig load_bench_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open bench config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_bench_config(ss.str());
}

// ---------------------------------------------------------------------------
// grid runner

namespace {

struct Timer {
  Clock::time_point t0 = Clock::now();
  double seconds() const {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }
};

Instance load_source(const InstanceSource& src) {
  if (std::holds_alternative<GeneratorConfig>(src.source))
    return generate_planar(std::get<GeneratorConfig>(src.source));
  const auto& path = std::get<std::string>(src.source);
  if (path.size() > 4 && path.substr(path.size() - 4) == ".cap") {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open instance file: " + path);
    return parse_orlib(in, src.competitors);
  }
  return load_canonical_file(path);
}

ChoiceModelSpec spec_for(const BenchConfig& cfg, const Instance& inst, double alpha, double beta,
                         std::uint64_t table_seed) {
  switch (cfg.model) {
    case ChoiceModel::MNL:
      return ChoiceModelSpec::mnl(beta, alpha);
    case ChoiceModel::MMNL:
      return ChoiceModelSpec::mmnl(beta, alpha, cfg.mmnl_samples, cfg.mmnl_delta, table_seed);
    case ChoiceModel::NestedLogit:
      return ChoiceModelSpec::nested(beta, alpha, make_nests(inst, cfg.nest_groups), cfg.nest_mu,
                                     cfg.nest_a);
  }
  throw ContractError("unreachable model");
}

struct Unit {
  std::size_t instance_idx;
  std::size_t alpha_idx;
  std::size_t beta_idx;
  std::vector<RunRecord> records;
  std::vector<std::string> failures;
};

}  // namespace

GridResult run_grid(const BenchConfig& config, int parallel) {
  if (parallel < 1) throw ContractError("parallel worker count must be >= 1");

  GridResult out;

  // load every instance once, keeping going past broken ones
  std::vector<std::optional<Instance>> instances(config.instances.size());
  for (std::size_t i = 0; i < config.instances.size(); ++i) {
    try {
      instances[i] = load_source(config.instances[i]);
    } catch (const std::exception& e) {
      out.failures.push_back("instance '" + config.instances[i].name + "': " + e.what());
    }
  }

  std::vector<Unit> units;
  for (std::size_t ii = 0; ii < instances.size(); ++ii) {
    if (!instances[ii]) continue;
    for (std::size_t ai = 0; ai < config.alphas.size(); ++ai)
      for (std::size_t bi = 0; bi < config.betas.size(); ++bi)
        units.push_back(Unit{ii, ai, bi, {}, {}});
  }

  auto run_unit = [&](Unit& unit) {
    const Instance& inst = *instances[unit.instance_idx];
    const std::string& name = config.instances[unit.instance_idx].name;
    const double alpha = config.alphas[unit.alpha_idx];
    const double beta = config.betas[unit.beta_idx];
    const std::uint64_t table_seed =
        derive_seed(config.master_seed, {0x7ab1eULL, fnv1a64(name), bits(alpha), bits(beta)});

    UtilityTable util;
    ChoiceModelSpec spec;
    try {
      spec = spec_for(config, inst, alpha, beta, table_seed);
      util = build_utilities(inst, spec);
    } catch (const std::exception& e) {
      unit.failures.push_back("instance '" + name + "' alpha=" + format_double(alpha) +
                              " beta=" + format_double(beta) + ": " + e.what());
      return;
    }

    for (int r : config.r_values) {
      for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        const Method method = config.methods[mi];
        const std::uint64_t run_seed = derive_seed(
            config.master_seed,
            {fnv1a64(name), static_cast<std::uint64_t>(r), bits(alpha), bits(beta),
             static_cast<std::uint64_t>(mi), fnv1a64(to_string(method))});
        RunRecord rec;
        rec.instance = name;
        rec.r = r;
        rec.alpha = alpha;
        rec.beta = beta;
        rec.method = to_string(method);
        rec.seed = run_seed;

        const auto deadline =
            Clock::now() + std::chrono::duration_cast<Clock::duration>(
                               std::chrono::duration<double>(config.budget_seconds));
        Timer timer;
        try {
          switch (method) {
            case Method::Exact: {
              auto res = exact_enumerate(util, spec, r, config.exact_cap, deadline);
              rec.objective = res.objective;
              rec.evaluations = res.evaluations;
              rec.completed = res.completed;
              break;
            }
            case Method::Greedy: {
              Solution sol = greedy(util, spec, r, deadline);
              rec.objective = capture(util, spec, sol);
              rec.evaluations = static_cast<long>(r) * static_cast<long>(util.n_candidates());
              rec.completed = true;
              break;
            }
            case Method::Bitr: {
              auto res = bitr(util, spec, random_solution(util, r, run_seed), {}, deadline);
              rec.objective = res.report.objective;
              rec.iterations = res.report.iterations;
              rec.evaluations = res.report.evaluations;
              rec.completed = res.report.completed;
              break;
            }
            case Method::BitrMultistart: {
              auto res = bitr_multistart(util, spec, r, config.multistarts, run_seed, {}, deadline);
              rec.objective = res.report.objective;
              rec.iterations = res.report.iterations;
              rec.evaluations = res.report.evaluations;
              rec.completed = res.report.completed;
              break;
            }
            case Method::BitrLs: {
              auto res = bitr_ls(util, spec, r, run_seed, {}, deadline);
              rec.objective = res.report.objective;
              rec.iterations = res.report.iterations;
              rec.evaluations = res.report.evaluations;
              rec.completed = res.report.completed;
              break;
            }
          }
          rec.seconds = timer.seconds();
          unit.records.push_back(std::move(rec));
        } catch (const std::exception& e) {
          unit.failures.push_back("instance '" + name + "' r=" + std::to_string(r) +
                                  " alpha=" + format_double(alpha) + " beta=" +
                                  format_double(beta) + " method=" + to_string(method) + ": " +
                                  e.what());
        }
      }
    }
  };

  if (parallel == 1 || units.size() <= 1) {
    for (auto& unit : units) run_unit(unit);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= units.size()) break;
        run_unit(units[i]);
      }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(parallel, static_cast<int>(units.size()));
    pool.reserve(n);
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // deterministic record order: instance (config order), r, alpha, beta,
  // method (config order) -- independent of scheduling
  struct Keyed {
    std::tuple<std::size_t, int, std::size_t, std::size_t, std::size_t> key;
    RunRecord rec;
  };
  std::vector<Keyed> keyed;
  for (auto& unit : units) {
    for (auto& rec : unit.records) {
      std::size_t mi = 0;
      for (; mi < config.methods.size(); ++mi)
        if (to_string(config.methods[mi]) == rec.method) break;
      keyed.push_back(
          Keyed{{unit.instance_idx, rec.r, unit.alpha_idx, unit.beta_idx, mi}, std::move(rec)});
    }
    for (auto& f : unit.failures) out.failures.push_back(std::move(f));
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const Keyed& a, const Keyed& b) { return a.key < b.key; });
  out.records.reserve(keyed.size());
  for (auto& k : keyed) out.records.push_back(std::move(k.rec));
  return out;
}

// ---------------------------------------------------------------------------
// aggregation

ComparisonReport best_counts(const std::vector<RunRecord>& records, double tolerance) {
  if (records.empty()) throw ContractError("best_counts: empty record set");
  if (!(tolerance > 0.0 && tolerance < 1.0))
    throw ContractError("best_counts: tolerance must lie in (0,1)");

  using ConfigKey = std::tuple<std::string, int, double, double>;  // instance, r, alpha, beta
  std::map<ConfigKey, std::vector<const RunRecord*>> groups;
  for (const auto& rec : records)
    groups[{rec.instance, rec.r, rec.alpha, rec.beta}].push_back(&rec);

  // canonical method order, then any unknown names alphabetically
  std::set<std::string> method_set;
  for (const auto& rec : records) method_set.insert(rec.method);
  std::vector<std::string> methods(method_set.begin(), method_set.end());
  std::sort(methods.begin(), methods.end(), [](const std::string& a, const std::string& b) {
    const int ra = method_rank(a), rb = method_rank(b);
    return ra != rb ? ra < rb : a < b;
  });

  struct Agg {
    int best = 0;
    double seconds = 0.0;
    int runs = 0;
  };
  std::map<std::string, std::map<std::string, Agg>> per_family;  // family -> method -> agg
  std::map<std::string, std::set<std::tuple<int, double, double>>> family_configs;

  for (const auto& [key, group] : groups) {
    const auto& family = std::get<0>(key);
    family_configs[family].insert({std::get<1>(key), std::get<2>(key), std::get<3>(key)});
    double best = 0.0;
    for (const auto* rec : group) best = std::max(best, rec->objective);
    std::set<std::string> counted;
    for (const auto* rec : group) {
      auto& agg = per_family[family][rec->method];
      agg.seconds += rec->seconds;
      agg.runs += 1;
      const bool is_best = best > 0.0 ? (best - rec->objective) / best < tolerance
                                      : rec->objective == best;
      if (is_best && counted.insert(rec->method).second) agg.best += 1;
    }
  }

  ComparisonReport report;
  report.methods = methods;
  for (const auto& [family, per_method] : per_family) {
    FamilyRow row;
    row.family = family;
    row.grid_size = static_cast<int>(family_configs[family].size());
    for (const auto& method : methods) {
      MethodAggregate agg;
      agg.method = method;
      auto it = per_method.find(method);
      if (it != per_method.end()) {
        agg.best_count = it->second.best;
        agg.runs = it->second.runs;
        agg.avg_seconds = it->second.runs ? it->second.seconds / it->second.runs : 0.0;
      }
      row.per_method.push_back(agg);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

constexpr const char* kCsvHeader = "instance,r,alpha,beta,method,objective,seconds,completed";

}  // namespace

std::string emit_records_csv(const std::vector<RunRecord>& records) {
  if (records.empty()) throw ContractError("emit_records_csv: empty record set");
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& rec : records) {
    out += rec.instance;
    out += ',';
    out += std::to_string(rec.r);
    out += ',';
    out += format_double(rec.alpha);
    out += ',';
    out += format_double(rec.beta);
    out += ',';
    out += rec.method;
    out += ',';
    out += format_double(rec.objective);
    out += ',';
    out += format_double(rec.seconds);
    out += ',';
    out += rec.completed ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::vector<RunRecord> parse_records_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("records csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader)
    throw ParseError("records csv: bad header, expected '" + std::string(kCsvHeader) + "'");
  std::vector<RunRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    const std::string where = "records csv line " + std::to_string(lineno);
    if (f.size() != 8) throw ParseError(where + ": expected 8 fields, got " + std::to_string(f.size()));
    RunRecord rec;
    rec.instance = f[0];
    rec.r = static_cast<int>(parse_int(f[1], where));
    rec.alpha = parse_double(f[2], where);
    rec.beta = parse_double(f[3], where);
    rec.method = f[4];
    rec.objective = parse_double(f[5], where);
    rec.seconds = parse_double(f[6], where);
    if (f[7] == "1")
      rec.completed = true;
    else if (f[7] == "0")
      rec.completed = false;
    else
      throw ParseError(where + ": completed must be 0 or 1");
    out.push_back(std::move(rec));
  }
  return out;
}

std::string emit_report_markdown(const ComparisonReport& report) {
  std::string out;
  out += "| instance | configs |";
  for (const auto& m : report.methods) out += " best: " + m + " |";
  for (const auto& m : report.methods) out += " avg s: " + m + " |";
  out += "\n|---|---:|";
  for (std::size_t i = 0; i < report.methods.size() * 2; ++i) out += "---:|";
  out += '\n';

  for (const auto& row : report.rows) {
    int max_best = 0;
    double min_avg = 0.0;
    bool first = true;
    for (const auto& agg : row.per_method) {
      if (agg.runs == 0) continue;
      max_best = std::max(max_best, agg.best_count);
      min_avg = first ? agg.avg_seconds : std::min(min_avg, agg.avg_seconds);
      first = false;
    }
    out += "| " + row.family + " | " + std::to_string(row.grid_size) + " |";
    for (const auto& agg : row.per_method) {
      if (agg.runs == 0) {
        out += " - |";
      } else if (agg.best_count == max_best) {
        out += " **" + std::to_string(agg.best_count) + "** |";
      } else {
        out += " " + std::to_string(agg.best_count) + " |";
      }
    }
    for (const auto& agg : row.per_method) {
      if (agg.runs == 0) {
        out += " - |";
      } else if (agg.avg_seconds == min_avg) {
        out += " **" + two_decimals(agg.avg_seconds) + "** |";
      } else {
        out += " " + two_decimals(agg.avg_seconds) + " |";
      }
    }
    out += '\n';
  }
  return out;
}

std::string emit_report_csv(const ComparisonReport& report) {
  std::string out = "instance,configs,method,best_count,avg_seconds,runs\n";
  for (const auto& row : report.rows) {
    for (const auto& agg : row.per_method) {
      out += row.family;
      out += ',';
      out += std::to_string(row.grid_size);
      out += ',';
      out += agg.method;
      out += ',';
      out += std::to_string(agg.best_count);
      out += ',';
      out += two_decimals(agg.avg_seconds);
      out += ',';
      out += std::to_string(agg.runs);
      out += '\n';
    }
  }
  return out;
}

}  // namespace maxcap
