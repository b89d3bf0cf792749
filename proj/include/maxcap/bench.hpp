#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "maxcap/choice.hpp"
#include "maxcap/instance.hpp"
#include "maxcap/types.hpp"

namespace maxcap {

enum class Method { Exact, Greedy, Bitr, BitrMultistart, BitrLs };

const char* to_string(Method method);
std::optional<Method> parse_method(const std::string& token);

/// One benchmark instance: either a file to load or a generator recipe.
struct InstanceSource {
  std::string name;
  std::variant<std::string, GeneratorConfig> source;  // path or recipe
  std::vector<LocationId> competitors;  // competitor ids for cap files
};

struct BenchConfig {
  std::vector<InstanceSource> instances;
  std::vector<Method> methods{Method::BitrLs};
  ChoiceModel model = ChoiceModel::MNL;
  std::vector<int> r_values{2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> alphas{0.01, 0.1, 1.0};
  std::vector<double> betas{1.0, 5.0, 10.0};
  double budget_seconds = 600.0;
  double tolerance = 0.005;  // relative-gap equivalence rule
  int mmnl_samples = 100;
  double mmnl_delta = 0.2;
  int nest_groups = 5;
  double nest_mu = 2.0;
  double nest_a = 1.0;
  int multistarts = 10;
  std::uint64_t master_seed = 0;
  std::uint64_t exact_cap = 1000000;
};

struct RunRecord {
  std::string instance;
  int r = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::string method;
  double objective = 0.0;
  double seconds = 0.0;
  long iterations = 0;
  long evaluations = 0;
  std::uint64_t seed = 0;
  bool completed = true;
};

struct MethodAggregate {
  std::string method;
  int best_count = 0;
  double avg_seconds = 0.0;
  int runs = 0;
};

struct FamilyRow {
  std::string family;  // instance name
  int grid_size = 0;   // configurations covered
  std::vector<MethodAggregate> per_method;
};

struct ComparisonReport {
  std::vector<std::string> methods;
  std::vector<FamilyRow> rows;
};

struct GridResult {
  std::vector<RunRecord> records;
  std::vector<std::string> failures;  // instance load problems, non-fatal
};

/// Runs every (instance, r, alpha, beta, method) combination of the config.
/// Per-run seeds derive from the master seed and the configuration key, so
/// results are identical no matter how many worker threads execute them.
GridResult run_grid(const BenchConfig& config, int parallel = 1);

/// Per (instance, method): how many configurations the method was best on
/// under the relative-gap tolerance, and its average wall time.
ComparisonReport best_counts(const std::vector<RunRecord>& records, double tolerance = 0.005);

/// Fixed columns: instance,r,alpha,beta,method,objective,seconds,completed.
std::string emit_records_csv(const std::vector<RunRecord>& records);
std::vector<RunRecord> parse_records_csv(const std::string& text);

/// GitHub-style table, families x methods, best cells bolded.
std::string emit_report_markdown(const ComparisonReport& report);
std::string emit_report_csv(const ComparisonReport& report);

/// Text config, one `key value` pair per line; see README for the schema.
BenchConfig parse_bench_config(const std::string& text);
BenchConfig load_bench_config(const std::string& path);

}  // namespace maxcap
