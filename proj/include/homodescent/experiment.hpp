#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "homodescent/optimizer.hpp"
#include "homodescent/problems.hpp"

namespace homodescent {

/// Raised for bad user input (unknown keys, problems, modes, empty seed
/// lists). The CLI maps it to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One experiment: a problem, an oracle, a run configuration and seeds.
///
/// Settings are flat `key = value` pairs, e.g.
///   problem = pnorm
///   problem.dim = 20
///   problem.p = 4
///   noise.sigma_g = 1
///   run.eps = 1e-2
///   seeds = 1,2,3
/// See apply_setting for the full key list.
struct ExperimentSpec {
  std::string name = "experiment";
  std::string problem = "pl_quadratic";
  std::map<std::string, std::string> problem_params;  // key without the "problem." prefix
  std::string oracle = "additive";  // additive | finite_sum | exact
  double sigma_g = 0.0;
  double sigma_h = 0.0;
  std::uint64_t pool_size = 256;
  std::uint64_t oracle_seed = 0;  // 0: derived from the run seed
  double x0_scale = 1.0;          // multiplies the problem's default start
  std::optional<double> alpha;    // unset: the problem's alpha
  RunConfig run;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "out";
  bool emit_csv = true;
  bool emit_json = true;
  int jobs = 1;

  void validate() const;
};

/// Sets one key. Throws UsageError for unknown keys or unparsable values.
void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value);

/// Key/value pairs of a config file. Blank lines and '#' comments are
/// skipped; "sweep.<key> = a,b,c" lines are returned alongside.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

/// Applies every non-sweep pair and returns the sweep axes (key -> values).
std::vector<std::pair<std::string, std::vector<std::string>>> apply_config(
    ExperimentSpec& spec, const std::vector<std::pair<std::string, std::string>>& pairs);

/// Comma-separated seed list; throws UsageError on junk.
std::vector<std::uint64_t> parse_seed_list(const std::string& s);

/// Everything needed to run one seed.
struct ProblemBundle {
  std::shared_ptr<const Problem> problem;
  std::shared_ptr<StochasticOracle> oracle;
  Vector x0;
  std::uint64_t probes_per_sample = 1;  // MDP: state-action probes per trajectory
};

/// Names accepted as `problem`: pl_quadratic, pnorm, chain_mdp.
std::vector<std::string> registered_problems();
ProblemBundle make_problem_bundle(const ExperimentSpec& spec, std::uint64_t seed);

struct SeedResult {
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::kError;
  std::string message;
  double final_gap = 0.0;
  double final_f = 0.0;
  std::int64_t iterations = 0;
  std::uint64_t total_samples = 0;
  std::uint64_t total_probes = 0;
  std::uint64_t total_matvecs = 0;
  std::int64_t wall_ns = 0;
  bool gap_is_proxy = false;
  std::string trace_path;
};

struct ExperimentSummary {
  ExperimentSpec spec;
  std::vector<SeedResult> results;
  double mean_gap = 0.0;
  double median_gap = 0.0;
  std::uint64_t total_samples = 0;
  std::uint64_t total_matvecs = 0;
  std::string summary_path;

  bool all_completed() const;
  int exit_code() const { return all_completed() ? 0 : 1; }
};

/// Settings echo as key/value strings (the inverse of apply_setting).
std::map<std::string, std::string> describe(const ExperimentSpec& spec);

/// Summary as JSON text. Timing fields are kept under "timing" so the rest
/// is reproducible byte for byte.
std::string summary_json(const ExperimentSummary& s);

/// Runs one seed without touching the file system.
RunResult run_seed(const ExperimentSpec& spec, std::uint64_t seed,
                   const IterationObserver& observer = {});

/// Runs every seed on a pool of spec.jobs workers, writes
/// <out>/<name>_seed<s>.csv per seed and <out>/summary.json (atomically).
ExperimentSummary run_experiment(const ExperimentSpec& spec);

/// Cartesian product over the axes; each point runs in its own
/// subdirectory named after its settings.
std::vector<ExperimentSummary> run_sweep(
    const ExperimentSpec& base,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& axes);

}  // namespace homodescent
