// Command-line front end: run, sweep, fit, check.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "homodescent/check_suite.hpp"
#include "homodescent/experiment.hpp"
#include "homodescent/rate_fit.hpp"
#include "homodescent/trace_io.hpp"

using namespace homodescent;

namespace {

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kUsage = 2;

struct CommonFlags {
  std::string config;
  std::string out;
  std::string seeds;
  CLI::Option* seeds_opt = nullptr;
  std::string mode;
  std::string eps;
  std::string alpha;
  std::string problem;
  int jobs = 0;
  bool quick = false;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "key = value config file");
  app->add_option("--out", f.out, "output directory");
  f.seeds_opt = app->add_option("--seeds", f.seeds, "seed list, e.g. 1,2,3 or 1-10");
  app->add_option("--mode", f.mode, "shsodm | vr_shsodm | deterministic | sgd");
  app->add_option("--eps", f.eps, "target accuracy");
  app->add_option("--alpha", f.alpha, "gradient dominance exponent (default: problem's)");
  app->add_option("--problem", f.problem, "pl_quadratic | pnorm | chain_mdp");
  app->add_option("--jobs", f.jobs, "worker threads");
  app->add_flag("--quick", f.quick, "small smoke-test budget");
  app->add_option("--set", f.sets, "extra key=value setting (repeatable)");
}

// Precedence: defaults < config file < flags.
std::vector<std::pair<std::string, std::vector<std::string>>> build_spec(const CommonFlags& f,
                                                                          ExperimentSpec& spec) {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  if (!f.config.empty()) axes = apply_config(spec, read_config_file(f.config));
  if (spec.seeds.empty()) {
    // Ten consecutive seeds from HOMODESCENT_SEED (default 0).
    const char* env = std::getenv("HOMODESCENT_SEED");
    const std::uint64_t base = parse_seed_list(env && *env ? env : "0").front();
    for (std::uint64_t i = 0; i < 10; ++i) spec.seeds.push_back(base + i);
  }
  if (!f.problem.empty()) apply_setting(spec, "problem", f.problem);
  if (!f.mode.empty()) apply_setting(spec, "mode", f.mode);
  if (!f.eps.empty()) apply_setting(spec, "eps", f.eps);
  if (!f.alpha.empty()) apply_setting(spec, "alpha", f.alpha);
  if (f.seeds_opt && f.seeds_opt->count() > 0) apply_setting(spec, "seeds", f.seeds);
  if (!f.out.empty()) apply_setting(spec, "out", f.out);
  if (f.jobs > 0) spec.jobs = f.jobs;
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    if (key.rfind("sweep.", 0) == 0) {
      auto more = apply_config(spec, {{key, kv.substr(eq + 1)}});
      axes.insert(axes.end(), more.begin(), more.end());
    } else {
      apply_setting(spec, key, kv.substr(eq + 1));
    }
  }
  if (f.quick) {
    if (spec.seeds.size() > 3) spec.seeds.resize(3);
    if (spec.run.max_iters == 0 || spec.run.max_iters > 20) spec.run.max_iters = 20;
  }
  return axes;
}

void print_summary(const ExperimentSummary& s) {
  std::cout << s.spec.name << " [" << s.spec.problem << ", " << to_string(s.spec.run.mode)
            << "] in " << s.spec.out_dir << "\n";
  for (const auto& r : s.results) {
    std::cout << "  seed " << r.seed << ": " << to_string(r.status) << "  gap "
              << r.final_gap << (r.gap_is_proxy ? " (proxy)" : "") << "  iters " << r.iterations
              << "  samples " << r.total_samples << "  matvecs " << r.total_matvecs;
    if (!r.message.empty()) std::cout << "  (" << r.message << ")";
    std::cout << "\n";
  }
  std::cout << "  mean gap " << s.mean_gap << ", median gap " << s.median_gap << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homodescent: stochastic homogeneous second-order descent"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment over its seeds");
  add_common(run_cmd, run_flags);

  CommonFlags sweep_flags;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "cartesian product over sweep.<key> = a,b,c axes");
  add_common(sweep_cmd, sweep_flags);

  std::string fit_trace;
  std::string fit_column = "f_gap";
  long fit_lo = 1;
  long fit_hi = -1;
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a convergence regime to a trace CSV");
  fit_cmd->add_option("trace", fit_trace, "trace CSV")->required();
  fit_cmd->add_option("--column", fit_column, "f_gap | grad_norm | f_value | d_norm");
  fit_cmd->add_option("--k-lo", fit_lo, "first k");
  fit_cmd->add_option("--k-hi", fit_hi, "last k (default: last row)");

  bool check_quick = false;
  std::string check_fault = "none";
  std::string check_out;
  CLI::App* check_cmd = app.add_subcommand("check", "run the invariant groups");
  check_cmd->add_flag("--quick", check_quick, "quick level");
  check_cmd->add_option("--fault", check_fault, "none | as_printed (mutation fixture)")
      ->check(CLI::IsMember({"none", "as_printed"}));
  check_cmd->add_option("--out", check_out, "write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd || *sweep_cmd) {
      const bool sweeping = static_cast<bool>(*sweep_cmd);
      ExperimentSpec spec;
      auto axes = build_spec(sweeping ? sweep_flags : run_flags, spec);
      std::vector<ExperimentSummary> all;
      if (sweeping) {
        all = run_sweep(spec, axes);
      } else {
        if (!axes.empty()) throw UsageError("sweep axes given to 'run'; use 'sweep'");
        all.push_back(run_experiment(spec));
      }
      int code = kOk;
      for (const auto& s : all) {
        print_summary(s);
        if (s.exit_code() != 0) code = kRunFailure;
      }
      return code;
    }
    if (*fit_cmd) {
      const auto trace = read_trace_csv(fit_trace);
      if (trace.empty()) throw UsageError("empty trace");
      const long hi = fit_hi < 0 ? static_cast<long>(trace.back().k) : fit_hi;
      const RateFit f = fit_convergence_order(trace, fit_column, fit_lo, hi);
      nlohmann::ordered_json j;
      j["regime"] = to_string(f.regime_label);
      j["exponent"] = f.exponent;
      j["intercept"] = f.intercept;
      j["r_squared"] = f.r_squared;
      j["k_range"] = {f.k_range.first, f.k_range.second};
      j["warnings"] = f.warnings;
      std::cout << j.dump(2) << "\n";
      return kOk;
    }
    if (*check_cmd) {
      CheckOptions opts;
      opts.level = check_quick ? CheckLevel::kQuick : CheckLevel::kFull;
      opts.branch = check_fault == "as_printed" ? BranchRule::kAsPrinted : BranchRule::kMonotone;
      const CheckReport rep = check_suite(opts);
      for (const auto& g : rep.groups) {
        std::cout << (g.passed ? "PASS " : "FAIL ") << g.name << "  (" << g.detail << ", "
                  << g.seconds << " s)\n";
      }
      if (!check_out.empty()) write_file_atomic(check_out, rep.to_json());
      return rep.all_passed() ? kOk : kRunFailure;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ContractViolation& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailure;
  }
  return kUsage;
}
