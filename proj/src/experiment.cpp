#include "homodescent/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "homodescent/chain_mdp.hpp"
#include "homodescent/rng.hpp"
#include "homodescent/trace_io.hpp"

namespace homodescent {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw UsageError("setting '" + key + "': expected a number, got '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    // Accept integral reals such as 1e6.
    const double d = to_double(key, v);
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    throw UsageError("setting '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError("setting '" + key + "': expected a boolean, got '" + v + "'");
}

std::string fmt(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

const std::map<std::string, std::set<std::string>>& problem_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"pl_quadratic", {"dim", "cond", "seed"}},
      {"pnorm", {"dim", "p", "radius"}},
      {"chain_mdp",
       {"states", "slip", "gamma", "horizon", "lure", "temperature", "baseline", "seed"}},
  };
  return keys;
}

std::string param(const ExperimentSpec& spec, const std::string& key, const std::string& dflt) {
  const auto it = spec.problem_params.find(key);
  return it == spec.problem_params.end() ? dflt : it->second;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

void ExperimentSpec::validate() const {
  if (seeds.empty()) throw UsageError("experiment '" + name + "': no seeds given");
  if (!problem_keys().count(problem)) throw UsageError("unknown problem '" + problem + "'");
  if (oracle != "additive" && oracle != "finite_sum" && oracle != "exact") {
    throw UsageError("unknown oracle '" + oracle + "'");
  }
  if (jobs < 1) throw UsageError("jobs must be >= 1");
  if (!(sigma_g >= 0.0) || !(sigma_h >= 0.0)) throw UsageError("noise levels must be >= 0");
  if (!(x0_scale > 0.0)) throw UsageError("x0_scale must be positive");
  for (const auto& [k, v] : problem_params) {
    if (!problem_keys().at(problem).count(k)) {
      throw UsageError("problem '" + problem + "' has no parameter '" + k + "'");
    }
  }
  try {
    RunConfig c = run;
    if (alpha) c.alpha = *alpha;
    if (c.mode != Mode::kVrShsodm) c.validate();
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
}

void apply_setting(ExperimentSpec& spec, const std::string& raw_key, const std::string& raw) {
  const std::string key = trim(raw_key);
  const std::string v = trim(raw);
  RunConfig& r = spec.run;
  PlannerConstants& c = r.constants;
  if (key.rfind("problem.", 0) == 0) {
    spec.problem_params[key.substr(8)] = v;
  } else if (key == "name") {
    spec.name = v;
  } else if (key == "problem") {
    spec.problem = v;
  } else if (key == "oracle") {
    spec.oracle = v;
  } else if (key == "noise.sigma_g") {
    spec.sigma_g = to_double(key, v);
  } else if (key == "noise.sigma_h") {
    spec.sigma_h = to_double(key, v);
  } else if (key == "noise.pool_size") {
    spec.pool_size = to_uint(key, v);
  } else if (key == "noise.seed") {
    spec.oracle_seed = to_uint(key, v);
  } else if (key == "x0_scale") {
    spec.x0_scale = to_double(key, v);
  } else if (key == "seeds") {
    spec.seeds = parse_seed_list(v);
  } else if (key == "out") {
    spec.out_dir = v;
  } else if (key == "emit") {
    spec.emit_csv = spec.emit_json = false;
    for (const auto& e : split(v, ',')) {
      if (e == "csv") {
        spec.emit_csv = true;
      } else if (e == "json") {
        spec.emit_json = true;
      } else if (!e.empty()) {
        throw UsageError("emit: unknown format '" + e + "'");
      }
    }
  } else if (key == "jobs") {
    spec.jobs = static_cast<int>(to_uint(key, v));
  } else if (key == "run.eps" || key == "eps") {
    r.target_eps = to_double(key, v);
  } else if (key == "run.alpha" || key == "alpha") {
    spec.alpha = to_double(key, v);
  } else if (key == "run.max_iters") {
    r.max_iters = static_cast<std::int64_t>(to_uint(key, v));
  } else if (key == "run.mode" || key == "mode") {
    try {
      r.mode = parse_mode(v);
    } catch (const ContractViolation& e) {
      throw UsageError(e.what());
    }
  } else if (key == "run.k_c") {
    r.k_c = static_cast<std::int64_t>(to_uint(key, v));
  } else if (key == "run.c_e") {
    if (v.empty() || v == "auto") {
      r.c_e.reset();
    } else {
      r.c_e = to_double(key, v);
    }
  } else if (key == "run.sample_budget") {
    r.sample_budget = to_uint(key, v);
  } else if (key == "run.early_exit") {
    r.early_exit = to_bool(key, v);
  } else if (key == "run.record_wall_time") {
    r.record_wall_time = to_bool(key, v);
  } else if (key == "run.branch") {
    if (v == "monotone") {
      r.branch = BranchRule::kMonotone;
    } else if (v == "as_printed") {
      r.branch = BranchRule::kAsPrinted;
    } else {
      throw UsageError("run.branch: expected monotone or as_printed");
    }
  } else if (key == "run.sgd_lr") {
    r.sgd_lr = to_double(key, v);
  } else if (key == "run.sgd_batch") {
    r.sgd_batch = to_uint(key, v);
  } else if (key == "const.c_g") {
    c.c_g = to_double(key, v);
  } else if (key == "const.c_h") {
    c.c_h = to_double(key, v);
  } else if (key == "const.c_eig") {
    c.c_eig = to_double(key, v);
  } else if (key == "const.c_ls") {
    c.c_ls = to_double(key, v);
  } else if (key == "const.c_iter") {
    c.c_iter = to_double(key, v);
  } else if (key == "const.c_vr") {
    c.c_vr = to_double(key, v);
  } else if (key == "const.c_kc") {
    c.c_kc = to_double(key, v);
  } else if (key == "const.n_floor") {
    c.n_floor = to_uint(key, v);
  } else {
    throw UsageError("unknown setting '" + key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::vector<std::pair<std::string, std::vector<std::string>>> apply_config(
    ExperimentSpec& spec, const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const auto& [k, v] : pairs) {
    if (k.rfind("sweep.", 0) == 0) {
      auto values = split(v, ',');
      values.erase(std::remove(values.begin(), values.end(), std::string()), values.end());
      if (values.empty()) throw UsageError("sweep axis '" + k + "' has no values");
      const std::string axis = k.substr(6);
      ExperimentSpec probe = spec;
      for (const auto& val : values) apply_setting(probe, axis, val);
      axes.emplace_back(axis, values);
    } else {
      apply_setting(spec, k, v);
    }
  }
  return axes;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split(s, ',')) {
    if (part.empty()) continue;
    const auto dash = part.find('-', 1);
    if (dash != std::string::npos) {
      const std::uint64_t a = to_uint("seeds", part.substr(0, dash));
      const std::uint64_t b = to_uint("seeds", part.substr(dash + 1));
      if (b < a) throw UsageError("seeds: empty range '" + part + "'");
      for (std::uint64_t i = a; i <= b; ++i) out.push_back(i);
    } else {
      out.push_back(to_uint("seeds", part));
    }
  }
  return out;
}

std::vector<std::string> registered_problems() {
  std::vector<std::string> out;
  for (const auto& [k, v] : problem_keys()) out.push_back(k);
  return out;
}

ProblemBundle make_problem_bundle(const ExperimentSpec& spec, std::uint64_t seed) {
  ProblemBundle b;
  const std::uint64_t oseed =
      spec.oracle_seed ? spec.oracle_seed : derive_seed(seed, 0, StreamKind::kOracle);
  auto num = [&](const std::string& k, const std::string& d) {
    return to_double("problem." + k, param(spec, k, d));
  };
  auto whole = [&](const std::string& k, const std::string& d) {
    return to_uint("problem." + k, param(spec, k, d));
  };

  if (spec.problem == "chain_mdp") {
    const ChainMdp mdp = make_chain_mdp(static_cast<int>(whole("states", "5")), num("slip", "0.1"),
                                        num("gamma", "0.9"), 50, num("lure", "0.2"));
    const int horizon = static_cast<int>(whole("horizon", "50"));
    const bool baseline = to_bool("problem.baseline", param(spec, "baseline", "false"));
    auto pol = make_chain_mdp_policy(mdp, horizon, num("temperature", "1"), baseline,
                                     whole("seed", "1"));
    // A fresh oracle per run seed keeps trajectory streams independent.
    b.problem = pol.objective;
    b.oracle = std::make_shared<ChainMdpOracle>(pol.objective, baseline, oseed);
    b.probes_per_sample = static_cast<std::uint64_t>(horizon);
  } else {
    std::shared_ptr<Problem> p;
    if (spec.problem == "pl_quadratic") {
      p = make_pl_quadratic(static_cast<Index>(whole("dim", "10")), num("cond", "100"),
                            whole("seed", "1"));
    } else if (spec.problem == "pnorm") {
      p = make_pnorm_power(static_cast<Index>(whole("dim", "10")), num("p", "4"),
                           num("radius", "1"));
    } else {
      throw UsageError("unknown problem '" + spec.problem + "'");
    }
    b.problem = p;
    if (spec.oracle == "exact") {
      b.oracle = make_exact_oracle(p);
    } else if (spec.oracle == "finite_sum") {
      b.oracle = std::make_shared<FiniteSumOracle>(p, spec.pool_size, spec.sigma_g, spec.sigma_h,
                                                   oseed);
    } else {
      b.oracle = make_additive_noise_oracle(p, spec.sigma_g, spec.sigma_h, oseed);
    }
  }
  b.x0 = spec.x0_scale * b.problem->default_start(derive_seed(seed, 0, StreamKind::kInit));
  return b;
}

bool ExperimentSummary::all_completed() const {
  return std::none_of(results.begin(), results.end(),
                      [](const SeedResult& r) { return r.status == RunStatus::kError; });
}

std::map<std::string, std::string> describe(const ExperimentSpec& s) {
  std::map<std::string, std::string> m;
  m["name"] = s.name;
  m["problem"] = s.problem;
  for (const auto& [k, v] : s.problem_params) m["problem." + k] = v;
  m["oracle"] = s.oracle;
  m["noise.sigma_g"] = fmt(s.sigma_g);
  m["noise.sigma_h"] = fmt(s.sigma_h);
  m["noise.pool_size"] = std::to_string(s.pool_size);
  m["noise.seed"] = std::to_string(s.oracle_seed);
  m["x0_scale"] = fmt(s.x0_scale);
  std::string seeds;
  for (auto x : s.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(x);
  m["seeds"] = seeds;
  m["jobs"] = std::to_string(s.jobs);
  const RunConfig& r = s.run;
  m["run.eps"] = fmt(r.target_eps);
  m["run.alpha"] = s.alpha ? fmt(*s.alpha) : "auto";
  m["run.max_iters"] = std::to_string(r.max_iters);
  m["run.mode"] = to_string(r.mode);
  m["run.k_c"] = std::to_string(r.k_c);
  m["run.c_e"] = r.c_e ? fmt(*r.c_e) : "auto";
  m["run.sample_budget"] = std::to_string(r.sample_budget);
  m["run.early_exit"] = r.early_exit ? "true" : "false";
  m["run.record_wall_time"] = r.record_wall_time ? "true" : "false";
  m["run.branch"] = r.branch == BranchRule::kMonotone ? "monotone" : "as_printed";
  m["run.sgd_lr"] = fmt(r.sgd_lr);
  m["run.sgd_batch"] = std::to_string(r.sgd_batch);
  const PlannerConstants& c = r.constants;
  m["const.c_g"] = fmt(c.c_g);
  m["const.c_h"] = fmt(c.c_h);
  m["const.c_eig"] = fmt(c.c_eig);
  m["const.c_ls"] = fmt(c.c_ls);
  m["const.c_iter"] = fmt(c.c_iter);
  m["const.c_vr"] = fmt(c.c_vr);
  m["const.c_kc"] = fmt(c.c_kc);
  m["const.n_floor"] = std::to_string(c.n_floor);
  return m;
}

std::string summary_json(const ExperimentSummary& s) {
  using nlohmann::ordered_json;
  ordered_json j;
  ordered_json spec(ordered_json::value_t::object);
  for (const auto& [k, v] : describe(s.spec)) spec[k] = v;
  j["spec"] = spec;
  ordered_json runs = ordered_json::array();
  ordered_json timing = ordered_json::array();
  for (const auto& r : s.results) {
    ordered_json e;
    e["seed"] = r.seed;
    e["status"] = to_string(r.status);
    e["message"] = r.message;
    e["final_gap"] = r.final_gap;
    e["final_f"] = r.final_f;
    e["gap_is_proxy"] = r.gap_is_proxy;
    e["iterations"] = r.iterations;
    e["total_samples"] = r.total_samples;
    e["total_probes"] = r.total_probes;
    e["total_matvecs"] = r.total_matvecs;
    e["trace"] = r.trace_path;
    runs.push_back(e);
    timing.push_back({{"seed", r.seed}, {"wall_ns", r.wall_ns}});
  }
  j["results"] = runs;
  j["aggregate"] = {{"mean_gap", s.mean_gap},
                    {"median_gap", s.median_gap},
                    {"total_samples", s.total_samples},
                    {"total_matvecs", s.total_matvecs},
                    {"all_completed", s.all_completed()}};
  j["timing"] = timing;
  return j.dump(2) + "\n";
}

namespace {

RunResult run_bundle(const ExperimentSpec& spec, const ProblemBundle& b, std::uint64_t seed,
                     const IterationObserver& observer) {
  RunConfig cfg = spec.run;
  cfg.seed = seed;
  cfg.alpha = spec.alpha ? *spec.alpha : b.problem->alpha();
  return run(b.x0, *b.oracle, cfg, observer);
}

}  // namespace

RunResult run_seed(const ExperimentSpec& spec, std::uint64_t seed,
                   const IterationObserver& observer) {
  return run_bundle(spec, make_problem_bundle(spec, seed), seed, observer);
}

ExperimentSummary run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.emit_csv || spec.emit_json) fs::create_directories(spec.out_dir);

  ExperimentSummary sum;
  sum.spec = spec;
  sum.results.resize(spec.seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::string contract_error;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= spec.seeds.size()) return;
      SeedResult& out = sum.results[i];
      out.seed = spec.seeds[i];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const ProblemBundle b = make_problem_bundle(spec, out.seed);
        const RunResult r = run_bundle(spec, b, out.seed, {});
        out.status = r.status;
        out.message = r.message;
        out.final_gap = r.trace.empty() ? std::nan("") : r.trace.back().f_gap;
        out.final_f = r.trace.empty() ? std::nan("") : r.trace.back().f_value;
        out.iterations = r.trace.empty() ? 0 : r.trace.back().k;
        out.total_samples = r.total_samples;
        out.total_probes = r.total_samples * b.probes_per_sample;
        out.total_matvecs = r.total_matvecs;
        out.gap_is_proxy = r.gap_is_proxy;
        if (spec.emit_csv) {
          out.trace_path = spec.name + "_seed" + std::to_string(out.seed) + ".csv";
          std::ostringstream os;
          write_trace_csv(os, r.trace);
          write_file_atomic((fs::path(spec.out_dir) / out.trace_path).string(), os.str());
        }
      } catch (const ContractViolation& e) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (contract_error.empty()) contract_error = e.what();
        out.status = RunStatus::kError;
        out.message = e.what();
      } catch (const std::exception& e) {
        out.status = RunStatus::kError;
        out.message = e.what();
      }
      out.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    }
  };
  const int n_workers =
      std::max(1, std::min<int>(spec.jobs, static_cast<int>(spec.seeds.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  // A contract violation is a configuration problem, not a run failure.
  if (!contract_error.empty()) throw UsageError(contract_error);

  std::vector<double> gaps;
  double total = 0.0;
  for (const auto& r : sum.results) {
    sum.total_samples += r.total_samples;
    sum.total_matvecs += r.total_matvecs;
    if (r.status != RunStatus::kError) {
      gaps.push_back(r.final_gap);
      total += r.final_gap;
    }
  }
  sum.mean_gap = gaps.empty() ? std::nan("") : total / static_cast<double>(gaps.size());
  sum.median_gap = median(gaps);
  if (spec.emit_json) {
    sum.summary_path = (fs::path(spec.out_dir) / "summary.json").string();
    write_file_atomic(sum.summary_path, summary_json(sum));
  }
  return sum;
}

std::vector<ExperimentSummary> run_sweep(
    const ExperimentSpec& base,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& axes) {
  std::vector<ExperimentSummary> out;
  std::vector<std::size_t> idx(axes.size(), 0);
  for (;;) {
    ExperimentSpec spec = base;
    std::string dir;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto& [key, values] = axes[a];
      apply_setting(spec, key, values[idx[a]]);
      if (!dir.empty()) dir += "_";
      dir += key + "=" + values[idx[a]];
    }
    std::replace(dir.begin(), dir.end(), '/', '-');
    spec.out_dir = (fs::path(base.out_dir) / (dir.empty() ? "point" : dir)).string();
    out.push_back(run_experiment(spec));

    std::size_t a = 0;
    for (; a < axes.size(); ++a) {
      if (++idx[a] < axes[a].second.size()) break;
      idx[a] = 0;
    }
    if (a == axes.size()) break;
  }
  return out;
}

}  // namespace homodescent
