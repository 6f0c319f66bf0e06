#include "homodescent/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "homodescent/lanczos.hpp"
#include "homodescent/problems.hpp"
#include "homodescent/rng.hpp"

namespace homodescent {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kShsodm:
      return "shsodm";
    case Mode::kVrShsodm:
      return "vr_shsodm";
    case Mode::kDeterministic:
      return "deterministic";
    case Mode::kSgd:
      return "sgd";
  }
  return "unknown";
}

Mode parse_mode(const std::string& s) {
  if (s == "shsodm") return Mode::kShsodm;
  if (s == "vr_shsodm" || s == "vr") return Mode::kVrShsodm;
  if (s == "deterministic") return Mode::kDeterministic;
  if (s == "sgd") return Mode::kSgd;
  throw ContractViolation("unknown mode '" + s + "'");
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kReachedEps:
      return "reached_eps";
    case RunStatus::kBudgetExhausted:
      return "budget_exhausted";
    case RunStatus::kError:
      return "error";
  }
  return "unknown";
}

void RunConfig::validate() const {
  require(target_eps > 0.0 && std::isfinite(target_eps), "RunConfig: target_eps must be > 0");
  if (!(alpha >= 1.0 && alpha <= 2.0)) throw ContractViolation("RunConfig: alpha must lie in [1, 2]");
  require(max_iters >= 0, "RunConfig: max_iters must be >= 0");
  require(k_c >= 0, "RunConfig: K_C must be >= 0");
  constants.validate();
  if (c_e) require(*c_e > 0.0 && std::isfinite(*c_e), "RunConfig: C_e override must be positive");
  if (mode == Mode::kVrShsodm) vr_exponent(alpha);
  if (mode == Mode::kSgd) {
    require(sgd_lr >= 0.0 && std::isfinite(sgd_lr), "RunConfig: sgd_lr must be >= 0");
    require(sgd_batch >= 1, "RunConfig: sgd_batch must be >= 1");
    require(max_iters >= 1, "RunConfig: sgd needs max_iters");
  }
}

double resolve_c_e(const StochasticOracle& oracle, const RunConfig& cfg) {
  if (cfg.c_e) return *cfg.c_e;
  const auto p = oracle.problem();
  if (!p || !std::isfinite(p->lip_h())) {
    throw ContractViolation(
        "C_e needs a finite Hessian Lipschitz constant; set the c_e override for this problem");
  }
  return (p->lip_h() + 4.0) / 3.0;
}

LinesearchResult solve_direction(const LinearMap& h, const Vector& g, double eps_eig,
                                 double eps_ls, double c_e, BranchRule branch,
                                 std::uint64_t seed) {
  const SpectralBounds sb = spectral_bounds(h, 30, derive_seed(seed, 0x5b));
  LinesearchConfig cfg;
  cfg.c_e = c_e;
  cfg.eps_eig = eps_eig;
  cfg.eps_ls = eps_ls;
  cfg.branch = branch;
  const double c_h = 1.1 * sb.abs_max() + 1e-12;
  std::tie(cfg.delta_lo, cfg.delta_hi) = default_bracket(g.norm() + eps_eig, c_h, c_e, eps_eig);
  return adaptive_delta_search(h, g, cfg, seed);
}

namespace {

void fill_direction(IterateTrace& rec, const LinesearchResult& ls) {
  rec.delta = ls.delta;
  rec.theta = ls.solution.theta;
  rec.d_norm = ls.solution.d.norm();
  rec.ls_bisections = ls.bisections;
  rec.eigen_iters = ls.eigen_iters;
  rec.eigen_solves = ls.eigen_solves;
  rec.perturbed = ls.perturbed;
}

std::uint64_t planned_iterations(const RunConfig& cfg) {
  if (cfg.max_iters > 0) return static_cast<std::uint64_t>(cfg.max_iters);
  return predicted_iterations(cfg.target_eps, cfg.alpha, cfg.constants);
}

// Shared bookkeeping of the outer loops: diagnostics, cumulative columns,
// stopping rules and error capture.
class Driver {
 public:
  Driver(const Vector& x0, const StochasticOracle& oracle, const RunConfig& cfg,
         const IterationObserver& observer)
      : oracle_(oracle), cfg_(cfg), observer_(observer), problem_(oracle.problem()),
        start_(std::chrono::steady_clock::now()) {
    require(x0.size() == oracle.dim(), "run: starting point has the wrong length");
    result_.final_x = x0;
  }

  // Records x0. Returns true when the run should stop.
  bool begin() {
    IterateTrace rec;
    rec.k = 0;
    return record(rec, result_.final_x, 0);
  }

  // Wraps one step; exceptions become an error status.
  template <class Step>
  bool advance(std::int64_t k, Step&& step) {
    try {
      StepOutcome out = step(k, result_.final_x);
      if (!out.x_next.allFinite()) throw NumericError("iterate became non-finite");
      if (problem_ && !problem_->in_level_set(out.x_next)) {
        throw NumericError("iterate left the level set on which the Lipschitz constants hold");
      }
      out.record.k = k;
      return record(out.record, out.x_next, out.matvecs);
    } catch (const ContractViolation&) {
      throw;
    } catch (const std::exception& e) {
      result_.status = RunStatus::kError;
      result_.message = "iteration " + std::to_string(k) + ": " + e.what();
      stopped_ = true;
      return true;
    }
  }

  RunResult finish() {
    if (!stopped_) {
      const bool reached = problem_ && problem_->has_f_star() && !result_.trace.empty() &&
                           result_.trace.back().f_gap <= cfg_.target_eps;
      result_.status = reached ? RunStatus::kReachedEps : RunStatus::kBudgetExhausted;
    }
    if (!problem_ || !problem_->has_f_star()) {
      // Proxy gap against the best value seen, in the minimisation convention.
      result_.gap_is_proxy = true;
      const double sign = (problem_ && problem_->info().maximization) ? -1.0 : 1.0;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& r : result_.trace) best = std::min(best, sign * r.f_value);
      for (auto& r : result_.trace) r.f_gap = sign * r.f_value - best;
    }
    result_.total_samples = samples_;
    result_.total_matvecs = matvecs_;
    return std::move(result_);
  }

  RunResult& result() { return result_; }

 private:
  bool record(IterateTrace rec, const Vector& x, std::uint64_t step_matvecs) {
    samples_ += rec.n_g + rec.n_h;
    matvecs_ += step_matvecs;
    rec.cum_samples = samples_;
    rec.cum_matvecs = matvecs_;
    if (cfg_.record_wall_time) {
      rec.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start_)
                        .count();
    }
    if (problem_) {
      const double f = problem_->value(x);
      if (!std::isfinite(f)) {
        result_.status = RunStatus::kError;
        result_.message = "objective became non-finite";
        stopped_ = true;
      }
      rec.f_value = problem_->info().maximization ? -f : f;
      rec.grad_norm = problem_->gradient(x).norm();
      if (problem_->has_f_star()) rec.f_gap = f - problem_->f_star();
    } else {
      rec.f_value = std::numeric_limits<double>::quiet_NaN();
      rec.grad_norm = std::numeric_limits<double>::quiet_NaN();
    }
    result_.trace.push_back(rec);
    result_.final_x = x;
    if (stopped_) return true;

    if (cfg_.early_exit && problem_ && problem_->has_f_star() && rec.f_gap <= cfg_.target_eps) {
      result_.status = RunStatus::kReachedEps;
      stopped_ = true;
      return true;
    }
    if (cfg_.sample_budget > 0 && samples_ >= cfg_.sample_budget) {
      result_.status = RunStatus::kBudgetExhausted;
      result_.message = "sample budget exhausted";
      stopped_ = true;
      return true;
    }
    if (observer_ && observer_(rec, x)) {
      stopped_ = true;
      result_.status = RunStatus::kBudgetExhausted;
      result_.message = "stopped by observer";
      return true;
    }
    return false;
  }

  const StochasticOracle& oracle_;
  const RunConfig& cfg_;
  const IterationObserver& observer_;
  std::shared_ptr<const Problem> problem_;
  std::chrono::steady_clock::time_point start_;
  RunResult result_;
  std::uint64_t samples_ = 0;
  std::uint64_t matvecs_ = 0;
  bool stopped_ = false;
};

}  // namespace

StepOutcome shsodm_step(const Vector& x, const StochasticOracle& oracle, const RunConfig& cfg,
                        std::int64_t k) {
  require(k >= 1, "shsodm_step: k must be >= 1");
  require(x.size() == oracle.dim(), "shsodm_step: length mismatch");
  const bool deterministic = cfg.mode == Mode::kDeterministic;
  const SamplePlan plan = deterministic
                              ? plan_tolerances(cfg.target_eps, cfg.alpha, cfg.constants)
                              : plan_sample_sizes(cfg.target_eps, cfg.alpha, cfg.constants);

  std::shared_ptr<StochasticOracle> exact;
  if (deterministic) {
    if (!oracle.problem()) throw Unsupported("deterministic mode needs an exact objective");
    exact = make_exact_oracle(oracle.problem());
  }
  const StochasticOracle& use = deterministic ? *exact : oracle;
  const std::uint64_t n_g = deterministic ? 1 : plan.n_g;
  const std::uint64_t n_h = deterministic ? 1 : plan.n_h;
  const auto uk = static_cast<std::uint64_t>(k);

  SampleCounter counter;
  const Vector g =
      batch_gradient(use, x, n_g, derive_seed(cfg.seed, uk, StreamKind::kGradient), &counter)
          .g_hat;
  const LinearMap h =
      batch_hessian_map(use, x, n_h, derive_seed(cfg.seed, uk, StreamKind::kHessian), &counter)
          .map;
  const double c_e = resolve_c_e(oracle, cfg);
  const LinesearchResult ls =
      solve_direction(h, g, plan.eps_eig, plan.eps_ls, c_e, cfg.branch,
                      derive_seed(cfg.seed, uk, StreamKind::kLinesearch));

  StepOutcome out;
  out.x_next = x + ls.solution.d;
  out.record.k = k;
  fill_direction(out.record, ls);
  out.record.n_g = counter.gradient;
  out.record.n_h = counter.hessian;
  out.matvecs = h.matvec_count();
  return out;
}

RunResult run_shsodm(const Vector& x0, const StochasticOracle& oracle, const RunConfig& cfg,
                     const IterationObserver& observer) {
  cfg.validate();
  require(cfg.mode == Mode::kShsodm || cfg.mode == Mode::kDeterministic,
          "run_shsodm: mode must be shsodm or deterministic");
  const std::uint64_t iters = planned_iterations(cfg);
  Driver drv(x0, oracle, cfg, observer);
  drv.result().plan = cfg.mode == Mode::kDeterministic
                          ? plan_tolerances(cfg.target_eps, cfg.alpha, cfg.constants)
                          : plan_sample_sizes(cfg.target_eps, cfg.alpha, cfg.constants);
  drv.result().c_e = resolve_c_e(oracle, cfg);
  drv.result().iterations_planned = static_cast<std::int64_t>(iters);
  if (!drv.begin()) {
    for (std::uint64_t k = 1; k <= iters; ++k) {
      const bool stop = drv.advance(static_cast<std::int64_t>(k), [&](std::int64_t kk, const Vector& x) {
        return shsodm_step(x, oracle, cfg, kk);
      });
      if (stop) break;
    }
  }
  return drv.finish();
}

RunResult run_vr_shsodm(const Vector& x0, const StochasticOracle& oracle, const RunConfig& cfg,
                        const IterationObserver& observer) {
  cfg.validate();
  require(cfg.mode == Mode::kVrShsodm, "run_vr_shsodm: mode must be vr_shsodm");
  const std::uint64_t iters = planned_iterations(cfg);
  const std::int64_t k_c =
      cfg.k_c > 0 ? cfg.k_c : vr_checkpoint_period(iters, cfg.alpha, cfg.constants);
  const SamplePlan plan = plan_sample_sizes(cfg.target_eps, cfg.alpha, cfg.constants);
  const double c_e = resolve_c_e(oracle, cfg);

  Driver drv(x0, oracle, cfg, observer);
  drv.result().plan = plan;
  drv.result().c_e = c_e;
  drv.result().iterations_planned = static_cast<std::int64_t>(iters);

  SpiderState state;
  double d_prev = 0.0;
  auto step = [&](std::int64_t k, const Vector& x) {
    SpiderBatch batch;
    if (!state.initialized() || k % k_c == 0) {
      const std::int64_t anchor = std::max<std::int64_t>((k / k_c) * k_c, 1);
      batch.n = vr_checkpoint_batch(anchor, cfg.alpha, cfg.constants);
      batch.n_h_checkpoint =
          tolerant_ceil(cfg.constants.c_h * std::sqrt(static_cast<double>(batch.n)));
      batch.force_checkpoint = true;
    } else {
      batch.n = vr_schedule(k, k_c, d_prev, cfg.alpha, cfg.constants);
    }
    SampleCounter counter;
    state = spider_update(state, oracle, x, k, k_c, batch, cfg.seed, &counter);
    const LinesearchResult ls =
        solve_direction(state.h_map, state.v, plan.eps_eig, plan.eps_ls, c_e, cfg.branch,
                        derive_seed(cfg.seed, static_cast<std::uint64_t>(k),
                                    StreamKind::kLinesearch));
    StepOutcome out;
    out.x_next = x + ls.solution.d;
    fill_direction(out.record, ls);
    out.record.n_g = counter.gradient;
    out.record.n_h = counter.hessian;
    out.matvecs = state.h_map.matvec_count();
    d_prev = out.record.d_norm;
    return out;
  };
  if (!drv.begin()) {
    for (std::uint64_t k = 1; k <= iters; ++k) {
      if (drv.advance(static_cast<std::int64_t>(k), step)) break;
    }
  }
  return drv.finish();
}

Vector sgd_step(const Vector& x, const StochasticOracle& oracle, double lr, std::uint64_t n,
                std::uint64_t seed, SampleCounter* counter) {
  require(lr >= 0.0 && std::isfinite(lr), "sgd_step: lr must be >= 0");
  const GradientEstimate g = batch_gradient(oracle, x, n, seed, counter);
  return x - lr * g.g_hat;
}

RunResult run_sgd(const Vector& x0, const StochasticOracle& oracle, const RunConfig& cfg,
                  const IterationObserver& observer) {
  cfg.validate();
  require(cfg.mode == Mode::kSgd, "run_sgd: mode must be sgd");
  Driver drv(x0, oracle, cfg, observer);
  drv.result().iterations_planned = cfg.max_iters;
  auto step = [&](std::int64_t k, const Vector& x) {
    SampleCounter counter;
    StepOutcome out;
    out.x_next = sgd_step(x, oracle, cfg.sgd_lr, cfg.sgd_batch,
                          derive_seed(cfg.seed, static_cast<std::uint64_t>(k), StreamKind::kSgd),
                          &counter);
    out.record.n_g = counter.gradient;
    out.record.d_norm = (out.x_next - x).norm();
    return out;
  };
  if (!drv.begin()) {
    for (std::int64_t k = 1; k <= cfg.max_iters; ++k) {
      if (drv.advance(k, step)) break;
    }
  }
  return drv.finish();
}

RunResult run(const Vector& x0, const StochasticOracle& oracle, const RunConfig& cfg,
              const IterationObserver& observer) {
  switch (cfg.mode) {
    case Mode::kShsodm:
    case Mode::kDeterministic:
      return run_shsodm(x0, oracle, cfg, observer);
    case Mode::kVrShsodm:
      return run_vr_shsodm(x0, oracle, cfg, observer);
    case Mode::kSgd:
      return run_sgd(x0, oracle, cfg, observer);
  }
  throw ContractViolation("run: unknown mode");
}

}  // namespace homodescent
