#include "homodescent/check_suite.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "homodescent/chain_mdp.hpp"
#include "homodescent/lanczos.hpp"
#include "homodescent/optimizer.hpp"
#include "homodescent/planner.hpp"
#include "homodescent/problems.hpp"
#include "homodescent/rate_fit.hpp"
#include "homodescent/rng.hpp"
#include "homodescent/trace_io.hpp"

namespace homodescent {

namespace {

// Collects case outcomes and keeps the first failure message.
struct Checker {
  int cases = 0;
  std::string failure;

  void expect(bool ok, const std::string& what) {
    ++cases;
    if (!ok && failure.empty()) failure = what;
  }
  bool ok() const { return failure.empty(); }
};

struct Sizes {
  int instances;
  int max_dim;
  int seeds;
  int mc_trials;
};

Matrix random_symmetric(Index n, Rng& rng) {
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j) a.col(j) = standard_normal(n, rng);
  return 0.5 * (a + a.transpose());
}

Matrix augmented(const Matrix& h, const Vector& g, double delta) {
  const Index n = h.rows();
  Matrix a(n + 1, n + 1);
  a.topLeftCorner(n, n) = h;
  a.topRightCorner(n, 1) = g;
  a.bottomLeftCorner(1, n) = g.transpose();
  a(n, n) = -delta;
  return a;
}

double lambda_min(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

void eigencore_augmented(Checker& c, const Sizes& sz, Rng& rng) {
  for (int i = 0; i < sz.instances; ++i) {
    const Index n = 1 + i % sz.max_dim;
    const Matrix h = random_symmetric(n, rng);
    const Vector g = standard_normal(n, rng);
    const Vector z = standard_normal(n + 1, rng);
    const AugmentedMap a(LinearMap::from_dense(h), g, 0.3);
    const double err = (a.apply(z) - augmented(h, g, 0.3) * z).lpNorm<Eigen::Infinity>();
    c.expect(err <= 1e-12 * (1.0 + z.norm() * (h.norm() + g.norm())),
             "augmented product off by " + num(err));
    c.expect(symmetry_defect(a.as_linear_map(), 20, i) <= 1e-10, "augmented map not symmetric");
  }
}

void eigencore_lanczos(Checker& c, const Sizes& sz, Rng& rng) {
  for (int i = 0; i < sz.instances; ++i) {
    const Index n = 1 + (7 * i) % sz.max_dim;
    const Matrix a = random_symmetric(n, rng);
    const EigenPair p = leftmost_eigenpair(LinearMap::from_dense(a), 1e-10, 200, i);
    const double err = std::abs(p.value - lambda_min(a));
    c.expect(p.converged && err <= 1e-8, "Lanczos value off by " + num(err) + " at n=" +
                                             std::to_string(n));
    c.expect(std::abs(p.vector.norm() - 1.0) <= 1e-12, "Lanczos vector not unit");
  }
}

void hqm_kkt(Checker& c, const Sizes& sz, Rng& rng) {
  std::uniform_real_distribution<double> ud(-5.0, 5.0);
  for (int i = 0; i < sz.instances; ++i) {
    const Index n = 1 + i % sz.max_dim;
    const Matrix h = random_symmetric(n, rng);
    const Vector g = standard_normal(n, rng);
    const double delta = ud(rng);
    const LinearMap hm = LinearMap::from_dense(h);
    const HqmSolution s = solve_hqm(hm, g, delta, 1e-12, i);
    c.expect(std::abs(s.lambda - lambda_min(augmented(h, g, delta))) <= 1e-8,
             "leftmost eigenvalue mismatch");
    if (s.t_is_degenerate) continue;
    const KktResiduals r = kkt_residuals(s, hm, g, delta);
    c.expect(*r.stationarity <= 1e-6 * (1.0 + g.norm()),
             "stationarity residual " + num(*r.stationarity));
    c.expect(*r.curve <= 1e-6, "curve residual " + num(*r.curve));
    c.expect(r.norm_dev <= 1e-10, "eigenvector not unit");
  }
}

void hqm_monotonicity(Checker& c, const Sizes& sz, Rng& rng, BranchRule branch) {
  for (int i = 0; i < sz.instances / 2 + 1; ++i) {
    const Index n = 2 + i % (sz.max_dim - 1);
    const Matrix h = random_symmetric(n, rng);
    const Vector g = standard_normal(n, rng);
    const LinearMap hm = LinearMap::from_dense(h);
    double prev_theta = 0.0;
    double prev_delta = 0.0;
    for (int j = 0; j < 25; ++j) {
      const double delta = -5.0 + 10.0 * j / 24.0;
      const double theta = solve_hqm(hm, g, delta, 1e-12, j).theta;
      if (j > 0) {
        c.expect(theta >= prev_theta - 1e-8, "theta decreased along the delta grid");
        c.expect(std::abs(theta - prev_theta) <= delta - prev_delta + 1e-8,
                 "theta not 1-Lipschitz in delta");
      }
      prev_theta = theta;
      prev_delta = delta;
    }

    LinesearchConfig cfg;
    cfg.c_e = 4.0 / 3.0;
    cfg.eps_ls = 1e-6;
    cfg.eps_eig = 1e-3;
    cfg.branch = branch;
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    std::tie(cfg.delta_lo, cfg.delta_hi) = default_bracket(
        g.norm() + cfg.eps_eig, es.eigenvalues().cwiseAbs().maxCoeff(), cfg.c_e, cfg.eps_eig);
    const int budget = bisection_budget(cfg.delta_hi - cfg.delta_lo, cfg.eps_ls) + 1;
    try {
      const LinesearchResult r = adaptive_delta_search(hm, g, cfg, i);
      c.expect(std::abs(r.h_value) <= cfg.eps_ls + 1e-8,
               "line search missed the root: |h| = " + num(std::abs(r.h_value)));
      c.expect(r.bisections <= budget, "line search used " + std::to_string(r.bisections) +
                                           " bisections, budget " + std::to_string(budget));
    } catch (const LinesearchError& e) {
      c.expect(false, std::string("line search failed: ") + e.what());
    }
  }
}

void hqm_perturbation(Checker& c, const Sizes& sz, Rng& rng) {
  for (int i = 0; i < sz.instances / 2 + 1; ++i) {
    const Index n = 3 + i % (sz.max_dim - 2);
    Vector d = Vector::LinSpaced(n, -1.0, 2.0);
    if (i % 2) d[1] = d[0];
    const LinearMap hm = LinearMap::diagonal(d);
    Vector g = standard_normal(n, rng);
    g[0] = 1e-4;
    if (i % 2) g[1] = 0.0;
    const double eps = 0.05;
    const Perturbation p = perturb_gradient(hm, g, eps, i, 1e-12);
    const double proj = (i % 2) ? p.g_prime.head(2).norm() : std::abs(p.g_prime[0]);
    c.expect(p.perturbed, "small projection was not perturbed");
    c.expect(proj >= eps * (1 - 1e-9), "projection below eps after perturbation");
    c.expect((p.g_prime - g).norm() <= eps + 1e-6, "perturbation moved g too far");
    c.expect(!perturb_gradient(hm, p.g_prime, eps, i, 1e-12).perturbed,
             "perturbation is not idempotent");
  }
}

void oracle_checks(Checker& c, const Sizes& sz) {
  auto p = make_pl_quadratic(std::min<Index>(8, sz.max_dim), 10.0, 2);
  auto o = make_additive_noise_oracle(p, 1.0, 0.5, 3);
  const Vector x = Vector::LinSpaced(p->dim(), -1.0, 1.0);
  Vector mean = Vector::Zero(p->dim());
  SampleCounter counter;
  for (int s = 0; s < sz.mc_trials; ++s) {
    mean += batch_gradient(*o, x, 1, s, &counter).g_hat;
  }
  mean /= sz.mc_trials;
  const double tol = 4.0 / std::sqrt(static_cast<double>(sz.mc_trials));
  c.expect((mean - p->gradient(x)).cwiseAbs().maxCoeff() <= tol, "gradient estimator biased");
  c.expect(counter.gradient == static_cast<std::uint64_t>(sz.mc_trials),
           "sample counter is not exact");
  c.expect(batch_gradient(*o, x, 3, 9).g_hat == batch_gradient(*o, x, 3, 9).g_hat,
           "oracle not reproducible under a fixed seed");
  const Matrix hs = dense_materialize(batch_hessian_map(*o, x, 2, 5).map);
  c.expect(hs == hs.transpose(), "sampled Hessian not symmetric");
}

void spider_checks(Checker& c, const Sizes& sz) {
  auto p = make_pnorm_power(std::min<Index>(6, sz.max_dim), 4.0, 1.0);
  auto o = make_exact_oracle(p);
  Rng rng(5);
  for (std::int64_t kc : {1, 3, 50}) {
    SpiderState s;
    Vector x = 0.5 * random_unit(p->dim(), rng);
    for (std::int64_t k = 0; k < 10; ++k) {
      x += 0.02 * random_unit(p->dim(), rng);
      SpiderBatch b;
      b.n = 3;
      s = spider_update(s, *o, x, k, kc, b, 7);
      c.expect(s.v == p->gradient(x), "SPIDER gradient drifted from the exact gradient");
    }
  }
}

void problem_derivatives(Checker& c, const Sizes& sz) {
  const Index n = std::min<Index>(10, sz.max_dim);
  std::vector<std::shared_ptr<const Problem>> probs = {
      make_pl_quadratic(n, 50.0, 1), make_pnorm_power(n, 3.0), make_pnorm_power(n, 4.0),
      make_pnorm_power(n, 8.0)};
  probs.push_back(make_chain_mdp_policy(make_chain_mdp(), 30, 1.0).objective);
  for (const auto& p : probs) {
    const DerivativeCheck d = check_derivatives(*p, sz.instances, 3);
    c.expect(d.gradient_error <= 1e-5, p->name() + ": gradient check " + num(d.gradient_error));
    c.expect(d.hessian_error <= 1e-4, p->name() + ": Hessian check " + num(d.hessian_error));
  }
}

void problem_gd(Checker& c, const Sizes& sz) {
  const Index n = std::min<Index>(10, sz.max_dim);
  std::vector<std::shared_ptr<const Problem>> probs = {
      make_pl_quadratic(n, 50.0, 1), make_pnorm_power(n, 2.0), make_pnorm_power(n, 3.0),
      make_pnorm_power(n, 4.0), make_pnorm_power(n, 8.0)};
  for (const auto& p : probs) {
    const GdCheck g = verify_gd_constant(*p, 10 * sz.instances, 4);
    c.expect(g.holds, p->name() + ": gradient dominance fails, ratio " + num(g.worst_ratio));
    c.expect(!verify_gd_constant(*p, 10 * sz.instances, 4, p->c_gd() / 2).holds ||
                 p->name() == "pl_quadratic",
             p->name() + ": halved constant not rejected");
  }
}

void problem_mdp(Checker& c, const Sizes& sz) {
  auto pol = make_chain_mdp_policy(make_chain_mdp(3, 0.1, 0.9, 30), 30, 1.0, false, 2);
  const Vector theta = Vector::LinSpaced(pol.objective->dim(), -0.5, 0.5);
  const Vector exact = pol.objective->gradient(theta);
  const Index n = theta.size();
  Vector s1 = Vector::Zero(n);
  Vector s2 = Vector::Zero(n);
  const int trials = 2 * sz.mc_trials;
  for (int i = 0; i < trials; ++i) {
    const Vector g = pol.oracle->gradient_batch(theta, 1, i);
    s1 += g;
    s2 += g.cwiseProduct(g);
  }
  const Vector mean = s1 / trials;
  const Vector se = ((s2 / trials - mean.cwiseProduct(mean)).cwiseMax(0.0) / trials).cwiseSqrt();
  for (Index i = 0; i < n; ++i) {
    c.expect(std::abs(mean[i] - exact[i]) <= 4.0 * se[i] + 1e-12,
             "MDP gradient estimator biased in component " + std::to_string(i));
  }
}

void optimizer_descent(Checker& c, const Sizes& sz, BranchRule branch) {
  for (double pw : {3.0, 4.0}) {
    auto p = make_pnorm_power(std::min<Index>(10, sz.max_dim), pw, 1.0);
    RunConfig cfg;
    cfg.mode = Mode::kDeterministic;
    cfg.alpha = p->alpha();
    cfg.target_eps = 1e-8;
    cfg.max_iters = 20;
    cfg.branch = branch;
    const SamplePlan plan = plan_sample_sizes(cfg.target_eps, cfg.alpha);
    const RunResult r = run(p->default_start(1), *make_exact_oracle(p), cfg);
    c.expect(r.status != RunStatus::kError, "deterministic run failed: " + r.message);
    for (std::size_t k = 1; k < r.trace.size(); ++k) {
      const double bound =
          6.0 / p->lip_h() *
          (r.trace[k - 1].f_value - r.trace[k].f_value + std::pow(plan.eps_eig, 1.5) +
           std::pow(plan.eps_ls, 3.0));
      c.expect(std::pow(r.trace[k].d_norm, 3.0) <= bound + 1e-10,
               "cubic step bound violated at k=" + std::to_string(k));
    }
  }
}

void optimizer_vr(Checker& c, const Sizes& sz) {
  auto p = make_pnorm_power(std::min<Index>(8, sz.max_dim), 8.0, 1.0);
  auto o = make_additive_noise_oracle(p, 0.0, 0.0, 1);
  RunConfig cfg;
  cfg.alpha = p->alpha();
  cfg.target_eps = 1e-3;
  cfg.max_iters = 10;
  cfg.early_exit = false;
  cfg.k_c = 3;
  const RunResult a = run(p->default_start(2), *o, cfg);
  cfg.mode = Mode::kVrShsodm;
  const RunResult b = run(p->default_start(2), *o, cfg);
  c.expect(a.status != RunStatus::kError && b.status != RunStatus::kError, "run failed");
  c.expect(a.final_x == b.final_x, "VR path differs from the plain path at zero noise");
}

void planner_checks(Checker& c) {
  const SamplePlan a = plan_sample_sizes(1e-2, 1.0);
  c.expect(a.n_g == 10000 && a.n_h == 100, "planner sizes at alpha = 1");
  const SamplePlan b = plan_sample_sizes(1e-2, 2.0);
  c.expect(b.n_g == 100 && b.n_h == 10, "planner sizes at alpha = 2");
  c.expect(predicted_iterations(1e-4, 1.0) == 100, "iterations at alpha = 1");
  c.expect(predicted_iterations(1e-4, 1.5) == 10, "iterations at alpha = 3/2");
  c.expect(predicted_iterations(1e-4, 2.0) == 3, "iterations at alpha = 2");
  c.expect(vr_schedule(4, 4, 1.0, 1.0) == 256, "VR checkpoint batch");
}

void bench_checks(Checker& c) {
  std::vector<double> k;
  std::vector<double> poly;
  std::vector<double> geo;
  for (int i = 1; i <= 40; ++i) {
    k.push_back(i);
    poly.push_back(std::pow(i, -8.0));
    geo.push_back(std::pow(0.5, i));
  }
  const RateFit f = fit_convergence_order(k, poly, 1, 40);
  c.expect(f.regime_label == Regime::kSublinear && std::abs(f.exponent + 8.0) <= 0.01,
           "synthetic k^-8 fit");
  c.expect(fit_convergence_order(k, geo, 1, 40).regime_label == Regime::kLinear,
           "synthetic geometric fit");

  std::vector<IterateTrace> t(3);
  for (int i = 0; i < 3; ++i) {
    t[i].k = i;
    t[i].f_value = 1.0 / 3.0 + i;
    t[i].cum_samples = 10 * i;
  }
  std::stringstream ss;
  write_trace_csv(ss, t);
  const auto back = read_trace_csv(ss);
  c.expect(back.size() == 3 && back[1].f_value == t[1].f_value &&
               back[2].cum_samples == t[2].cum_samples,
           "trace CSV round trip");
}

}  // namespace

bool CheckReport::all_passed() const {
  for (const auto& g : groups)
    if (!g.passed) return false;
  return true;
}

std::string CheckReport::to_json() const {
  nlohmann::ordered_json j;
  j["all_passed"] = all_passed();
  j["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : groups) {
    j["groups"].push_back({{"name", g.name},
                           {"passed", g.passed},
                           {"cases", g.cases},
                           {"detail", g.detail},
                           {"seconds", g.seconds}});
  }
  return j.dump(2) + "\n";
}

CheckReport check_suite(const CheckOptions& opts) {
  const bool quick = opts.level == CheckLevel::kQuick;
  const Sizes sz = quick ? Sizes{12, 16, 3, 2000} : Sizes{60, 30, 10, 10000};
  CheckReport report;
  Rng rng(derive_seed(opts.seed, 0xc5));

  auto group = [&](const std::string& name, const std::function<void(Checker&)>& body) {
    CheckGroup g;
    g.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    Checker c;
    try {
      body(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    g.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    g.cases = c.cases;
    g.passed = c.ok();
    g.detail = c.ok() ? std::to_string(c.cases) + " cases" : c.failure;
    report.groups.push_back(g);
  };

  group("eigencore.augmented_map", [&](Checker& c) { eigencore_augmented(c, sz, rng); });
  group("eigencore.lanczos", [&](Checker& c) { eigencore_lanczos(c, sz, rng); });
  group("hqm.kkt", [&](Checker& c) { hqm_kkt(c, sz, rng); });
  group("hqm.delta_monotonicity_linesearch",
        [&](Checker& c) { hqm_monotonicity(c, sz, rng, opts.branch); });
  group("hqm.perturbation", [&](Checker& c) { hqm_perturbation(c, sz, rng); });
  group("oracle.unbiased_accounting", [&](Checker& c) { oracle_checks(c, sz); });
  group("oracle.spider_telescoping", [&](Checker& c) { spider_checks(c, sz); });
  group("problems.derivatives", [&](Checker& c) { problem_derivatives(c, sz); });
  group("problems.gradient_dominance", [&](Checker& c) { problem_gd(c, sz); });
  group("problems.mdp_estimator", [&](Checker& c) { problem_mdp(c, sz); });
  group("optimizer.deterministic_descent",
        [&](Checker& c) { optimizer_descent(c, sz, opts.branch); });
  group("optimizer.vr_path_equality", [&](Checker& c) { optimizer_vr(c, sz); });
  group("planner.schedules", [&](Checker& c) { planner_checks(c); });
  group("bench.rate_fit_and_io", [&](Checker& c) { bench_checks(c); });
  return report;
}

}  // namespace homodescent
