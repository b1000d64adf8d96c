// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion not listed with --known-failure fails.

#include "oracles.hpp"

#include "pdmala/diagnostics.hpp"
#include "pdmala/ergodicity.hpp"
#include "pdmala/glmm.hpp"
#include "pdmala/harness.hpp"
#include "pdmala/samplers.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace pdmala;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  double budget_s;  // 0: no runtime limit
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

ExperimentConfig desk() { return profile_config("desk"); }

// ---------------------------------------------------------------------------

GlmmSpec random_spec(GlmmFamily family, Index m, Rng& rng) {
  const SiteSet sites = SiteSet::uniform(static_cast<std::size_t>(m), rng);
  CovarianceModel cov;
  const SpdMatrix sigma = build_covariance(sites, cov);
  Vector mu(m);
  for (Index i = 0; i < m; ++i) mu[i] = 0.5 * rng.normal();
  const Vector x = sample_field(mu, sigma, rng);
  std::vector<int> trials;
  if (family == GlmmFamily::binomial_logit) trials.assign(static_cast<std::size_t>(m), 50);
  return GlmmSpec(family, simulate_data(family, trials, x, rng), trials, mu, sigma);
}

Outcome derivatives() {
  Rng rng(11);
  double worst_g = 0, worst_h = 0, worst_t = 0;
  const double eps = 1e-5;
  for (GlmmFamily family : {GlmmFamily::binomial_logit, GlmmFamily::poisson_log}) {
    for (Index m : {1, 8, 20}) {
      const GlmmSpec spec = random_spec(family, m, rng);
      for (int p = 0; p < 50; ++p) {
        Vector x = spec.prior_mean();
        for (Index i = 0; i < m; ++i) x[i] += rng.normal();
        const Vector g = grad_log_target(spec, x);
        const Vector g_fd =
            oracle::central_gradient([&](const Vector& y) { return log_target(spec, y); }, x, eps);
        Vector h_fd(m), t_fd(m);
        for (Index j = 0; j < m; ++j) {
          Vector a = x, b = x;
          a[j] += eps;
          b[j] -= eps;
          // neg_hessian is -grad^2 log f, third_diag is d^3 log f / dx_j^3
          h_fd[j] = -(grad_log_target(spec, a)[j] - grad_log_target(spec, b)[j]) / (2 * eps);
          t_fd[j] = -(neg_hessian(spec, a)(j, j) - neg_hessian(spec, b)(j, j)) / (2 * eps);
        }
        worst_g = std::max(worst_g, oracle::rel_err(g, g_fd));
        worst_h = std::max(worst_h, oracle::rel_err(Vector(neg_hessian(spec, x).diagonal()), h_fd));
        worst_t = std::max(worst_t, oracle::rel_err(third_diag(spec, x), t_fd));
      }
    }
  }
  return {worst_g < 1e-6 && worst_h < 1e-5 && worst_t < 1e-5,
          "max rel err gradient " + fmt("%.2e", worst_g) + ", hessian diag " + fmt("%.2e", worst_h) +
              ", third diag " + fmt("%.2e", worst_t)};
}

// ---------------------------------------------------------------------------

Outcome mmala_is_pmala() {
  const Dataset d = simulate_dataset(desk());
  const GlmmSpec spec = d.make_spec();
  SamplerConfig a;
  a.preconditioner = PreconditionerKind::position_dependent;
  a.step_size = 0.6;
  a.seed = 5;
  a.initial_state = d.x_true;
  SamplerConfig b = a;
  a.algorithm = Algorithm::mmala;
  b.algorithm = Algorithm::pmala;
  const Kernel km(spec, a), kp(spec, b);

  Rng rng(19);
  double worst = 0;
  for (int i = 0; i < 20; ++i) {
    const Vector x = d.x_true + 2.0 * rng.normal_vector(d.dimension());
    const ChainState sm = km.make_state(x), sp = kp.make_state(x);
    const double scale = std::max(1.0, sp.proposal.mean.cwiseAbs().maxCoeff());
    worst = std::max(worst, (sm.proposal.mean - sp.proposal.mean).cwiseAbs().maxCoeff() / scale);
    worst = std::max(worst, (sm.proposal.factor - sp.proposal.factor).cwiseAbs().maxCoeff());
  }
  const ChainTrace tm = run_chain(km, 1000), tp = run_chain(kp, 1000);
  // The two drifts are algebraically equal but summed in a different order,
  // so states agree to rounding; every accept/reject decision must match.
  const double trace_diff = (tm.states - tp.states).cwiseAbs().maxCoeff();
  const bool same = tm.accepted == tp.accepted && trace_diff < 1e-10;
  return {worst < 1e-10 && same, "max difference " + fmt("%.2e", worst) + ", 1000-step traces " +
                                     (same ? "identical" : "differ") + " (max state diff " +
                                     fmt("%.1e", trace_diff) + "), acceptance " + fmt("%.3f", tm.acceptance_rate)};
}

// ---------------------------------------------------------------------------

Outcome stationarity() {
  Vector mu(2);
  mu << 1.0, -2.0;
  Matrix s(2, 2);
  s << 1.0, 0.6, 0.6, 2.0;
  const GaussianTarget target(mu, SpdMatrix(s));
  struct Case {
    Algorithm a;
    PreconditionerKind g;
    double h;
  };
  const std::vector<Case> cases = {
      {Algorithm::rwm, PreconditionerKind::identity, 1.5},
      {Algorithm::rwm, PreconditionerKind::prior_cov, 2.0},
      {Algorithm::pcmala, PreconditionerKind::identity, 0.8},
      {Algorithm::pcmala, PreconditionerKind::prior_cov, 1.2},
      {Algorithm::mmala, PreconditionerKind::position_dependent, 1.2},
      {Algorithm::pmala, PreconditionerKind::position_dependent, 1.2},
  };
  bool ok = true;
  double worst = 0;
  std::uint64_t seed = 100;
  for (const Case& c : cases) {
    SamplerConfig sc;
    sc.algorithm = c.a;
    sc.preconditioner = c.g;
    sc.step_size = c.h;
    sc.seed = ++seed;
    sc.initial_state = mu;
    const ChainTrace t = run_chain(Kernel(target, sc), 100000);
    for (Index j = 0; j < 2; ++j) {
      const Vector col = t.states.col(j);
      const Vector sq = (col.array() - mu[j]).square().matrix();
      const double zm = std::abs(col.mean() - mu[j]) / oracle::batch_se(col);
      const double zv = std::abs(sq.mean() - s(j, j)) / oracle::batch_se(sq);
      worst = std::max({worst, zm, zv});
      ok = ok && zm < 5 && zv < 5;
    }
  }
  return {ok, std::to_string(cases.size()) + " kernels, worst |z| " + fmt("%.2f", worst)};
}

// ---------------------------------------------------------------------------

Outcome pcula_ar1() {
  const GaussianTarget target(Vector::Zero(1), SpdMatrix(Matrix::Identity(1, 1)));
  SamplerConfig sc;
  sc.algorithm = Algorithm::pcula;
  sc.preconditioner = PreconditionerKind::identity;
  sc.step_size = 0.5;
  sc.seed = 4;
  sc.initial_state = Vector::Zero(1);
  const ChainTrace t = run_chain(Kernel(target, sc), 100000);
  const Vector sq = t.states.col(0).array().square().matrix();
  const double h = 0.5, expected = h / (1 - (1 - h / 2) * (1 - h / 2));
  const double z = std::abs(sq.mean() - expected) / oracle::batch_se(sq);
  return {z < 5, "variance " + fmt("%.4f", sq.mean()) + " vs " + fmt("%.4f", expected) + ", |z| " + fmt("%.2f", z)};
}

// ---------------------------------------------------------------------------

Outcome c2_closed_form() {
  double worst = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const double h = 0.05 + 0.5 * i, s = 0.1 + 0.4 * j;
      const double exact = 2 * std::exp(h * s * s / 2) * oracle::normal_cdf(s * std::sqrt(h));
      worst = std::max(worst, std::abs(c2(s, h, 1, 0, 0) - exact) / exact);
    }
  const double small = c2(1e-6, 1.0, 1, 0, 0);
  return {worst < 1e-8 && std::abs(small - 1) < 1e-4,
          "max rel err " + fmt("%.2e", worst) + " on grid, C2(1e-6) = " + fmt("%.8f", small)};
}

// ---------------------------------------------------------------------------

Outcome bounds() {
  const SpdMatrix eye(Matrix::Identity(3, 3));
  const double four = pcmala_h_bound(eye, eye);
  Rng rng(8);
  double worst = 0;
  for (int i = 0; i < 20; ++i) {
    const Index d = 2 + i % 5;
    const double c = std::exp(4 * rng.uniform() - 2);
    const Matrix sigma = oracle::random_spd(d, rng), g = oracle::random_spd(d, rng);
    const double base = pcmala_h_bound(SpdMatrix(sigma), SpdMatrix(g));
    worst = std::max(worst, oracle::rel_err(pcmala_h_bound(SpdMatrix(c * sigma), SpdMatrix(g)), c * base));
  }
  return {four == 4.0 && worst < 1e-12, "bound(I, I) = " + fmt("%.17g", four) + ", scale rel err " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------

Outcome drift_ratio_binomial() {
  ExperimentConfig c = desk();
  c.sites = 20;
  const Dataset d = simulate_dataset(c);
  const GlmmSpec spec = d.make_spec();
  const Preconditioner eye = resolve_preconditioner(PreconditionerKind::identity, spec);
  const double bound = pcmala_h_bound(spec.prior_covariance(), SpdMatrix(eye.matrix));
  SamplerConfig sc;
  sc.algorithm = Algorithm::pcmala;
  sc.preconditioner = PreconditionerKind::identity;
  sc.step_size = 0.5 * bound;
  sc.initial_state = d.x_true;
  const Kernel k(spec, sc, eye);
  const SamplerKernel sk(k);
  const DriftSpec quad;
  Rng rng(3);
  double worst = -1;
  for (int i = 0; i < 10; ++i) {
    Vector v = rng.normal_vector(20);
    v *= 50 / v.norm();
    const DriftEstimate e = drift_ratio(sk, quad, v, 100000, rng);
    worst = std::max(worst, e.estimate + 3 * e.standard_error);
  }
  return {worst < 1, "h = " + fmt("%.3e", sc.step_size) + ", max (estimate + 3 SE) - 1 = " + fmt("%.3e", worst - 1)};
}

// ---------------------------------------------------------------------------

Outcome non_ge_poisson() {
  ExperimentConfig c = desk();
  c.family = GlmmFamily::poisson_log;
  const Dataset d = simulate_dataset(c);
  const GlmmSpec spec = d.make_spec();
  const Preconditioner g = resolve_preconditioner(PreconditionerKind::prior_cov, spec);
  const Index m = d.dimension();
  const Vector ray = Vector::Ones(m) / std::sqrt(static_cast<double>(m));
  const std::vector<double> radii = {5, 10, 15, 20};
  const Matrix prec = spec.prior_covariance().inverse();
  Vector z(m);
  for (Index i = 0; i < m; ++i) z[i] = d.z[static_cast<std::size_t>(i)];

  bool ok = true;
  std::ostringstream detail;
  for (double h : {0.1, 1.0}) {
    SamplerConfig sc;
    sc.algorithm = Algorithm::pcmala;
    sc.preconditioner = PreconditionerKind::prior_cov;
    sc.step_size = h;
    sc.initial_state = d.x_true;
    const Kernel k(spec, sc, g);
    // Oracle: c(x) = x + h e(x) with e(x) = G grad log f(x) / 2.
    std::vector<double> ratio;
    for (double r : radii) {
      const Vector x = r * ray;
      const Vector grad = z - x.array().exp().matrix() - prec * (x - spec.prior_mean());
      ratio.push_back((0.5 * g.matrix * grad).norm() / x.norm());
    }
    // The data term dominates at r = 5, so growth is only required from r = 10 on.
    const bool increasing = ratio[1] < ratio[2] && ratio[2] < ratio[3];
    const ErgodicityReport lib = non_ge_drift_check(k, {ray}, radii);
    ok = ok && ratio.back() > 2 / h && increasing && lib.verdict == Verdict::violated;
    detail << "h=" << h << ": ratio at 5/10/15/20 " << fmt("%.3g", ratio[0]) << "/" << fmt("%.3g", ratio[1]) << "/"
           << fmt("%.3g", ratio[2]) << "/" << fmt("%.3g", ratio.back()) << " vs 2/h " << 2 / h << ", verdict "
           << to_string(lib.verdict) << "; ";
  }
  return {ok, detail.str()};
}

// ---------------------------------------------------------------------------

// One comparison per seed, shared by the ordering and MPSRF criteria.
struct DeskRuns {
  std::vector<ComparisonResult> results;
  double wall = 0;
};

const DeskRuns& desk_runs() {
  static std::optional<DeskRuns> runs;
  if (!runs) {
    runs.emplace();
    const auto t0 = std::chrono::steady_clock::now();
    for (std::uint64_t seed : {1, 2, 3}) {
      ExperimentConfig c = desk();
      c.seed = seed;
      c.roster = {"PCMALA1", "PCMALA2", "PCMALA4", "PMALA"};
      runs->results.push_back(run_comparison(c, simulate_dataset(c)));
    }
    runs->wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return *runs;
}

const AlgorithmResult& find(const ComparisonResult& r, const std::string& label) {
  for (const auto& a : r.algorithms)
    if (a.entry.label == label) {
      if (!a.ok) throw std::runtime_error(label + " failed: " + a.error);
      return a;
    }
  throw std::runtime_error("missing " + label);
}

Outcome desk_orderings() {
  int hits = 0;
  std::ostringstream detail;
  for (const auto& r : desk_runs().results) {
    const auto& p4 = find(r, "PCMALA4");
    const auto& p1 = find(r, "PCMALA1");
    const auto& p2 = find(r, "PCMALA2");
    const auto& pm = find(r, "PMALA");
    const double e4 = p4.report.mess.value, em = pm.report.mess.value, e1 = p1.report.mess.value;
    const bool ess_order = e4 > em && em > e1;
    const bool msjd_order = p4.report.msjd > pm.report.msjd && pm.report.msjd > p2.report.msjd;
    hits += ess_order && msjd_order;
    detail << "seed " << r.config.seed << " mESS " << fmt("%.0f", e4) << "/" << fmt("%.0f", em) << "/"
           << fmt("%.0f", e1) << " MSJD " << fmt("%.3g", p4.report.msjd) << "/" << fmt("%.3g", pm.report.msjd)
           << "/" << fmt("%.3g", p2.report.msjd) << (ess_order && msjd_order ? " ok" : " no") << "; ";
  }
  return {hits >= 2, std::to_string(hits) + "/3 seeds; " + detail.str()};
}

Outcome mpsrf_pattern() {
  int hits = 0;
  std::ostringstream detail;
  for (const auto& r : desk_runs().results) {
    const Index n = r.config.iterations - r.config.burn_in;
    const auto& p4 = find(r, "PCMALA4");
    const auto& p1 = find(r, "PCMALA1");
    Index first = -1;
    for (const auto& pt : p4.mpsrf->points)
      if (!pt.flagged && pt.value < 1.1) {
        first = pt.iteration;
        break;
      }
    const auto& last = p1.mpsrf->points.back();
    const bool early = first > 0 && first <= n / 4;
    const bool stuck = !last.flagged && last.value > 1.1;
    hits += early && stuck;
    detail << "seed " << r.config.seed << " PCMALA4 below 1.1 at " << first << ", PCMALA1 final "
           << fmt("%.3f", last.value) << "; ";
  }
  return {hits >= 2, std::to_string(hits) + "/3 seeds; " + detail.str()};
}

// ---------------------------------------------------------------------------

Outcome diagnostics_oracles() {
  Rng rng(21);
  const Index n = 100000;
  const Vector ar = oracle::ar1(n, 0.9, rng);
  const double e = ess(ar), target = n / 19.0;
  const bool ess_ok = std::abs(e - target) < 0.25 * target;

  const Matrix one = ar;
  const double me = mess(one).value;
  const bool mess_ok = oracle::rel_err(me, e) < 1e-9;

  Matrix jumps(3, 1);
  jumps << 0, 1, 3;
  const double j = msjd(jumps);

  const Index k = 1000;
  Matrix chain(k, 3);
  for (Index i = 0; i < k; ++i)
    for (Index c = 0; c < 3; ++c) chain(i, c) = rng.normal();
  const auto traj = mpsrf(std::vector<Matrix>{chain, chain, chain}, {k});
  const double r = traj.points.back().value;
  const bool mpsrf_ok = r == (k - 1.0) / k;

  return {ess_ok && mess_ok && j == 2.5 && mpsrf_ok,
          "ESS " + fmt("%.0f", e) + " vs " + fmt("%.0f", target) + ", mESS(p=1) rel diff " +
              fmt("%.1e", oracle::rel_err(me, e)) + ", msjd " + fmt("%.17g", j) + ", mpsrf " + fmt("%.17g", r)};
}

// ---------------------------------------------------------------------------

Outcome tuner() {
  const ExperimentConfig c = desk();
  const Dataset d = simulate_dataset(c);
  const GlmmSpec spec = d.make_spec();
  const Vector mode = spec.mode();
  bool ok = true;
  std::ostringstream detail;
  for (const std::string label : {"RWM1", "PCMALA1", "PCMALA4", "PMALA"}) {
    const RosterEntry e = roster_entry(label);
    const Preconditioner pre = resolve_preconditioner(e.preconditioner, spec, mode);
    SamplerConfig sc;
    sc.algorithm = e.algorithm;
    sc.preconditioner = e.preconditioner;
    sc.step_size = c.step_size;
    sc.seed = 1234;
    sc.initial_state = d.x_true;
    const TuneResult t = tune_step_size(sc, spec, pre, c.tune);
    sc.step_size = t.step_size;
    sc.seed = 98765;  // a stream the tuner never saw
    const double rate = run_chain(Kernel(spec, sc, pre), 5000).acceptance_rate;
    ok = ok && rate > 0.55 && rate < 0.75;
    detail << label << " h " << fmt("%.3g", t.step_size) << " fresh rate " << fmt("%.3f", rate) << "; ";
  }
  return {ok, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pdmala acceptance checks"};
  std::set<int> only, known;
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--known-failure", known, "Report these criteria but do not fail on them");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, 10, derivatives},       {2, 5, mmala_is_pmala},     {3, 30, stationarity},
      {4, 5, pcula_ar1},          {5, 0, c2_closed_form},     {6, 0, bounds},
      {7, 60, drift_ratio_binomial}, {8, 1, non_ge_poisson},  {9, 900, desk_orderings},
      {10, 900, mpsrf_pattern},   {11, 0, diagnostics_oracles}, {12, 120, tuner},
  };

  int unexpected = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    // The desk runs are shared; charge their time to each criterion using them.
    const bool shared = c.id == 9 || c.id == 10;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (shared) secs = std::max(secs, desk_runs().wall);
    const bool in_time = c.budget_s == 0 || secs < c.budget_s;
    const bool pass = o.pass && in_time;
    std::string note = o.detail;
    if (!in_time) note += " runtime over " + fmt("%.0f", c.budget_s) + " s";
    std::printf("criterion %2d %s (%.2f s) %s%s\n", c.id, pass ? "PASS" : "FAIL", secs, note.c_str(),
                !pass && known.count(c.id) ? " [known failure]" : "");
    std::fflush(stdout);
    if (!pass && !known.count(c.id)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
