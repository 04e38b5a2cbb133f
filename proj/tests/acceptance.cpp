// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "aimlake/aim.hpp"
#include "aimlake/decay.hpp"
#include "aimlake/oracle.hpp"
#include "aimlake/runner.hpp"
#include "fixtures.hpp"

using namespace aimlake;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

Eigen::VectorXd gaussian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::VectorXd v(d);
  for (int k = 0; k < d; ++k) v(k) = n(rng);
  return v;
}

std::vector<Check> run_stage(const std::string& scenario, const std::string& stage) {
  const auto out = fs::temp_directory_path() / ("aimlake_acceptance_" + scenario);
  fs::remove_all(out);
  RunOptions opt;
  opt.out_dir = out.string();
  Runner r(load_scenario(fixture::source_dir() + "/scenarios/" + scenario + ".yaml"), opt);
  r.run(stage);
  return r.checks();
}

const Check* find(const std::vector<Check>& cs, const std::string& name) {
  for (const auto& c : cs)
    if (c.name == name) return &c;
  return nullptr;
}

// 1
Outcome weighted_algebra() {
  const auto& lake = fixture::reference();
  const auto& f = lake.fields;
  std::mt19937_64 rng(1);
  double sym = 0, skew = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const VelocityField u = lake.core->velocity(gaussian(lake.core->dim(), rng));
    const VelocityField v = lake.core->velocity(gaussian(lake.core->dim(), rng));
    if (trial < 50) {
      const double a = inner_b(u, v, f), b = inner_b(v, u, f);
      const double c = stress_form(u, v, f), d = stress_form(v, u, f);
      sym = std::max({sym, std::abs(a - b) / std::abs(a), std::abs(c - d) / std::abs(c)});
    }
    const double ref = std::abs(trilinear_b(u, v, u, f)) + 1e-300;
    skew = std::max(skew, std::abs(trilinear_b(u, v, v, f)) / ref);
  }
  double quad = 0;
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::VectorXd a = gaussian(lake.core->dim(), rng), b = gaussian(lake.core->dim(), rng),
                          c = gaussian(lake.core->dim(), rng);
    const double q = quadrature_trilinear(f.grid, Expression::parse("2+sin(x)"), a, b, c, 2);
    const double t = trilinear_b(lake.core->velocity(a), lake.core->velocity(b), lake.core->velocity(c), f);
    quad = std::max(quad, std::abs(q - t) / std::abs(t));
  }
  return {sym <= 1e-12 && skew <= 1e-10 && quad <= 1e-8,
          "symmetry " + g(sym) + ", skew " + g(skew) + " over 1000 fields, quadrature gap " + g(quad)};
}

// 2
Outcome coercivity() {
  std::mt19937_64 rng(2);
  double worst_margin = 1e300;
  for (const auto* lake : {&fixture::flat(), &fixture::reference()}) {
    const auto& s = lake->basis->scalars;
    for (int trial = 0; trial < 1000; ++trial) {
      const VelocityField u = lake->core->velocity(gaussian(lake->core->dim(), rng));
      const double q = stress_form(u, u, lake->fields) / h1_seminorm_b(u, lake->fields);
      worst_margin = std::min(worst_margin, q - s.b_bar * s.nu_i);
    }
  }
  return {worst_margin >= -1e-9, "min Rayleigh quotient minus b_bar nu_i = " + g(worst_margin)};
}

// 3
Outcome eigen_structure() {
  const auto& flat = fixture::flat();
  std::vector<double> expect;
  for (const auto& m : stream_modes(flat.fields.grid.cutoff)) expect.push_back(2.0 * (m.k1 * m.k1 + m.k2 * m.k2));
  std::sort(expect.begin(), expect.end());
  double worst = 0;
  for (int k = 0; k < flat.basis->dim; ++k)
    worst = std::max(worst, std::abs(flat.basis->eigenvalues(k) - expect[k]) / expect[k]);
  const auto wf = weyl_fit(*fixture::reference().basis);
  return {worst <= 1e-9 && wf.r2 >= 0.95, "flat spectrum error " + g(worst) + ", linear fit R2 " + g(wf.r2)};
}

// 4
Outcome operator_bounds() {
  int total = 0, failed = 0;
  double worst = 0;
  std::string first;
  for (const auto* lake : {&fixture::flat(), &fixture::reference()}) {
    const auto& b = *lake->basis;
    for (int n : {1, 2, 4, 8, 16}) {
      for (double t : {0.01, 0.1, 1.0}) {
        const auto c = semigroup_bound_check(b, n, t);
        ++total;
        if (!c.pass) ++failed;
      }
      for (double tau : {0.01, 0.1}) {
        for (const auto& c : resolvent_bounds_audit(b, n, tau)) {
          ++total;
          if (!c.pass) {
            ++failed;
            if (c.measured / c.bound > worst) {
              worst = c.measured / c.bound;
              first = c.name + " n=" + std::to_string(n) + " tau=" + g(tau);
            }
          }
        }
      }
    }
  }
  std::string d = std::to_string(failed) + " of " + std::to_string(total) + " sampled bounds violated";
  if (failed) d += "; worst " + first + " exceeds its bound by a relative " + g(worst - 1.0);
  return {failed == 0, d};
}

// 5
Outcome integrator() {
  const auto m = fixture::reference().model(fixture::steady(1.0));
  const Eigen::VectorXd c0 = random_state(m, 1.0, 3);
  auto run = [&](double dt) {
    IntegrateOptions io;
    io.dt = dt;
    io.horizon = 1.0;
    io.record_every = 1 << 30;
    return integrate(m, c0, 0.0, io).states.back();
  };
  const Eigen::VectorXd a = run(0.02), b = run(0.01), c = run(0.005);
  const double ratio = (a - b).norm() / (b - c).norm();
  const auto el = energy_law(fixture::reference().model(), c0, 0.002, 1.0);
  return {ratio >= 3.6 && ratio <= 4.4 && el.relative <= 1e-6,
          "error ratio " + g(ratio) + ", unforced energy residual " + g(el.relative)};
}

// 6
Outcome linear_exactness() {
  const int n = 8;
  const double tau = 0.05;
  const auto m = fixture::reference().model(fixture::steady(1.0, n + 1));
  AimConfig cfg;
  cfg.n = n;
  cfg.tau = {tau};
  cfg.nonlinear = false;
  cfg.friction = false;
  cfg.include_tail = false;
  cfg.memo_resolution = 0;
  const auto phis = build_phi_sequence(m, cfg, 5);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd lam = m.eigenvalues().tail(m.dim() - n);
  const Eigen::VectorXd target = m.forcing(0.0).tail(m.dim() - n).cwiseQuotient(lam);
  double worst = 0;
  for (int L = 1; L <= 5; ++L) {
    const int N = L - 1;
    const double measured = ((*phis[L])(y) - target).norm() / target.norm();
    const double predicted = std::exp(-lam(0) * tau * (N + 1));
    worst = std::max(worst, std::abs(measured / predicted - 1.0));
  }
  return {worst <= 0.10, "worst relative gap to exp(-lambda_{n+1} tau (N+1)) " + g(worst)};
}

// 7
Outcome toy_oracle() {
  const TwoModeToy toy(100, 0.05, 1.0, 0.05, 0.3);
  AimConfig cfg;
  cfg.n = 1;
  cfg.tau = {0.1};
  cfg.prep.rho1 = 1e6;
  cfg.memo_resolution = 0;
  const auto phis = build_phi_sequence(toy, cfg, 4);
  const double oracle_tol = 1e-12;
  double gap = 0;
  for (double y = -2.0; y <= 2.0; y += 0.05)
    gap = std::max(gap, std::abs((*phis[4])(Eigen::VectorXd::Constant(1, y))(0) - toy_slave_manifold(toy, y)));
  return {gap <= 10 * oracle_tol, "sup gap " + g(gap) + " on y in [-2, 2]"};
}

// 8
Outcome theorem1() {
  const auto cs = run_stage("compliant", "aim");
  bool hyp = true, ok = true;
  int audited = 0;
  double sup = 0, lip = 0;
  for (const auto& c : cs) {
    if (c.name.rfind("hypothesis", 0) == 0) hyp = hyp && c.pass;
    if (c.name.rfind("sup_norm_le_L0", 0) == 0 || c.name.rfind("lipschitz_le_l", 0) == 0) {
      ok = ok && c.pass;
      ++audited;
      double& worst = c.name[0] == 's' ? sup : lip;
      worst = std::max(worst, c.measured / c.bound);
    }
  }
  return {hyp && ok && audited == 6, std::string(hyp ? "hypotheses hold" : "hypotheses fail") + ", worst sup/L0 " +
                                         g(sup) + ", worst Lipschitz/l " + g(lip) + " for N <= 3"};
}

// 9
Outcome attractor_trend() {
  const auto cs = run_stage("reference", "aim");
  const Check* dom = find(cs, "sweep_dominance");
  const Check* slope = find(cs, "sweep_slope_negative");
  const Check* r2 = find(cs, "sweep_fit_r2");
  bool levels_ok = true;
  for (const auto& c : cs)
    if (c.name.rfind("semidistance_le_flat", 0) == 0) levels_ok = levels_ok && c.pass;
  if (!dom || !slope || !r2) return {false, "sweep missing"};
  return {levels_ok && dom->pass && slope->pass && r2->pass,
          "dominance " + std::string(dom->pass && levels_ok ? "holds" : "fails") + ", slope " + g(slope->measured) +
              ", R2 " + g(r2->measured)};
}

// 10
Outcome energy_inequalities() {
  const auto& lake = fixture::reference();
  const ForcingModel runs[] = {
      {},
      {ForcingKind::IntegrableL1, 0.5, 0.5, 1, ""},
      {ForcingKind::DerivativeForm, 0.0, 0.2, 1, "sin(2*pi*x/L)*cos(2*pi*y/L)"},
  };
  bool ok = true;
  double worst = 1e300, reduce = 0;
  for (const auto& fm : runs) {
    const auto m = lake.model(fm);
    IntegrateOptions io;
    io.dt = 0.01;
    io.horizon = 8.0;
    io.record_every = 5;
    const auto tr = integrate(m, random_state(m, 0.5, 21), 0.0, io);
    const auto strong = strong_energy_residual(m, tr);
    ok = ok && strong.pass;
    worst = std::min(worst, strong.min_residual / strong.initial_energy);
    for (auto mo : {Mollifier::Identity, Mollifier::Gaussian, Mollifier::HeatEvolved, Mollifier::DeltaMinusGaussian}) {
      GeneralizedOptions go;
      go.mollifier = mo;
      const auto r = generalized_energy_residual(m, tr, go);
      ok = ok && r.pass;
      worst = std::min(worst, r.min_residual / strong.initial_energy);
      if (mo == Mollifier::Identity)
        for (std::size_t k = 0; k < r.pairs.size(); ++k)
          reduce = std::max(reduce, std::abs(r.pairs[k].residual - strong.pairs[k].residual) / strong.initial_energy);
    }
  }
  return {ok && reduce <= 1e-8,
          "min residual / initial energy " + g(worst) + ", identity-limit gap " + g(reduce)};
}

// 11
Outcome splitting() {
  DecayConfig dc;
  dc.horizon = 10;
  dc.initial_radius = 0.3;
  const auto st = decay_study(fixture::reference().model(), dc);
  double logerr = 0;
  for (double t : {0.5, 5.0, 50.0, 500.0}) logerr = std::max(logerr, log_schedule_error(t));
  return {st.triangle_ok && st.schedule_residual <= 1e-12 && logerr <= 1e-8,
          std::string("triangle ") + (st.triangle_ok ? "holds" : "fails") + " at every step, schedule residual " +
              g(st.schedule_residual) + ", log schedule error " + g(logerr)};
}

// 12
Outcome decay_envelopes() {
  const auto cs = run_stage("decay", "decay");
  int boxes = 0;
  bool ok = true;
  std::string d;
  for (const auto& c : cs) {
    if (c.name.rfind("loglaw_envelope_violations", 0) == 0) {
      ++boxes;
      ok = ok && c.pass;
      d += (d.empty() ? "" : ", ") + c.name.substr(c.name.find('[')) + " " + c.note;
    }
    if (c.name.rfind("fourier_bound_violations", 0) == 0) ok = ok && c.pass;
  }
  return {ok && boxes == 3, std::to_string(boxes) + " boxes, zero violations required; " + d};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"weighted-algebra identities", weighted_algebra},
      {"coercivity", coercivity},
      {"eigen-structure", eigen_structure},
      {"operator-bound audits", operator_bounds},
      {"integrator", integrator},
      {"AIM linear exactness", linear_exactness},
      {"AIM oracle equivalence", toy_oracle},
      {"Lipschitz and sup audit, compliant configuration", theorem1},
      {"attractor approximation trend", attractor_trend},
      {"energy inequalities", energy_inequalities},
      {"splitting bookkeeping", splitting},
      {"decay envelopes", decay_envelopes},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("criterion %2zu %s  %s: %s (%.1fs)\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                o.detail.c_str(), sec);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria pass\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
