#include <doctest.h>

#include <numbers>

#include "aimlake/aim.hpp"
#include "aimlake/error.hpp"
#include "aimlake/oracle.hpp"
#include "fixtures.hpp"

using namespace aimlake;

TEST_CASE("two-mode toy: levels approach the invariant graph") {
  const TwoModeToy toy(100, 0.05, 1.0, 0.05, 0.3);
  AimConfig cfg;
  cfg.n = 1;
  cfg.tau = {0.1};
  cfg.prep.rho1 = 1e6;
  const auto phis = build_phi_sequence(toy, cfg, 4);
  for (double y : {-1.0, -0.3, 0.0, 0.5, 1.0}) {
    const double exact = (1.0 - 0.3 * y * y) / (100.05 + 0.05 * y);
    CHECK(toy_slave_manifold(toy, y) == doctest::Approx(exact).epsilon(1e-12));
    const double e1 = std::abs((*phis[1])(Eigen::VectorXd::Constant(1, y))(0) - exact);
    const double e4 = std::abs((*phis[4])(Eigen::VectorXd::Constant(1, y))(0) - exact);
    CHECK(e4 <= 1e-11);
    CHECK(e4 <= e1 + 1e-15);
  }
}

TEST_CASE("linear exactness: geometric approach to A^-1 Q f") {
  const auto& lake = fixture::reference();
  const int n = 8;
  const auto m = lake.model(fixture::steady(1.0, 12));
  AimConfig cfg;
  cfg.n = n;
  cfg.tau = {0.05};
  cfg.nonlinear = false;
  cfg.friction = false;
  cfg.memo_resolution = 0;
  const auto phis = build_phi_sequence(m, cfg, 1);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd f = m.forcing(0.0).tail(m.dim() - n);
  const Eigen::VectorXd target = f.cwiseQuotient(m.eigenvalues().tail(m.dim() - n));
  const Eigen::VectorXd phi1 = (*phis[1])(y);
  CHECK((phi1 - target).norm() < 1e-13 * target.norm());

  // Without the tail the partial sum misses exactly e^{-A tau (N+1)} of the target.
  cfg.include_tail = false;
  for (int N : {0, 1, 2, 3}) {
    const Eigen::VectorXd z = apply_F_N_tau(m, nullptr, y, N, 0.05, cfg);
    const Eigen::ArrayXd expect = (-m.eigenvalues().tail(m.dim() - n).array() * 0.05 * (N + 1)).exp();
    CHECK(((target - z).array() - expect * target.array()).abs().maxCoeff() < 1e-12 * target.norm());
  }
}

TEST_CASE("memo lattice makes results order independent") {
  const auto m = fixture::reference().model(fixture::steady(1.0));
  AimConfig cfg;
  cfg.n = 4;
  cfg.tau = {0.02};
  cfg.prep.rho1 = 3;
  std::vector<Eigen::VectorXd> ys;
  for (int k = 0; k < 6; ++k) ys.push_back(Eigen::VectorXd::Random(4) * 0.5);
  const auto a = build_phi_sequence(m, cfg, 3);
  const auto b = build_phi_sequence(m, cfg, 3);
  std::vector<Eigen::VectorXd> ra, rb(ys.size());
  for (const auto& y : ys) ra.push_back((*a[3])(y));
  for (int k = static_cast<int>(ys.size()) - 1; k >= 0; --k) rb[k] = (*b[3])(ys[k]);
  for (std::size_t k = 0; k < ys.size(); ++k) CHECK((ra[k] - rb[k]).norm() == 0.0);
  CHECK(a.back()->full(ys[0]).head(4).isZero(0.0));
}

TEST_CASE("evaluation budget") {
  const auto m = fixture::reference().model(fixture::steady(1.0));
  AimConfig cfg;
  cfg.n = 4;
  cfg.tau = {0.02};
  cfg.budget = 5;
  cfg.memo_resolution = 0;
  const auto phis = build_phi_sequence(m, cfg, 4);
  try {
    (*phis[4])(Eigen::VectorXd::Constant(4, 0.1));
    FAIL("budget not enforced");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BudgetExceeded);
  }
}

TEST_CASE("literal weights differ from the tau weights") {
  const auto m = fixture::reference().model(fixture::steady(1.0));
  AimConfig cfg;
  cfg.n = 4;
  cfg.tau = {0.02};
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(4, 0.2);
  const Eigen::VectorXd a = apply_F_N_tau(m, nullptr, y, 2, 0.02, cfg);
  cfg.paper_literal = true;
  const Eigen::VectorXd b = apply_F_N_tau(m, nullptr, y, 2, 0.02, cfg);
  CHECK((a - b).norm() > 1e-3 * a.norm());
}

TEST_CASE("backward sequence") {
  const auto m = fixture::reference().model();
  AimConfig cfg;
  cfg.n = 4;
  cfg.prep.rho1 = 1.0;
  const Eigen::VectorXd y0 = Eigen::VectorXd::Constant(4, 0.1);
  const auto seq = backward_euler_sequence(m, y0, nullptr, 3, 0.01, cfg);
  REQUIRE(seq.size() == 4);
  // Backward in time the low modes grow.
  CHECK(seq[3].norm() > seq[0].norm());
  cfg.blowup_factor = 1e-3;
  CHECK_THROWS_AS(backward_euler_sequence(m, y0, nullptr, 3, 1.0, cfg), Error);
  CHECK_THROWS_AS(backward_euler_sequence(m, Eigen::VectorXd::Zero(3), nullptr, 1, 0.1, cfg), Error);
}

TEST_CASE("theorem constants and the tau schedule") {
  const auto m = fixture::reference().model(fixture::steady(0.5));
  AbsorbingEstimates est;
  est.rho0 = 0.3;
  est.rho1 = 0.32;
  est.M0 = 0.005;
  est.M1 = 0.02;
  const auto tc = theorem_constants(m, est, 30, 0.03);
  CHECK(tc.gamma == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-10));
  CHECK(tc.lambda_n == doctest::Approx(m.eigenvalues()(29)));
  CHECK(tc.lambda_n1 == doctest::Approx(m.eigenvalues()(30)));
  CHECK(tc.m == doctest::Approx(0.02 + m.poincare() * 0.05));
  CHECK(tc.l <= tc.l_sup);
  CHECK(tc.window_upper > 0);

  const auto taus = paper_tau_schedule(tc, 3);
  REQUIRE(taus.size() == 3);
  for (int N = 0; N < 3; ++N) {
    CHECK((N + 1) * taus[N] >= tc.chi - 1e-15);
    CHECK((N + 1) * taus[N] <= tc.window_upper + 1e-15);
  }
  CHECK_THROWS_AS(theorem_constants(m, est, 0, 0.03), Error);
}

TEST_CASE("theorem 1 audit on a compliant configuration") {
  const auto m = fixture::reference().model(fixture::steady(0.5));
  AbsorbingEstimates est;
  est.rho0 = 0.30;
  est.rho1 = 0.32;
  est.M0 = 0.005;
  est.M1 = 0.022;
  const auto tc = theorem_constants(m, est, 30, 0.03);
  AimConfig cfg;
  cfg.n = 30;
  cfg.tau = {0.01};
  cfg.prep.rho1 = est.rho1;
  const auto phis = build_phi_sequence(m, cfg, 3);
  const auto rep = audit_theorem1(phis, tc, 40, 5);
  CHECK(rep.hypotheses_ok);
  CHECK(rep.all_measured_ok);
  for (const auto& la : rep.levels) {
    CHECK(la.sup_norm <= tc.L0);
    CHECK(la.lipschitz <= tc.l);
  }
}
