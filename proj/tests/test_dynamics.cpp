#include <doctest.h>

#include "aimlake/decay.hpp"
#include "aimlake/dynamics.hpp"
#include "aimlake/error.hpp"
#include "fixtures.hpp"

using namespace aimlake;

TEST_CASE("cutoff profile") {
  CHECK(theta_profile(0.0) == 1.0);
  CHECK(theta_profile(1.0) == 1.0);
  CHECK(theta_profile(1.5) == doctest::Approx(0.5));
  CHECK(theta_profile(2.0) == 0.0);
  CHECK(theta_profile(7.0) == 0.0);
  double prev = 1.0;
  for (double s = 0; s < 2.5; s += 0.01) {
    CHECK(theta_profile(s) <= prev);
    prev = theta_profile(s);
  }
}

TEST_CASE("nonlinear term is energy neutral") {
  const auto m = fixture::reference().model();
  const Eigen::VectorXd c = random_state(m, 1.0, 4);
  const Eigen::VectorXd b = rhs_B(m, c);
  CHECK(std::abs(c.dot(b)) < 1e-10 * b.norm() * c.norm());

  PreparedNonlinearity prep;
  prep.rho1 = 0.25 * m.norm_v(c);
  CHECK(rhs_B_theta(m, c, prep).norm() == 0.0);
  prep.rho1 = 10 * m.norm_v(c);
  CHECK((rhs_B_theta(m, c, prep) - b).norm() == 0.0);
}

TEST_CASE("random states have the requested norms") {
  const auto m = fixture::reference().model();
  CHECK(random_state(m, 0.7, 1).norm() == doctest::Approx(0.7));
  CHECK(m.norm_v(random_state_v(m, 0.7, 1)) == doctest::Approx(0.7));
  CHECK((random_state(m, 1.0, 5) - random_state(m, 1.0, 5)).norm() == 0.0);
}

TEST_CASE("linear flow is integrated exactly") {
  const auto m = fixture::flat().model();
  const Eigen::VectorXd c0 = random_state(m, 1.0, 2);
  StepOptions so;
  so.nonlinear = false;
  const Eigen::VectorXd c1 = step(m, c0, 0.0, 0.1, so);
  const Eigen::VectorXd exact = ((-0.1 * m.eigenvalues().array()).exp() * c0.array()).matrix();
  CHECK((c1 - exact).norm() < 1e-14);
  CHECK_THROWS_AS(step(m, c0, 0.0, 0.0, so), Error);
}

TEST_CASE("second-order self convergence") {
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
  CHECK(ratio >= 3.6);
  CHECK(ratio <= 4.4);
}

TEST_CASE("unforced energy law") {
  const auto m = fixture::reference().model();
  const auto r = energy_law(m, random_state(m, 1.0, 9), 0.002, 1.0);
  CHECK(r.relative <= 1e-6);
  CHECK(std::abs(r.residual_richardson) <= std::abs(r.residual_coarse));
}

TEST_CASE("trajectory records and ledger") {
  const auto m = fixture::flat().model();
  IntegrateOptions io;
  io.dt = 0.01;
  io.horizon = 0.5;
  io.record_every = 10;
  const auto tr = integrate(m, random_state(m, 1.0, 1), 0.0, io);
  CHECK(tr.times.size() == 6);
  CHECK(tr.times.back() == doctest::Approx(0.5));
  for (std::size_t k = 1; k < tr.ledger.size(); ++k) CHECK(tr.ledger[k].norm_h < tr.ledger[k - 1].norm_h);
  const auto row = ledger_row(m, tr.states[0], 0.0);
  CHECK(row.dissipation == doctest::Approx(tr.states[0].dot(m.eigenvalues().cwiseProduct(tr.states[0]))));
  CHECK(row.work == 0.0);
}

TEST_CASE("blow-up is reported") {
  const auto m = fixture::reference().model();
  IntegrateOptions io;
  io.dt = 0.5;
  io.horizon = 50;
  CHECK_THROWS_AS(integrate(m, random_state(m, 1e3, 1), 0.0, io), Error);
}

TEST_CASE("absorbing ball baseline on the reference flow") {
  const auto m = fixture::reference().model(fixture::steady(4.0));
  EnsembleConfig ec;
  ec.ensemble_size = 4;
  ec.initial_radius = 1.0;
  ec.horizon = 20;
  ec.dt = 0.01;
  ec.margin = 0.1;
  ec.cutoff_samples = 200;
  ec.lipschitz_pairs = 200;
  ec.seed = 7;
  const auto est = estimate_absorbing(m, ec);
  CHECK(est.absorbed);
  // Self-baseline from the reference run, 5% tolerance.
  CHECK(est.rho0 == doctest::Approx(2.4206).epsilon(0.05));
  CHECK(est.rho1 == doctest::Approx(2.5418).epsilon(0.05));
  CHECK(est.M1 <= est.M1_max);
  CHECK(est.M1_p99 <= est.M1);

  SampleConfig sc;
  sc.n_samples = 5;
  sc.spinup = est.t0 + 2;
  sc.spacing = 0.5;
  sc.seed = 3;
  const auto samples = sample_attractor(m, est, sc);
  CHECK(samples.size() == 5);
  for (const auto& s : samples) CHECK(s.coeffs.norm() <= est.rho0);

  auto late = est;
  late.t0 = 100;
  CHECK_THROWS_AS(sample_attractor(m, late, sc), Error);
}
