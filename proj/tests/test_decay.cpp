#include <doctest.h>

#include <numbers>

#include "aimlake/decay.hpp"
#include "aimlake/error.hpp"
#include "fixtures.hpp"

using namespace aimlake;

namespace {

TrajectoryRecord run(const LakeModel& m, double radius, double horizon) {
  IntegrateOptions io;
  io.dt = 0.01;
  io.horizon = horizon;
  io.record_every = 5;
  return integrate(m, random_state(m, radius, 21), 0.0, io);
}

}  // namespace

TEST_CASE("dyadic pairs") {
  std::vector<double> t;
  for (int k = 0; k <= 100; ++k) t.push_back(0.1 * k);
  const auto idx = dyadic_indices(t, 4);
  REQUIRE(!idx.empty());
  CHECK(idx.front() == 0);
  CHECK(idx.back() == 100);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
}

TEST_CASE("mollifiers") {
  CHECK(mollifier_from("Gaussian") == Mollifier::Gaussian);
  CHECK(to_string(Mollifier::DeltaMinusGaussian) == "DeltaMinusGaussian");
  try {
    mollifier_from("Boxcar");
    FAIL("unknown mollifier accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedMollifier);
  }
  CHECK(mollifier_symbol(Mollifier::Identity, 5.0) == 1.0);
  CHECK(mollifier_symbol(Mollifier::Gaussian, 0.0) == doctest::Approx(1.0));
  CHECK(mollifier_symbol(Mollifier::Gaussian, 1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(mollifier_symbol(Mollifier::DeltaMinusGaussian, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)));
}

TEST_CASE("energy residuals on three forcing classes") {
  const auto& lake = fixture::reference();
  const ForcingModel classes[] = {
      {},
      {ForcingKind::IntegrableL1, 0.5, 0.5, 1, ""},
      {ForcingKind::DerivativeForm, 0.0, 0.2, 1, "sin(2*pi*x/L)*cos(2*pi*y/L)"},
  };
  for (const auto& fm : classes) {
    const auto m = lake.model(fm);
    const auto tr = run(m, 0.5, 4.0);
    const auto strong = strong_energy_residual(m, tr);
    CHECK_MESSAGE(strong.pass, to_string(fm.kind));
    CHECK(strong.tolerance == doctest::Approx(1e-6 * strong.initial_energy));
    GeneralizedOptions go;
    go.mollifier = Mollifier::Identity;
    const auto ident = generalized_energy_residual(m, tr, go);
    REQUIRE(ident.pairs.size() == strong.pairs.size());
    for (std::size_t k = 0; k < ident.pairs.size(); ++k)
      CHECK(std::abs(ident.pairs[k].residual - strong.pairs[k].residual) <= 1e-8 * strong.initial_energy);
    for (auto mo : {Mollifier::Gaussian, Mollifier::HeatEvolved, Mollifier::DeltaMinusGaussian}) {
      go.mollifier = mo;
      CHECK_MESSAGE(generalized_energy_residual(m, tr, go).pass, to_string(mo) << " " << to_string(fm.kind));
    }
  }
}

TEST_CASE("Fourier split and Plancherel") {
  const auto m = fixture::reference().model();
  const Eigen::VectorXd c = random_state(m, 0.8, 2);
  const auto s = fourier_split(m, c);
  CHECK(std::sqrt(s.total) <= std::sqrt(s.low) + std::sqrt(s.high) + 1e-12);
  CHECK(s.total == doctest::Approx(s.physical).epsilon(1e-10));
  CHECK(s.low >= 0);
  CHECK(s.high >= 0);
}

TEST_CASE("splitting schedule") {
  const auto sch = splitting_schedule(2.0, 3.0);
  for (double t : {0.0, 0.5, 3.0, 40.0}) {
    CHECK(sch.Z(t) == doctest::Approx(std::pow(1 + t, 2.0)));
    CHECK(std::abs(sch.residual(t)) <= 1e-12 * sch.dZ(t));
  }
  CHECK_THROWS_AS(splitting_schedule(0.0, 1.0), Error);
  for (double t : {0.0, 1.0, 10.0, 1e3}) CHECK(log_schedule_error(t) <= 1e-8);
}

TEST_CASE("lp-lq smoothing") {
  const auto m = fixture::flat().model();
  const auto r = lp_lq_audit(m, 1.0, {0.01, 0.1, 1.0}, 3, 1);
  CHECK(r.C > 0);
  CHECK(std::isfinite(r.C));
  CHECK(r.constants.size() == 3);
  CHECK_THROWS_AS(lp_lq_audit(m, 3.0, {0.1}, 1, 1), Error);
  CHECK_THROWS_AS(lp_lq_audit(m, 1.0, {0.0}, 1, 1), Error);
}

TEST_CASE("decay study on the unforced flow") {
  const auto m = fixture::reference().model();
  DecayConfig dc;
  dc.horizon = 5;
  dc.initial_radius = 0.3;
  const auto st = decay_study(m, dc);
  CHECK(st.triangle_ok);
  CHECK(st.energy_monotone_weighted);
  CHECK(st.loglaw.envelope_violations == 0);
  CHECK(st.fourier_bound.violations == 0);
  CHECK(st.plancherel_error <= 1e-10);
  CHECK(st.schedule_residual <= 1e-12);
  CHECK(st.side_length == doctest::Approx(2 * std::numbers::pi));
  CHECK(st.ledger.rows.size() >= 2);
}
