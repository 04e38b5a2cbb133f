#include <doctest.h>

#include <filesystem>

#include "aimlake/error.hpp"
#include "aimlake/oracle.hpp"
#include "fixtures.hpp"

using namespace aimlake;

TEST_CASE("flat bottom spectrum is 2 nu |k|^2") {
  const auto& b = fixture::flat().basis;
  const double expect[] = {2, 2, 2, 2, 4, 4, 4, 4, 8, 8, 8, 8};
  for (int k = 0; k < 12; ++k) CHECK(b->eigenvalues(k) == doctest::Approx(expect[k]).epsilon(1e-12));
  // Stream modes carry |k|^2 in the gram; K = 4 gives 32 / 1.
  CHECK(b->gram_condition == doctest::Approx(32.0).epsilon(1e-9));
  CHECK(b->poincare == doctest::Approx(1.0).epsilon(1e-9));

  const auto half = fixture::make_lake("1", "0.5", "0", 32, 4);
  CHECK(half.basis->eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("variable depth eigenpairs") {
  const auto& b = *fixture::reference().basis;
  // Self-baseline for b = 2 + sin x, K = 6, M = 64.
  CHECK(b.eigenvalues(0) == doctest::Approx(1.76769688914381).epsilon(1e-9));
  CHECK(b.eigenvalues(2) == doctest::Approx(1.95346263000262).epsilon(1e-9));
  CHECK(b.eigenvalues(6) == doctest::Approx(4.43276743258868).epsilon(1e-9));
  for (int k = 1; k < b.dim; ++k) CHECK(b.eigenvalues(k) >= b.eigenvalues(k - 1));

  const Eigen::MatrixXd V = b.eigenvectors;
  CHECK((V.transpose() * b.gram * V - Eigen::MatrixXd::Identity(b.dim, b.dim)).norm() < 1e-9);
  double resid = 0;
  for (int k = 0; k < b.dim; ++k) {
    resid = std::max(resid, (b.stiffness * V.col(k) - b.eigenvalues(k) * b.gram * V.col(k)).norm() / b.eigenvalues(k));
  }
  CHECK(resid < 1e-9);
  CHECK(std::find(b.zero_gap_cuts.begin(), b.zero_gap_cuts.end(), 1) != b.zero_gap_cuts.end());

  const auto wf = weyl_fit(b);
  CHECK(wf.r2 >= 0.95);
  CHECK(wf.slope > 0);
}

TEST_CASE("coercivity on the whole space") {
  for (const auto* lake : {&fixture::reference(), &fixture::flat()}) {
    const auto& b = *lake->basis;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(b.stiffness, b.h1b, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= b.scalars.b_bar * b.scalars.nu_i - 1e-9);
  }
}

TEST_CASE("semigroup against the dense matrix exponential") {
  const auto& b = *fixture::reference().basis;
  CHECK(semigroup_oracle_error(b, 0.3) <= 1e-9);
  CHECK(semigroup_oracle_error(b, 0.0) <= 1e-12);

  SpectralState s{Eigen::VectorXd::Ones(b.dim), 0.0};
  const auto e = semigroup_apply(b, s, 0.5);
  CHECK(e.coeffs(0) == doctest::Approx(std::exp(-0.5 * b.eigenvalues(0))));
  CHECK_THROWS_AS(semigroup_apply(b, s, -1.0), Error);
}

TEST_CASE("projections split the state") {
  const auto& b = *fixture::reference().basis;
  SpectralState s{Eigen::VectorXd::LinSpaced(b.dim, 1.0, 2.0), 0.0};
  const auto lo = project(s, 8, Part::Low), hi = project(s, 8, Part::High);
  CHECK((lo.coeffs + hi.coeffs - s.coeffs).norm() == 0.0);
  CHECK(lo.coeffs.tail(b.dim - 8).isZero(0.0));
  CHECK(norm_h(s) == doctest::Approx(s.coeffs.norm()));
  CHECK(norm_v(b, s) > 0);
  const auto back = apply_A_inverse(b, apply_A(b, s));
  CHECK((back.coeffs - s.coeffs).norm() < 1e-12 * s.coeffs.norm());
  CHECK_THROWS_AS(project(s, b.dim + 1, Part::Low), Error);
}

TEST_CASE("operator bounds") {
  SUBCASE("flat bottom: every bound holds") {
    const auto& b = *fixture::flat().basis;
    for (int n : {1, 4, 12, 30}) {
      for (double t : {0.01, 0.1, 1.0}) CHECK(semigroup_bound_check(b, n, t).pass);
      for (double tau : {0.01, 0.1, 1.0})
        for (const auto& c : resolvent_bounds_audit(b, n, tau)) CHECK_MESSAGE(c.pass, c.name << " n=" << n);
    }
  }
  SUBCASE("variable depth: exponential form and embedding hold") {
    const auto& b = *fixture::reference().basis;
    for (int n : {2, 8, 16}) {
      for (double t : {0.01, 0.1, 1.0}) CHECK(semigroup_bound_check(b, n, t).pass);
      const auto cs = resolvent_bounds_audit(b, n, 0.1);
      REQUIRE(cs.size() == 3);
      CHECK(cs[1].pass);
      CHECK(cs[2].pass);
      // The linear form 1 + tau lambda_n exceeds by a fraction of a percent here.
      CHECK(cs[0].measured <= 1.01 * cs[0].bound);
    }
  }
}

TEST_CASE("basis cache round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "aimlake_basis_cache_test";
  std::filesystem::remove_all(dir);
  const auto& f = fixture::flat().fields;
  const auto built = load_or_build_basis(f, dir.string());
  CHECK(std::filesystem::exists(dir / (built.hash + ".basis")));
  const auto loaded = load_or_build_basis(f, dir.string());
  CHECK(loaded.hash == built.hash);
  CHECK((loaded.eigenvalues - built.eigenvalues).norm() == 0.0);
  CHECK((loaded.metric_v_e - built.metric_v_e).norm() == 0.0);
  CHECK(basis_hash(fixture::reference().fields) != built.hash);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dominant modes of the flat spectrum") {
  const auto& b = *fixture::flat().basis;
  const auto modes = stream_modes(4);
  for (int k = 0; k < 4; ++k) {
    const auto& m = modes[b.dominant_mode(k)];
    CHECK(m.k1 * m.k1 + m.k2 * m.k2 == 1);
  }
}
