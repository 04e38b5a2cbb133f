#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "aimlake/error.hpp"
#include "aimlake/expression.hpp"
#include "aimlake/fft.hpp"
#include "aimlake/field_core.hpp"
#include "aimlake/stats.hpp"
#include "aimlake/util.hpp"
#include "fixtures.hpp"

using namespace aimlake;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

Eigen::VectorXd random_stream(int dim, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd s(dim);
  for (int k = 0; k < dim; ++k) s(k) = g(rng);
  return s;
}

}  // namespace

TEST_CASE("expressions parse once and evaluate with bindings") {
  const auto e = Expression::parse("2 + sin(x) * exp(-y^2)");
  CHECK(e({{"x", 0.0}, {"y", 1.0}}) == doctest::Approx(2.0));
  CHECK(e.at(std::numbers::pi / 2, 0.0, 1.0) == doctest::Approx(3.0));
  CHECK(Expression::parse("2^3^2")({}) == doctest::Approx(512.0));
  CHECK(Expression::parse("-2^2")({}) == doctest::Approx(-4.0));
  CHECK(Expression::parse("max(1, pi) - min(e, 0)")({}) == doctest::Approx(std::numbers::pi));
  CHECK(Expression::parse("2*pi*x/L").at(1.0, 0.0, 4.0) == doctest::Approx(std::numbers::pi / 2));

  SUBCASE("errors") {
    CHECK_THROWS_AS(Expression::parse("2 +"), Error);
    CHECK_THROWS_AS(Expression::parse("foo(1)"), Error);
    try {
      Expression::parse("q + 1")({});
      FAIL("unknown variable accepted");
    } catch (const Error& err) {
      CHECK(err.kind() == ErrorKind::ParseError);
    }
  }
}

TEST_CASE("grid validation") {
  CHECK_NOTHROW(Grid::make(2 * std::numbers::pi, 32, 4));
  for (auto bad : {std::tuple{0.0, 32, 4}, std::tuple{1.0, 30, 4}, std::tuple{1.0, 16, 4}, std::tuple{1.0, 32, 0}}) {
    try {
      Grid::make(std::get<0>(bad), std::get<1>(bad), std::get<2>(bad));
      FAIL("invalid grid accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidGrid);
    }
  }
}

TEST_CASE("coefficient fields reject non-positive depth and viscosity") {
  const Grid g = Grid::make(2 * std::numbers::pi, 16, 2);
  try {
    sample_fields(g, {"sin(x)", ""}, {"1", ""}, {"0", ""});
    FAIL("b <= 0 accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveDepth);
  }
  try {
    sample_fields(g, {"1", ""}, {"cos(y)", ""}, {"0", ""});
    FAIL("nu <= 0 accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveViscosity);
  }
  const auto f = sample_fields(g, {"2+sin(x)", ""}, {"1", ""}, {"0.05", ""});
  CHECK(f.b_i == doctest::Approx(1.0));
  CHECK(f.b_s == doctest::Approx(3.0));
  CHECK(f.b_bar == doctest::Approx(1.0 / 3.0));
  CHECK(f.bx.maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tables round-trip through spectral interpolation") {
  const Grid g = Grid::make(2 * std::numbers::pi, 16, 2);
  const Grid fine = Grid::make(2 * std::numbers::pi, 32, 2);
  const auto expr = Expression::parse("2 + sin(x) * cos(2*y)");
  const std::string path = (std::filesystem::temp_directory_path() / "aimlake_table_test.csv").string();
  write_table(path, g, sample_expression(g, expr));
  const Eigen::ArrayXd back = read_table(path, fine);
  CHECK((back - sample_expression(fine, expr)).abs().maxCoeff() < 1e-12);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_table(path, g), Error);
}

TEST_CASE("fft round trip and frequency helpers") {
  Fft2 fft(8);
  CArray x(64), X, y;
  for (int i = 0; i < 64; ++i) x[i] = {std::sin(0.3 * i), std::cos(0.7 * i)};
  fft.forward(x, X);
  fft.backward(X, y);
  double err = 0;
  for (int i = 0; i < 64; ++i) err = std::max(err, std::abs(y[i] / 64.0 - x[i]));
  CHECK(err < 1e-14);
  CHECK(wrap_index(-1, 8) == 7);
  CHECK(signed_freq(7, 8) == -1);
  CHECK(signed_freq(4, 8) == -4);
}

TEST_CASE("weighted divergence and stream round trip") {
  const auto& lake = fixture::reference();
  const Eigen::VectorXd s = random_stream(lake.core->dim(), 1);
  const VelocityField u = lake.core->velocity(s);
  CHECK(u.constrained);
  CHECK(lake.core->weighted_divergence(u) < 1e-12);
  CHECK((lake.core->stream_of(u) - s).norm() < 1e-10 * s.norm());
}

TEST_CASE("weighted forms are symmetric and the trilinear form is skew") {
  const auto& lake = fixture::reference();
  const auto& f = lake.fields;
  double sym_inner = 0, sym_stress = 0, skew = 0;
  for (unsigned trial = 0; trial < 20; ++trial) {
    const VelocityField u = lake.core->velocity(random_stream(lake.core->dim(), 10 + trial));
    const VelocityField v = lake.core->velocity(random_stream(lake.core->dim(), 100 + trial));
    const VelocityField w = lake.core->velocity(random_stream(lake.core->dim(), 200 + trial));
    sym_inner = std::max(sym_inner, rel(inner_b(u, v, f), inner_b(v, u, f)));
    sym_stress = std::max(sym_stress, rel(stress_form(u, v, f), stress_form(v, u, f)));
    const double scale = std::abs(trilinear_b(u, v, w, f)) + std::abs(trilinear_b(u, w, w, f)) + 1e-300;
    skew = std::max(skew, std::abs(trilinear_b(u, v, v, f)) / scale);
  }
  CHECK(sym_inner < 1e-12);
  CHECK(sym_stress < 1e-12);
  CHECK(skew < 1e-10);
}

TEST_CASE("advection projects the trilinear form") {
  const auto& lake = fixture::reference();
  const Eigen::VectorXd a = random_stream(lake.core->dim(), 3), c = random_stream(lake.core->dim(), 4);
  const double direct = trilinear_b(lake.core->velocity(a), lake.core->velocity(a), lake.core->velocity(c), lake.fields);
  CHECK(lake.core->advection(a).dot(c) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("stream modes sit on the half lattice") {
  const auto modes = stream_modes(2);
  CHECK(modes.size() == 24);
  for (const auto& m : modes) CHECK((m.k1 > 0 || (m.k1 == 0 && m.k2 > 0)));
  CHECK(modes.front().k1 == 0);
  CHECK_FALSE(modes.front().sine);
  CHECK(modes[1].sine);
}

TEST_CASE("hashing and statistics helpers") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto fit = linear_fit({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r2 == doctest::Approx(1.0));
  CHECK(percentile({1, 2, 3, 4, 5}, 50) == doctest::Approx(3.0));
  CHECK(percentile({0, 10}, 99) == doctest::Approx(9.9));
  const auto ct = cumulative_trapezoid({0, 1, 2}, {0, 1, 2});
  CHECK(ct.back() == doctest::Approx(2.0));
}

TEST_CASE("parallel_for covers every index once") {
  set_worker_count(3);
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                    if (i == 7) throw Error(ErrorKind::BlowUp, "boom");
                  }),
                  Error);
  set_worker_count(0);
}
