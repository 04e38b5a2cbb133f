#include "aimlake/oracle.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "aimlake/error.hpp"
#include "aimlake/field_core.hpp"
#include "aimlake/util.hpp"

namespace aimlake {

double gamma_quadrature() {
  // t = s^2 removes the endpoint singularity: gamma = 2 int_0^inf e^{-s^2} ds.
  boost::math::quadrature::exp_sinh<double> q;
  return 2.0 * q.integrate([](double s) { return std::exp(-s * s); }, 0.0,
                           std::numeric_limits<double>::infinity(), 1e-15);
}

namespace {

struct DirectVelocity {
  Eigen::ArrayXd u1, u2, u1x, u1y, u2x, u2y;
};

// psi and its derivatives by explicit trig sums, then u = b^{-1} grad-perp psi.
DirectVelocity direct_velocity(const Grid& grid, int mf, const Eigen::VectorXd& s, const Eigen::ArrayXd& b,
                               const Eigen::ArrayXd& bx, const Eigen::ArrayXd& by) {
  const auto modes = stream_modes(grid.cutoff);
  const int n = mf * mf;
  Eigen::ArrayXd px = Eigen::ArrayXd::Zero(n), py = px, pxx = px, pyy = px, pxy = px;
  const double h = grid.side_length / mf;
  for (std::size_t j = 0; j < modes.size(); j += 2) {
    const double a = s(j), c = s(j + 1);
    if (a == 0.0 && c == 0.0) continue;
    const double w1 = grid.wavenumber(modes[j].k1), w2 = grid.wavenumber(modes[j].k2);
    for (int i = 0; i < mf; ++i) {
      for (int k = 0; k < mf; ++k) {
        const double ph = w1 * i * h + w2 * k * h;
        const double cs = std::cos(ph), sn = std::sin(ph);
        // d/dphase of a cos + c sin = -a sin + c cos; second = -(a cos + c sin)
        const double d1 = -a * sn + c * cs, d2 = -(a * cs + c * sn);
        const int p = i * mf + k;
        px(p) += w1 * d1;
        py(p) += w2 * d1;
        pxx(p) += w1 * w1 * d2;
        pyy(p) += w2 * w2 * d2;
        pxy(p) += w1 * w2 * d2;
      }
    }
  }
  DirectVelocity v;
  const Eigen::ArrayXd ib = b.inverse(), ib2 = ib.square();
  v.u1 = -py * ib;
  v.u2 = px * ib;
  v.u1x = -pxy * ib + py * bx * ib2;
  v.u1y = -pyy * ib + py * by * ib2;
  v.u2x = pxx * ib - px * bx * ib2;
  v.u2y = pxy * ib - px * by * ib2;
  return v;
}

}  // namespace

double quadrature_trilinear(const Grid& grid, const Expression& bexpr, const Eigen::VectorXd& su,
                            const Eigen::VectorXd& sw, const Eigen::VectorXd& sv, int oversample) {
  const int mf = grid.points * oversample;
  const double L = grid.side_length, h = L / mf, fd = 1e-3;
  Eigen::ArrayXd b(mf * mf), bx(mf * mf), by(mf * mf);
  for (int i = 0; i < mf; ++i) {
    for (int k = 0; k < mf; ++k) {
      const double x = i * h, y = k * h;
      const int p = i * mf + k;
      b(p) = bexpr.at(x, y, L);
      bx(p) = (-bexpr.at(x + 2 * fd, y, L) + 8 * bexpr.at(x + fd, y, L) - 8 * bexpr.at(x - fd, y, L) +
               bexpr.at(x - 2 * fd, y, L)) / (12 * fd);
      by(p) = (-bexpr.at(x, y + 2 * fd, L) + 8 * bexpr.at(x, y + fd, L) - 8 * bexpr.at(x, y - fd, L) +
               bexpr.at(x, y - 2 * fd, L)) / (12 * fd);
    }
  }
  if ((b <= 0).any()) throw Error(ErrorKind::NonPositiveDepth, "b <= 0 on the oracle grid");
  const DirectVelocity u = direct_velocity(grid, mf, su, b, bx, by);
  const DirectVelocity w = direct_velocity(grid, mf, sw, b, bx, by);
  const DirectVelocity v = direct_velocity(grid, mf, sv, b, bx, by);
  const Eigen::ArrayXd g1 = u.u1 * w.u1x + u.u2 * w.u1y;
  const Eigen::ArrayXd g2 = u.u1 * w.u2x + u.u2 * w.u2y;
  return h * h * (b * (g1 * v.u1 + g2 * v.u2)).sum();
}

Eigen::MatrixXd dense_semigroup(const ConstrainedBasis& basis, double t) {
  if (t < 0) throw Error(ErrorKind::NegativeTime, "t = " + std::to_string(t));
  const Eigen::MatrixXd gen = -basis.gram.ldlt().solve(basis.stiffness) * t;
  return gen.exp();
}

double semigroup_oracle_error(const ConstrainedBasis& basis, double t) {
  const Eigen::MatrixXd dense = dense_semigroup(basis, t);
  const Eigen::VectorXd decay = (-basis.eigenvalues.array() * t).exp().matrix();
  const Eigen::MatrixXd spectral = basis.eigenvectors * decay.asDiagonal() * basis.eigenvectors.transpose() * basis.gram;
  return (dense - spectral).cwiseAbs().maxCoeff() / dense.cwiseAbs().maxCoeff();
}

double toy_slave_manifold(const TwoModeToy& toy, double y) {
  // Balance: lambda2 z + eta2 z + coupling y z + quad y^2 = f2.
  const double lam = toy.lambda2();
  if (!(lam > 0)) throw Error(ErrorKind::SingularOperator, "toy lambda2 must be positive");
  double z = 0.0;
  const double omega = 0.5;
  for (int it = 0; it < 100000; ++it) {
    const double g = (toy.f2() - toy.eta2() * z - toy.coupling() * y * z - toy.quad() * y * y) / lam;
    const double next = (1 - omega) * z + omega * g;
    if (std::abs(next - z) <= 1e-12 * std::max(1.0, std::abs(z)) * 1e-2) return next;
    z = next;
  }
  throw Error(ErrorKind::NoConvergence, "toy balance iteration did not converge");
}

std::string OracleStore::key_for(const std::string& description) { return sha256_hex(description).substr(0, 24); }

std::optional<nlohmann::json> OracleStore::get(const std::string& key) const {
  const std::filesystem::path p = std::filesystem::path(dir_) / (key + ".json");
  std::ifstream in(p);
  if (!in) return std::nullopt;
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, p.string() + ": " + e.what());
  }
}

void OracleStore::put(const std::string& key, const nlohmann::json& value) const {
  std::filesystem::create_directories(dir_);
  const std::filesystem::path p = std::filesystem::path(dir_) / (key + ".json");
  std::ofstream out(p);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + p.string());
  out << value.dump(2) << '\n';
}

}  // namespace aimlake
