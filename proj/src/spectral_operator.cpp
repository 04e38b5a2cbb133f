#include "aimlake/spectral_operator.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "aimlake/error.hpp"
#include "aimlake/util.hpp"

namespace aimlake {

FieldScalars scalars_of(const CoefficientFields& f) {
  return FieldScalars{f.b_i, f.b_s, f.b_bar, f.nu_i, f.eta_bar};
}

int ConstrainedBasis::dominant_mode(int k) const {
  Eigen::Index idx = 0;
  eigenvectors.col(k).cwiseAbs().maxCoeff(&idx);
  return static_cast<int>(idx);
}

std::string basis_hash(const CoefficientFields& fields) {
  std::string bytes = "aimlake-basis-v1";
  append_bytes(bytes, fields.grid.side_length);
  append_bytes(bytes, fields.grid.points);
  append_bytes(bytes, fields.grid.cutoff);
  append_doubles(bytes, fields.b.data(), fields.b.size());
  append_doubles(bytes, fields.nu.data(), fields.nu.size());
  append_doubles(bytes, fields.eta.data(), fields.eta.size());
  return sha256_hex(bytes);
}

namespace {

struct Columns {
  Eigen::MatrixXd u1, u2, u1x, u1y, u2x, u2y;
};

// Basis velocities u_j = b^-1 grad-perp phi_j and their gradients, one column per mode.
Columns basis_columns(const CoefficientFields& f, const std::vector<StreamMode>& modes) {
  const Grid& g = f.grid;
  const int n = g.size(), d = static_cast<int>(modes.size()), m = g.points;
  Columns c;
  c.u1.resize(n, d);
  c.u2.resize(n, d);
  c.u1x.resize(n, d);
  c.u1y.resize(n, d);
  c.u2x.resize(n, d);
  c.u2y.resize(n, d);
  for (int j = 0; j < d; ++j) {
    const double w1 = g.wavenumber(modes[j].k1), w2 = g.wavenumber(modes[j].k2);
    for (int i = 0; i < m; ++i) {
      for (int l = 0; l < m; ++l) {
        const int p = i * m + l;
        const double th = w1 * g.coord(i) + w2 * g.coord(l);
        const double cs = std::cos(th), sn = std::sin(th);
        double px, py, pxx, pxy, pyy;
        if (!modes[j].sine) {
          px = -w1 * sn;
          py = -w2 * sn;
          pxx = -w1 * w1 * cs;
          pxy = -w1 * w2 * cs;
          pyy = -w2 * w2 * cs;
        } else {
          px = w1 * cs;
          py = w2 * cs;
          pxx = -w1 * w1 * sn;
          pxy = -w1 * w2 * sn;
          pyy = -w2 * w2 * sn;
        }
        const double ib = 1.0 / f.b(p), ib2 = ib * ib;
        c.u1(p, j) = -py * ib;
        c.u2(p, j) = px * ib;
        c.u1x(p, j) = -pxy * ib + py * f.bx(p) * ib2;
        c.u1y(p, j) = -pyy * ib + py * f.by(p) * ib2;
        c.u2x(p, j) = pxx * ib - px * f.bx(p) * ib2;
        c.u2y(p, j) = pxy * ib - px * f.by(p) * ib2;
      }
    }
  }
  return c;
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& a, const Eigen::ArrayXd& w, const Eigen::MatrixXd& b) {
  return (a.array().colwise() * w).matrix().transpose() * b;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Within each cluster of equal eigenvalues, replace the solver's arbitrary
// basis by gram-orthonormalized projections of the stream modes taken in
// lexicographic order, so P_n is reproducible.
void canonicalize_clusters(ConstrainedBasis& basis) {
  const int d = basis.dim;
  const Eigen::VectorXd& lam = basis.eigenvalues;
  int start = 0;
  while (start < d) {
    int end = start + 1;
    while (end < d && lam(end) - lam(start) <= 1e-10 * std::max(1.0, std::abs(lam(start)))) ++end;
    const int size = end - start;
    if (size > 1) {
      const Eigen::MatrixXd vc = basis.eigenvectors.middleCols(start, size);
      Eigen::MatrixXd accepted(d, size);
      int count = 0;
      for (int j = 0; j < d && count < size; ++j) {
        Eigen::VectorXd p = vc * (vc.transpose() * basis.gram.col(j));
        const double before = std::sqrt(p.dot(basis.gram * p));
        if (before < 1e-6) continue;
        for (int q = 0; q < count; ++q) p -= accepted.col(q) * accepted.col(q).dot(basis.gram * p);
        const double after = std::sqrt(p.dot(basis.gram * p));
        if (after < 1e-4 * before) continue;
        accepted.col(count++) = p / after;
      }
      if (count == size) {
        basis.eigenvectors.middleCols(start, size) = accepted;
        const double mean = lam.segment(start, size).mean();
        basis.eigenvalues.segment(start, size).setConstant(mean);
      }
      for (int q = start + 1; q < end; ++q) basis.zero_gap_cuts.push_back(q);
    }
    start = end;
  }
}

void finish_basis(ConstrainedBasis& b) {
  const Eigen::MatrixXd& v = b.eigenvectors;
  b.metric_v_e = symmetrize(v.transpose() * b.h1b * v);
  b.metric_l2_e = symmetrize(v.transpose() * b.l2 * v);
  b.metric_h1_e = symmetrize(v.transpose() * b.h1 * v);
  b.friction_e = symmetrize(v.transpose() * b.friction * v);
}

}  // namespace

ConstrainedBasis build_basis(const CoefficientFields& fields) {
  ConstrainedBasis basis;
  basis.grid = fields.grid;
  basis.modes = stream_modes(fields.grid.cutoff);
  basis.dim = static_cast<int>(basis.modes.size());
  basis.scalars = scalars_of(fields);
  basis.hash = basis_hash(fields);

  const Columns c = basis_columns(fields, basis.modes);
  const double w = fields.grid.weight();
  const Eigen::ArrayXd wb = w * fields.b;
  const Eigen::ArrayXd wbnu2 = 2.0 * w * fields.b * fields.nu;
  const Eigen::ArrayXd wbeta = w * fields.b * fields.eta;
  const Eigen::ArrayXd w1 = Eigen::ArrayXd::Constant(fields.grid.size(), w);

  basis.gram = symmetrize(weighted_gram(c.u1, wb, c.u1) + weighted_gram(c.u2, wb, c.u2));
  const Eigen::MatrixXd a = c.u1x - c.u2y, cc = c.u2x + c.u1y;
  basis.stiffness = symmetrize(weighted_gram(a, wbnu2, a) + weighted_gram(cc, wbnu2, cc));
  basis.h1b = symmetrize(weighted_gram(c.u1x, wb, c.u1x) + weighted_gram(c.u1y, wb, c.u1y) +
                         weighted_gram(c.u2x, wb, c.u2x) + weighted_gram(c.u2y, wb, c.u2y));
  basis.l2 = symmetrize(weighted_gram(c.u1, w1, c.u1) + weighted_gram(c.u2, w1, c.u2));
  basis.h1 = symmetrize(weighted_gram(c.u1x, w1, c.u1x) + weighted_gram(c.u1y, w1, c.u1y) +
                        weighted_gram(c.u2x, w1, c.u2x) + weighted_gram(c.u2y, w1, c.u2y));
  basis.friction = symmetrize(weighted_gram(c.u1, wbeta, c.u1) + weighted_gram(c.u2, wbeta, c.u2));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram_eig(basis.gram, Eigen::EigenvaluesOnly);
  const double gmin = gram_eig.eigenvalues().minCoeff(), gmax = gram_eig.eigenvalues().maxCoeff();
  basis.gram_condition = gmin > 0 ? gmax / gmin : INFINITY;
  if (!(basis.gram_condition <= 1e12)) {
    throw Error(ErrorKind::SingularGram, "gram condition number " + std::to_string(basis.gram_condition));
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(basis.stiffness, basis.gram,
                                                                Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::SingularGram, "generalized eigensolve failed");
  basis.eigenvalues = es.eigenvalues();
  basis.eigenvectors = es.eigenvectors();
  canonicalize_clusters(basis);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> pe(basis.h1b, basis.gram, Eigen::EigenvaluesOnly);
  basis.poincare = 1.0 / std::sqrt(pe.eigenvalues().minCoeff());
  finish_basis(basis);
  return basis;
}

namespace {
constexpr char kMagic[8] = {'A', 'I', 'M', 'L', 'B', 'A', 'S', '1'};

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  // Column-major doubles, little-endian host layout.
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}
void read_matrix(std::ifstream& in, Eigen::MatrixXd& m, int rows, int cols) {
  m.resize(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}
template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void save_basis(const ConstrainedBasis& b, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write basis cache " + tmp);
    out.write(kMagic, 8);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.hash.size()));
    out.write(b.hash.data(), static_cast<std::streamsize>(b.hash.size()));
    put(out, b.grid.side_length);
    put<std::int32_t>(out, b.grid.points);
    put<std::int32_t>(out, b.grid.cutoff);
    put(out, b.scalars);
    put<std::int32_t>(out, b.dim);
    put(out, b.poincare);
    put(out, b.gram_condition);
    for (const auto* m : {&b.gram, &b.stiffness, &b.h1b, &b.l2, &b.h1, &b.friction, &b.eigenvectors}) {
      write_matrix(out, *m);
    }
    write_matrix(out, b.eigenvalues);
    put<std::int32_t>(out, static_cast<std::int32_t>(b.zero_gap_cuts.size()));
    for (int q : b.zero_gap_cuts) put<std::int32_t>(out, q);
  }
  std::filesystem::rename(tmp, path);
}

ConstrainedBasis load_basis(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read basis cache " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw Error(ErrorKind::IoError, path + ": not a basis cache");
  ConstrainedBasis b;
  b.hash.resize(get<std::uint32_t>(in));
  in.read(b.hash.data(), static_cast<std::streamsize>(b.hash.size()));
  const double l = get<double>(in);
  const int m = get<std::int32_t>(in), k = get<std::int32_t>(in);
  b.grid = Grid{l, m, k};
  b.scalars = get<FieldScalars>(in);
  b.dim = get<std::int32_t>(in);
  b.poincare = get<double>(in);
  b.gram_condition = get<double>(in);
  b.modes = stream_modes(k);
  if (static_cast<int>(b.modes.size()) != b.dim) throw Error(ErrorKind::IoError, path + ": corrupt header");
  for (auto* mat : {&b.gram, &b.stiffness, &b.h1b, &b.l2, &b.h1, &b.friction, &b.eigenvectors}) {
    read_matrix(in, *mat, b.dim, b.dim);
  }
  Eigen::MatrixXd ev;
  read_matrix(in, ev, b.dim, 1);
  b.eigenvalues = ev.col(0);
  const int gaps = get<std::int32_t>(in);
  for (int q = 0; q < gaps; ++q) b.zero_gap_cuts.push_back(get<std::int32_t>(in));
  if (!in) throw Error(ErrorKind::IoError, path + ": truncated basis cache");
  finish_basis(b);
  return b;
}

ConstrainedBasis load_or_build_basis(const CoefficientFields& fields, const std::string& dir) {
  if (dir.empty()) return build_basis(fields);
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + basis_hash(fields) + ".basis";
  if (std::filesystem::exists(path)) {
    ConstrainedBasis b = load_basis(path);
    if (b.hash == basis_hash(fields)) return b;
  }
  ConstrainedBasis b = build_basis(fields);
  save_basis(b, path);
  return b;
}

double norm_h(const SpectralState& s) { return s.coeffs.norm(); }

double norm_a(const ConstrainedBasis& basis, const SpectralState& s) {
  return std::sqrt((basis.eigenvalues.array() * s.coeffs.array().square()).sum());
}

double norm_v(const ConstrainedBasis& basis, const Eigen::VectorXd& c) {
  return std::sqrt(std::max(0.0, c.dot(basis.metric_v_e * c)));
}

double norm_v(const ConstrainedBasis& basis, const SpectralState& s) { return norm_v(basis, s.coeffs); }

SpectralState project(const SpectralState& s, int n, Part part) {
  const int d = static_cast<int>(s.coeffs.size());
  if (n < 0 || n > d) throw Error(ErrorKind::IndexOutOfRange, "n = " + std::to_string(n));
  SpectralState out = s;
  if (part == Part::Low) {
    out.coeffs.tail(d - n).setZero();
  } else {
    out.coeffs.head(n).setZero();
  }
  return out;
}

SpectralState semigroup_apply(const ConstrainedBasis& basis, const SpectralState& s, double t) {
  if (t < 0) throw Error(ErrorKind::NegativeTime, "t = " + std::to_string(t));
  SpectralState out = s;
  out.coeffs = (s.coeffs.array() * (-basis.eigenvalues.array() * t).exp()).matrix();
  return out;
}

SpectralState apply_A(const ConstrainedBasis& basis, const SpectralState& s) {
  SpectralState out = s;
  out.coeffs = (s.coeffs.array() * basis.eigenvalues.array()).matrix();
  return out;
}

SpectralState apply_A_inverse(const ConstrainedBasis& basis, const SpectralState& s) {
  if (basis.eigenvalues.minCoeff() <= 0.0) throw Error(ErrorKind::SingularOperator, "non-positive eigenvalue");
  SpectralState out = s;
  out.coeffs = (s.coeffs.array() / basis.eigenvalues.array()).matrix();
  return out;
}

Eigen::VectorXd to_stream(const ConstrainedBasis& basis, const Eigen::VectorXd& c) {
  return basis.eigenvectors * c;
}

VelocityField to_velocity(const FieldCore& core, const ConstrainedBasis& basis, const Eigen::VectorXd& c) {
  return core.velocity(to_stream(basis, c));
}

BoundCheck semigroup_bound_check(const ConstrainedBasis& basis, int n, double t) {
  const int d = basis.dim;
  if (n < 0 || n >= d) throw Error(ErrorKind::IndexOutOfRange, "n = " + std::to_string(n));
  const int h = d - n;
  const Eigen::VectorXd decay = (-basis.eigenvalues.tail(h).array() * t).exp().matrix();
  const Eigen::MatrixXd m = decay.asDiagonal() * basis.metric_v_e.bottomRightCorner(h, h) * decay.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const auto& s = basis.scalars;
  const double lam = basis.eigenvalues(n);
  BoundCheck c;
  c.name = "semigroup_H_to_V";
  c.n = n;
  c.t = t;
  c.measured = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  c.bound = std::pow(s.b_bar, -0.5) * (std::pow(s.nu_i * t, -0.5) + std::sqrt(lam)) * std::exp(-lam * t);
  c.pass = c.measured <= c.bound * (1 + 1e-12);
  return c;
}

std::vector<BoundCheck> resolvent_bounds_audit(const ConstrainedBasis& basis, int n, double tau) {
  if (n < 1 || n >= basis.dim) throw Error(ErrorKind::IndexOutOfRange, "n = " + std::to_string(n));
  const auto& s = basis.scalars;
  const double lam_n = basis.eigenvalues(n - 1);
  const Eigen::MatrixXd mv = basis.metric_v_e.topLeftCorner(n, n);
  const Eigen::VectorXd amp = (1.0 + tau * basis.eigenvalues.head(n).array()).matrix();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(amp.asDiagonal() * mv * amp.asDiagonal(), mv,
                                                                Eigen::EigenvaluesOnly);
  const double op_norm = std::sqrt(es.eigenvalues().maxCoeff());
  std::vector<BoundCheck> out;
  BoundCheck r1;
  r1.name = "resolvent_V_norm_vs_linear";
  r1.n = n;
  r1.tau = tau;
  r1.measured = op_norm;
  r1.bound = 1.0 + tau * lam_n;
  r1.pass = r1.measured <= r1.bound * (1 + 1e-12);
  out.push_back(r1);
  BoundCheck r2 = r1;
  r2.name = "resolvent_V_norm_vs_exp";
  r2.bound = std::exp(tau * lam_n);
  r2.pass = r2.measured <= r2.bound * (1 + 1e-12);
  out.push_back(r2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> emb(mv, Eigen::EigenvaluesOnly);
  BoundCheck r3;
  r3.name = "embedding_PnH_to_PnV";
  r3.n = n;
  r3.measured = std::sqrt(emb.eigenvalues().maxCoeff());
  r3.bound = std::pow(s.b_bar * s.nu_i / lam_n, -0.5);
  r3.pass = r3.measured <= r3.bound * (1 + 1e-12);
  out.push_back(r3);
  return out;
}

WeylFit weyl_fit(const ConstrainedBasis& basis) {
  const int d = basis.dim;
  const int lo = std::max(1, d / 4), hi = std::max(lo + 2, 3 * d / 4);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  int cnt = 0;
  for (int n = lo; n <= hi && n <= d; ++n) {
    const double x = n, y = basis.eigenvalues(n - 1);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++cnt;
  }
  const double cov = sxy - sx * sy / cnt, vx = sxx - sx * sx / cnt, vy = syy - sy * sy / cnt;
  WeylFit f;
  f.slope = cov / vx;
  f.r2 = vy > 0 ? cov * cov / (vx * vy) : 1.0;
  return f;
}

}  // namespace aimlake
