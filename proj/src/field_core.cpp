#include "aimlake/field_core.hpp"

#include <cmath>

#include "aimlake/error.hpp"

namespace aimlake {

std::vector<StreamMode> stream_modes(int cutoff) {
  std::vector<StreamMode> modes;
  for (int k1 = 0; k1 <= cutoff; ++k1) {
    for (int k2 = -cutoff; k2 <= cutoff; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      modes.push_back({k1, k2, false});
      modes.push_back({k1, k2, true});
    }
  }
  return modes;
}

VelocityField VelocityField::from_samples(const Grid& grid, Eigen::ArrayXd u1, Eigen::ArrayXd u2) {
  if (u1.size() != grid.size() || u2.size() != grid.size()) {
    throw Error(ErrorKind::GridMismatch, "velocity samples do not match grid");
  }
  VelocityField v;
  v.grid = grid;
  v.u1 = std::move(u1);
  v.u2 = std::move(u2);
  return v;
}

VelocityField VelocityField::zero(const Grid& grid) {
  VelocityField v = from_samples(grid, Eigen::ArrayXd::Zero(grid.size()), Eigen::ArrayXd::Zero(grid.size()));
  v.u1x = v.u1y = v.u2x = v.u2y = Eigen::ArrayXd::Zero(grid.size());
  v.has_gradient = true;
  return v;
}

void VelocityField::ensure_gradient() {
  if (has_gradient) return;
  spectral_gradient(grid, u1, u1x, u1y);
  spectral_gradient(grid, u2, u2x, u2y);
  has_gradient = true;
}

cplx StreamState::psi_hat(int k1, int k2) const {
  const auto modes = stream_modes(grid.cutoff);
  bool conj = false;
  if (k1 < 0 || (k1 == 0 && k2 < 0)) {
    k1 = -k1;
    k2 = -k2;
    conj = true;
  }
  for (std::size_t j = 0; j + 1 < modes.size(); j += 2) {
    if (modes[j].k1 == k1 && modes[j].k2 == k2) {
      const cplx c(0.5 * coeffs(j), -0.5 * coeffs(j + 1));
      return conj ? std::conj(c) : c;
    }
  }
  return 0.0;
}

FieldCore::FieldCore(const CoefficientFields& fields)
    : fields_(std::make_shared<CoefficientFields>(fields)),
      modes_(stream_modes(fields.grid.cutoff)),
      fft_(std::make_shared<Fft2>(fields.grid.points)) {}

VelocityField FieldCore::velocity(const Eigen::VectorXd& stream) const {
  const Grid& g = grid();
  const int m = g.points;
  if (stream.size() != dim()) throw Error(ErrorKind::GridMismatch, "stream vector has wrong length");
  CArray p1(g.size(), 0.0), p2(g.size(), 0.0), p3(g.size(), 0.0);
  for (int j = 0; j < dim(); j += 2) {
    const StreamMode& md = modes_[j];
    const cplx psi(0.5 * stream(j), -0.5 * stream(j + 1));
    if (psi == 0.0) continue;
    const double w1 = g.wavenumber(md.k1), w2 = g.wavenumber(md.k2);
    const int pos = wrap_index(md.k1, m) * m + wrap_index(md.k2, m);
    const int neg = wrap_index(-md.k1, m) * m + wrap_index(-md.k2, m);
    const cplx I(0, 1);
    // Positive frequency and its conjugate partner, for each packed pair.
    const cplx px = I * w1 * psi, py = I * w2 * psi;
    const cplx pxx = -w1 * w1 * psi, pyy = -w2 * w2 * psi, pxy = -w1 * w2 * psi;
    p1[pos] += px + I * py;
    p1[neg] += std::conj(px) + I * std::conj(py);
    p2[pos] += pxx + I * pyy;
    p2[neg] += std::conj(pxx) + I * std::conj(pyy);
    p3[pos] += pxy;
    p3[neg] += std::conj(pxy);
  }
  CArray r1, r2, r3;
  fft_->backward(p1, r1);
  fft_->backward(p2, r2);
  fft_->backward(p3, r3);
  const auto& f = fields();
  VelocityField v;
  v.grid = g;
  v.u1.resize(g.size());
  v.u2.resize(g.size());
  v.u1x.resize(g.size());
  v.u1y.resize(g.size());
  v.u2x.resize(g.size());
  v.u2y.resize(g.size());
  for (int p = 0; p < g.size(); ++p) {
    const double psx = r1[p].real(), psy = r1[p].imag();
    const double psxx = r2[p].real(), psyy = r2[p].imag(), psxy = r3[p].real();
    const double ib = 1.0 / f.b(p), ib2 = ib * ib;
    v.u1(p) = -psy * ib;
    v.u2(p) = psx * ib;
    v.u1x(p) = -psxy * ib + psy * f.bx(p) * ib2;
    v.u1y(p) = -psyy * ib + psy * f.by(p) * ib2;
    v.u2x(p) = psxx * ib - psx * f.bx(p) * ib2;
    v.u2y(p) = psxy * ib - psx * f.by(p) * ib2;
  }
  v.has_gradient = true;
  v.constrained = true;
  return v;
}

Eigen::VectorXd FieldCore::project(const Eigen::ArrayXd& g1, const Eigen::ArrayXd& g2) const {
  const Grid& g = grid();
  const int m = g.points;
  CArray in(g.size()), spec;
  for (int p = 0; p < g.size(); ++p) in[p] = cplx(g1(p), g2(p));
  fft_->forward(in, spec);
  const double norm = 1.0 / (double(m) * m);
  const double area = g.area();
  Eigen::VectorXd out(dim());
  for (int j = 0; j < dim(); j += 2) {
    const StreamMode& md = modes_[j];
    const cplx gp = spec[wrap_index(md.k1, m) * m + wrap_index(md.k2, m)] * norm;
    const cplx gn = std::conj(spec[wrap_index(-md.k1, m) * m + wrap_index(-md.k2, m)] * norm);
    const cplx gh1 = 0.5 * (gp + gn);
    const cplx gh2 = (gp - gn) / cplx(0, 2);
    const cplx d = g.wavenumber(md.k2) * gh1 - g.wavenumber(md.k1) * gh2;
    out(j) = -area * d.imag();
    out(j + 1) = -area * d.real();
  }
  return out;
}

Eigen::VectorXd FieldCore::advection(const VelocityField& u, const VelocityField& w) const {
  const Eigen::ArrayXd g1 = u.u1 * w.u1x + u.u2 * w.u1y;
  const Eigen::ArrayXd g2 = u.u1 * w.u2x + u.u2 * w.u2y;
  return project(g1, g2);
}

Eigen::VectorXd FieldCore::advection(const Eigen::VectorXd& stream) const {
  const VelocityField u = velocity(stream);
  return advection(u, u);
}

Eigen::VectorXd FieldCore::stream_of(const VelocityField& u) const {
  const Grid& g = grid();
  require_same_grid(g, u.grid);
  const int m = g.points;
  CArray in(g.size()), spec;
  for (int p = 0; p < g.size(); ++p) in[p] = cplx(fields().b(p) * u.u1(p), fields().b(p) * u.u2(p));
  fft_->forward(in, spec);
  const double norm = 1.0 / (double(m) * m);
  Eigen::VectorXd out(dim());
  for (int j = 0; j < dim(); j += 2) {
    const StreamMode& md = modes_[j];
    const cplx gp = spec[wrap_index(md.k1, m) * m + wrap_index(md.k2, m)] * norm;
    const cplx gn = std::conj(spec[wrap_index(-md.k1, m) * m + wrap_index(-md.k2, m)] * norm);
    const cplx w1 = 0.5 * (gp + gn);
    const cplx w2 = (gp - gn) / cplx(0, 2);
    const double k1 = g.wavenumber(md.k1), k2 = g.wavenumber(md.k2);
    const cplx I(0, 1);
    const cplx psi = (-I * k1 * w2 + I * k2 * w1) / (k1 * k1 + k2 * k2);
    out(j) = 2.0 * psi.real();
    out(j + 1) = -2.0 * psi.imag();
  }
  return out;
}

double FieldCore::weighted_divergence(const VelocityField& u) const {
  const Grid& g = grid();
  const int m = g.points;
  CArray in(g.size()), spec;
  double rms = 0.0;
  for (int p = 0; p < g.size(); ++p) {
    const double a = fields().b(p) * u.u1(p), c = fields().b(p) * u.u2(p);
    in[p] = cplx(a, c);
    rms += a * a + c * c;
  }
  rms = std::sqrt(rms / g.size());
  fft_->forward(in, spec);
  const double norm = 1.0 / (double(m) * m);
  double worst = 0.0;
  for (const StreamMode& md : modes_) {
    const cplx gp = spec[wrap_index(md.k1, m) * m + wrap_index(md.k2, m)] * norm;
    const cplx gn = std::conj(spec[wrap_index(-md.k1, m) * m + wrap_index(-md.k2, m)] * norm);
    const cplx w1 = 0.5 * (gp + gn), w2 = (gp - gn) / cplx(0, 2);
    worst = std::max(worst, std::abs(g.wavenumber(md.k1) * w1 + g.wavenumber(md.k2) * w2));
  }
  return rms > 0.0 ? worst / rms : worst;
}

double inner_b(const VelocityField& u, const VelocityField& v, const CoefficientFields& fields) {
  require_same_grid(u.grid, v.grid);
  require_same_grid(u.grid, fields.grid);
  return u.grid.weight() * (fields.b * (u.u1 * v.u1 + u.u2 * v.u2)).sum();
}

double h1_seminorm_b(VelocityField u, const CoefficientFields& fields) {
  require_same_grid(u.grid, fields.grid);
  u.ensure_gradient();
  return u.grid.weight() *
         (fields.b * (u.u1x.square() + u.u1y.square() + u.u2x.square() + u.u2y.square())).sum();
}

double stress_form(VelocityField u, VelocityField v, const CoefficientFields& fields) {
  require_same_grid(u.grid, v.grid);
  require_same_grid(u.grid, fields.grid);
  u.ensure_gradient();
  v.ensure_gradient();
  // D = grad u + grad u^T - I div u is traceless symmetric: [[a, c], [c, -a]].
  const Eigen::ArrayXd a = u.u1x - u.u2y, c = u.u2x + u.u1y;
  const Eigen::ArrayXd a2 = v.u1x - v.u2y, c2 = v.u2x + v.u1y;
  return u.grid.weight() * (2.0 * fields.b * fields.nu * (a * a2 + c * c2)).sum();
}

double trilinear_b(const VelocityField& u, VelocityField w, const VelocityField& v,
                   const CoefficientFields& fields) {
  require_same_grid(u.grid, w.grid);
  require_same_grid(u.grid, v.grid);
  require_same_grid(u.grid, fields.grid);
  w.ensure_gradient();
  const Eigen::ArrayXd g1 = u.u1 * w.u1x + u.u2 * w.u1y;
  const Eigen::ArrayXd g2 = u.u1 * w.u2x + u.u2 * w.u2y;
  return u.grid.weight() * (fields.b * (g1 * v.u1 + g2 * v.u2)).sum();
}

double l2_norm_sq(const VelocityField& u) {
  return u.grid.weight() * (u.u1.square() + u.u2.square()).sum();
}

double h1_norm_sq(VelocityField u) {
  u.ensure_gradient();
  return u.grid.weight() * (u.u1x.square() + u.u1y.square() + u.u2x.square() + u.u2y.square()).sum();
}

VelocityField stream_to_velocity(const StreamState& s, const CoefficientFields& fields) {
  require_same_grid(s.grid, fields.grid);
  if (fields.b.minCoeff() <= 0.0) throw Error(ErrorKind::NonPositiveDepth, "b must be positive");
  return FieldCore(fields).velocity(s.coeffs);
}

StreamState velocity_to_stream(const VelocityField& u, const CoefficientFields& fields) {
  return StreamState{fields.grid, FieldCore(fields).stream_of(u)};
}

}  // namespace aimlake
