#include "aimlake/decay.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "aimlake/error.hpp"
#include "aimlake/fft.hpp"
#include "aimlake/stats.hpp"
#include "aimlake/util.hpp"

namespace aimlake {

std::vector<std::size_t> dyadic_indices(const std::vector<double>& times, int levels) {
  std::vector<std::size_t> idx{0};
  if (times.size() < 2) return idx;
  const double t0 = times.front(), T = times.back() - t0;
  for (int j = levels - 1; j >= 0; --j) {
    const double target = t0 + T * std::ldexp(1.0, -j);
    const auto it = std::lower_bound(times.begin(), times.end(), target - 1e-12);
    std::size_t k = std::min<std::size_t>(it - times.begin(), times.size() - 1);
    if (k > 0 && std::abs(times[k - 1] - target) < std::abs(times[k] - target)) --k;
    if (k > idx.back()) idx.push_back(k);
  }
  return idx;
}

namespace {

double quad_form(const Eigen::MatrixXd& m, const Eigen::VectorXd& c) { return c.dot(m * c); }

std::vector<double> cumulative(const std::vector<double>& t, const std::vector<double>& y) {
  return cumulative_trapezoid(t, y);
}

ResidualReport finish(ResidualReport r, double tol_rel) {
  r.tolerance = tol_rel * r.initial_energy;
  r.min_residual = r.pairs.empty() ? 0.0 : r.pairs.front().residual;
  for (const auto& p : r.pairs) r.min_residual = std::min(r.min_residual, p.residual);
  r.pass = r.min_residual >= -r.tolerance;
  return r;
}

}  // namespace

ResidualReport strong_energy_residual(const LakeModel& model, const TrajectoryRecord& traj, double tol_rel) {
  const auto& basis = model.basis();
  const auto& sc = basis.scalars;
  const std::size_t n = traj.times.size();
  std::vector<double> e(n), d(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = traj.states[i];
    e[i] = quad_form(basis.metric_l2_e, c);
    d[i] = quad_form(basis.metric_h1_e, c);
    w[i] = c.dot(model.forcing(traj.times[i]));
  }
  const auto cd = cumulative(traj.times, d), cw = cumulative(traj.times, w);
  ResidualReport r;
  r.initial_energy = sc.b_s * e[0];
  const auto idx = dyadic_indices(traj.times);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const std::size_t s = idx[a], t = idx[b];
      const double R = sc.b_s * e[s] + 2.0 * (cw[t] - cw[s]) - sc.b_i * e[t] -
                       2.0 * sc.nu_i * sc.b_i * (cd[t] - cd[s]);
      r.pairs.push_back({traj.times[s], traj.times[t], R});
    }
  }
  return finish(std::move(r), tol_rel);
}

Mollifier mollifier_from(const std::string& name) {
  if (name == "Identity") return Mollifier::Identity;
  if (name == "Gaussian") return Mollifier::Gaussian;
  if (name == "HeatEvolved") return Mollifier::HeatEvolved;
  if (name == "DeltaMinusGaussian") return Mollifier::DeltaMinusGaussian;
  throw Error(ErrorKind::UnsupportedMollifier, "'" + name + "'");
}

std::string to_string(Mollifier m) {
  switch (m) {
    case Mollifier::Identity: return "Identity";
    case Mollifier::Gaussian: return "Gaussian";
    case Mollifier::HeatEvolved: return "HeatEvolved";
    case Mollifier::DeltaMinusGaussian: return "DeltaMinusGaussian";
  }
  return "Identity";
}

double WeightProfile::Z(double t) const { return alpha == 0.0 ? 1.0 : std::pow(1.0 + t, alpha); }
double WeightProfile::dZ(double t) const { return alpha == 0.0 ? 0.0 : alpha * std::pow(1.0 + t, alpha - 1.0); }

double mollifier_symbol(Mollifier m, double xi2, double width) {
  switch (m) {
    case Mollifier::Identity: return 1.0;
    case Mollifier::Gaussian:
    case Mollifier::HeatEvolved: return std::exp(-xi2);
    case Mollifier::DeltaMinusGaussian: return std::exp(-xi2 / (width * width)) - std::exp(-xi2);
  }
  return 1.0;
}

namespace {

// |xi|^2 on the FFT layout.
Eigen::ArrayXd xi_squared(const Grid& g) {
  const int m = g.points;
  Eigen::ArrayXd x2(g.size());
  for (int i = 0; i < m; ++i) {
    const double k1 = g.wavenumber(signed_freq(i, m));
    for (int j = 0; j < m; ++j) {
      const double k2 = g.wavenumber(signed_freq(j, m));
      x2(i * m + j) = k1 * k1 + k2 * k2;
    }
  }
  return x2;
}

CArray pack(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  CArray out(a.size());
  for (Eigen::Index p = 0; p < a.size(); ++p) out[p] = cplx(a(p), b(p));
  return out;
}

// Per-record spectra shared by every pair.
struct RecordSpectra {
  CArray P;          // FFT(u1 + i u2)
  Eigen::ArrayXd S;  // |FFT(u1x + i u2x)|^2 + |FFT(u1y + i u2y)|^2
  CArray Nb;         // FFT(b (u . grad u)) packed
};

}  // namespace

void gaussian_mollify(const Grid& grid, const Eigen::ArrayXd& f1, const Eigen::ArrayXd& f2, Eigen::ArrayXd& g1,
                      Eigen::ArrayXd& g2) {
  Fft2 fft(grid.points);
  CArray spec, back;
  fft.forward(pack(f1, f2), spec);
  const Eigen::ArrayXd x2 = xi_squared(grid);
  for (int p = 0; p < grid.size(); ++p) spec[p] *= std::exp(-x2(p));
  fft.backward(spec, back);
  const double norm = 1.0 / grid.size();
  g1.resize(grid.size());
  g2.resize(grid.size());
  for (int p = 0; p < grid.size(); ++p) {
    g1(p) = back[p].real() * norm;
    g2(p) = back[p].imag() * norm;
  }
}

ResidualReport generalized_energy_residual(const LakeModel& model, const TrajectoryRecord& traj,
                                           const GeneralizedOptions& opt) {
  const Grid& g = model.core().grid();
  const auto& fields = model.core().fields();
  const auto& sc = model.basis().scalars;
  const int size = g.size();
  const double c0 = g.area() / (double(size) * size);  // L^2 / M^4
  const std::size_t n = traj.times.size();
  const Eigen::ArrayXd x2 = xi_squared(g);
  Fft2 fft(g.points);

  std::vector<RecordSpectra> rs(n);
  parallel_for(n, [&](std::size_t i) {
    VelocityField u = model.velocity(traj.states[i]);
    fft.forward(pack(u.u1, u.u2), rs[i].P);
    CArray q1, q2;
    fft.forward(pack(u.u1x, u.u2x), q1);
    fft.forward(pack(u.u1y, u.u2y), q2);
    rs[i].S.resize(size);
    for (int p = 0; p < size; ++p) rs[i].S(p) = std::norm(q1[p]) + std::norm(q2[p]);
    const Eigen::ArrayXd n1 = u.u1 * u.u1x + u.u2 * u.u1y;
    const Eigen::ArrayXd n2 = u.u1 * u.u2x + u.u2 * u.u2y;
    fft.forward(pack(fields.b * n1, fields.b * n2), rs[i].Nb);
  });
  CArray Fb;
  const Forcing& forcing = model.forcing_model();
  fft.forward(pack(fields.b * forcing.f1(), fields.b * forcing.f2()), Fb);

  const double c_heat = sc.nu_i * sc.b_i / sc.b_s;
  const bool heat = opt.mollifier == Mollifier::HeatEvolved;

  // Integrand values at record i for the symbol psi(tau) = m, psi' = dm.
  struct Terms {
    double X = 0, Yp = 0, Gd = 0, Nl = 0, W = 0;
  };
  auto terms = [&](std::size_t i, double t_end) {
    Terms out;
    const auto& r = rs[i];
    const double tau = traj.times[i];
    const double lag = heat ? t_end - tau : 0.0;
    CArray mp, dmp;
    if (heat) {
      mp.resize(size);
      dmp.resize(size);
    }
    for (int p = 0; p < size; ++p) {
      double m = mollifier_symbol(opt.mollifier, x2(p), opt.delta_width);
      if (heat) m *= std::exp(-c_heat * lag * x2(p));
      const double m2 = m * m;
      out.X += m2 * std::norm(r.P[p]);
      out.Gd += m2 * r.S(p);
      out.Nl += m2 * (std::conj(r.Nb[p]) * r.P[p]).real();
      out.W += m * (std::conj(Fb[p]) * r.P[p]).real();
      if (heat) {
        mp[p] = m * r.P[p];
        dmp[p] = c_heat * x2(p) * m * r.P[p];
      }
    }
    out.X *= c0;
    out.Gd *= c0;
    out.Nl *= c0;
    out.W *= c0 * forcing.profile(tau);
    if (heat) {
      CArray a, b;
      fft.backward(dmp, a);
      fft.backward(mp, b);
      double acc = 0.0;
      for (int p = 0; p < size; ++p) acc += fields.b(p) * (a[p].real() * b[p].real() + a[p].imag() * b[p].imag());
      out.Yp = acc * g.weight() / (double(size) * size);
    }
    return out;
  };

  const WeightProfile& Z = opt.weight;
  auto residual = [&](const std::vector<Terms>& tm, std::size_t s, std::size_t t) {
    // Trapezoid over records s..t of each integrand.
    double iz = 0, iy = 0, ig = 0, in = 0, iw = 0;
    for (std::size_t k = s; k < t; ++k) {
      const double h = traj.times[k + 1] - traj.times[k];
      const double ta = traj.times[k], tb = traj.times[k + 1];
      const Terms& A = tm[k];
      const Terms& B = tm[k + 1];
      iz += 0.5 * h * (Z.dZ(ta) * A.X + Z.dZ(tb) * B.X);
      iy += 0.5 * h * (Z.Z(ta) * A.Yp + Z.Z(tb) * B.Yp);
      ig += 0.5 * h * (Z.Z(ta) * A.Gd + Z.Z(tb) * B.Gd);
      in += 0.5 * h * (Z.Z(ta) * A.Nl + Z.Z(tb) * B.Nl);
      iw += 0.5 * h * (Z.Z(ta) * A.W + Z.Z(tb) * B.W);
    }
    const double ts = traj.times[s], te = traj.times[t];
    return sc.b_s * Z.Z(ts) * tm[s].X + sc.b_s * iz + 2.0 * iy - 2.0 * sc.nu_i * sc.b_i * ig + 2.0 * in +
           2.0 * iw - Z.Z(te) * sc.b_i * tm[t].X;
  };

  ResidualReport r;
  r.initial_energy = sc.b_s * c0 * [&] {
    double e = 0;
    for (int p = 0; p < size; ++p) e += std::norm(rs[0].P[p]);
    return e;
  }();
  const auto idx = dyadic_indices(traj.times, opt.dyadic_levels);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) pairs.emplace_back(idx[a], idx[b]);
  r.pairs.resize(pairs.size());

  if (!heat) {
    std::vector<Terms> tm(n);
    parallel_for(n, [&](std::size_t i) { tm[i] = terms(i, 0.0); });
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [s, t] = pairs[k];
      r.pairs[k] = {traj.times[s], traj.times[t], residual(tm, s, t)};
    }
  } else {
    // The symbol depends on the pair's end time; recompute per pair.
    parallel_for(pairs.size(), [&](std::size_t k) {
      const auto [s, t] = pairs[k];
      std::vector<Terms> tm(n);
      for (std::size_t i = s; i <= t; ++i) tm[i] = terms(i, traj.times[t]);
      r.pairs[k] = {traj.times[s], traj.times[t], residual(tm, s, t)};
    });
  }
  return finish(std::move(r), opt.tol_rel);
}

SplitEnergy fourier_split(const Grid& grid, const Eigen::ArrayXd& u1, const Eigen::ArrayXd& u2) {
  Fft2 fft(grid.points);
  CArray P;
  fft.forward(pack(u1, u2), P);
  const Eigen::ArrayXd x2 = xi_squared(grid);
  const double c0 = grid.area() / (double(grid.size()) * grid.size());
  SplitEnergy s;
  for (int p = 0; p < grid.size(); ++p) {
    const double a = std::norm(P[p]);
    const double phi = std::exp(-x2(p));
    s.total += a;
    s.low += phi * phi * a;
    s.high += (1.0 - phi) * (1.0 - phi) * a;
  }
  s.total *= c0;
  s.low *= c0;
  s.high *= c0;
  s.physical = grid.weight() * (u1.square() + u2.square()).sum();
  return s;
}

SplitEnergy fourier_split(const LakeModel& model, const Eigen::VectorXd& c) {
  const VelocityField u = model.velocity(c);
  return fourier_split(model.core().grid(), u.u1, u.u2);
}

SplittingSchedule splitting_schedule(double alpha, double b_s) {
  if (!(alpha > 0)) throw Error(ErrorKind::ConfigError, "decay.alpha must be positive");
  if (!(b_s > 0)) throw Error(ErrorKind::NonPositiveDepth, "b_s must be positive");
  return SplittingSchedule{alpha, b_s};
}

double SplittingSchedule::Z(double t) const { return std::pow(1.0 + t, alpha); }
double SplittingSchedule::dZ(double t) const { return alpha * std::pow(1.0 + t, alpha - 1.0); }
double SplittingSchedule::G2(double t) const { return alpha / (2.0 * b_s * (t + 1.0)); }

double log_schedule_error(double t) {
  using boost::math::quadrature::gauss_kronrod;
  const double e = std::numbers::e;
  const double integral = gauss_kronrod<double, 61>::integrate(
      [e](double s) { return 1.0 / ((e + s) * std::log(e + s)); }, 0.0, t, 15, 1e-14);
  const double l = std::log(e + t);
  return std::abs(std::exp(2.0 * integral) - l * l) / (l * l);
}

Eigen::VectorXd concentrated_state(const LakeModel& model, double width) {
  const Grid& g = model.core().grid();
  const int m = g.points;
  const double L = g.side_length, c = 0.5 * L;
  Eigen::ArrayXd psi(g.size());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double dx = g.coord(i) - c, dy = g.coord(j) - c;
      psi(i * m + j) = std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
    }
  }
  Fft2 fft(m);
  CArray spec;
  fft.forward(pack(psi, Eigen::ArrayXd::Zero(g.size())), spec);
  const auto modes = stream_modes(g.cutoff);
  Eigen::VectorXd s(modes.size());
  for (std::size_t j = 0; j < modes.size(); j += 2) {
    const cplx h = spec[wrap_index(modes[j].k1, m) * m + wrap_index(modes[j].k2, m)] / double(g.size());
    s(j) = 2.0 * h.real();
    s(j + 1) = -2.0 * h.imag();
  }
  const auto& basis = model.basis();
  return basis.eigenvectors.transpose() * (basis.gram * s);
}

LpLqReport lp_lq_audit(const LakeModel& model, double q, const std::vector<double>& t_samples, int samples,
                       std::uint64_t seed) {
  if (!(q >= 1.0 && q <= 2.0)) throw Error(ErrorKind::ConfigError, "decay.q must lie in [1, 2]");
  const auto& basis = model.basis();
  const Grid& g = model.core().grid();
  Eigen::MatrixXd gen = -model.friction();
  gen.diagonal() -= model.eigenvalues();

  auto l2 = [&](const Eigen::VectorXd& c) { return std::sqrt(quad_form(basis.metric_l2_e, c)); };
  auto lq = [&](const Eigen::VectorXd& c) {
    const VelocityField u = model.velocity(c);
    const Eigen::ArrayXd mag = (u.u1.square() + u.u2.square()).sqrt();
    return std::pow(g.weight() * mag.pow(q).sum(), 1.0 / q);
  };

  std::vector<Eigen::VectorXd> data;
  for (int i = 0; i < samples; ++i) data.push_back(random_state(model, 1.0, seed + 101 * i));
  const Eigen::VectorXd conc = concentrated_state(model, 0.05 * g.side_length);
  data.push_back(conc);
  std::vector<double> denom;
  for (const auto& c : data) denom.push_back(l2(c) + lq(c));

  LpLqReport rep;
  rep.q = q;
  rep.times = t_samples;
  const double expo = 1.0 / q - 0.5;
  for (double t : t_samples) {
    if (!(t > 0)) throw Error(ErrorKind::NegativeTime, "lp-lq sample time must be positive");
    const Eigen::MatrixXd S = (gen * t).exp();
    double C = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) C = std::max(C, l2(S * data[i]) * std::pow(t, expo) / denom[i]);
    rep.constants.push_back(C);
    rep.concentrated_norm.push_back(l2(S * conc));
  }
  rep.C = max_of(rep.constants);
  const double cmin = *std::min_element(rep.constants.begin(), rep.constants.end());
  rep.stability = cmin > 0 ? rep.C / cmin : INFINITY;
  if (t_samples.size() >= 2) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < t_samples.size(); ++i) {
      lx.push_back(std::log(t_samples[i]));
      ly.push_back(std::log(rep.concentrated_norm[i]));
    }
    rep.concentrated_slope = linear_fit(lx, ly).slope;
  }
  return rep;
}

void SplitLedger::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out << "time,E_total,E_low,E_high,dissipation,work,Z,G2\n" << std::setprecision(12);
  for (const auto& r : rows) {
    out << r.time << ',' << r.E_total << ',' << r.E_low << ',' << r.E_high << ',' << r.dissipation << ',' << r.work
        << ',' << r.Z << ',' << r.G2 << '\n';
  }
}

DecayStudy decay_study(const LakeModel& model, const DecayConfig& cfg) {
  const auto& basis = model.basis();
  const auto& sc = basis.scalars;
  const Grid& g = model.core().grid();
  DecayStudy st;
  st.side_length = g.side_length;

  IntegrateOptions io;
  io.dt = cfg.dt;
  io.horizon = cfg.horizon;
  io.record_every = std::max(1, static_cast<int>(std::lround(cfg.record_dt / cfg.dt)));
  const Eigen::VectorXd c0 = random_state(model, cfg.initial_radius, cfg.seed);
  st.trajectory = integrate(model, c0, 0.0, io);
  const auto& tr = st.trajectory;
  const std::size_t n = tr.times.size();
  const SplittingSchedule sched = splitting_schedule(cfg.alpha, sc.b_s);

  std::vector<SplitEnergy> split(n);
  parallel_for(n, [&](std::size_t i) { split[i] = fourier_split(model, tr.states[i]); });
  std::vector<double> unorm(n), u2(n), u4(n), grad(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = tr.times[i];
    const auto& s = split[i];
    SplitLedgerRow row{t, s.total, s.low, s.high, quad_form(basis.metric_h1_e, tr.states[i]),
                       tr.ledger[i].work, sched.Z(t), sched.G2(t)};
    st.ledger.rows.push_back(row);
    st.plancherel_error = std::max(st.plancherel_error, std::abs(s.total - s.physical) / std::max(s.physical, 1e-300));
    const double tri = std::pow(std::sqrt(s.low) + std::sqrt(s.high), 2);
    if (s.total > tri + 1e-10 * std::max(1.0, s.total)) st.triangle_ok = false;
    st.schedule_residual = std::max(st.schedule_residual, std::abs(sched.residual(t)));
    unorm[i] = std::sqrt(s.physical);
    u2[i] = s.physical;
    u4[i] = s.physical * s.physical;
    grad[i] = row.dissipation;
    st.kappa_cs = std::max(st.kappa_cs, std::sqrt(sc.b_s) * unorm[i]);
    if (i > 0) {
      const double hw = tr.ledger[i].norm_h, hp = tr.ledger[i - 1].norm_h;
      if (hw > hp * (1 + 1e-12)) st.energy_monotone_weighted = false;
      if (u2[i] > u2[i - 1] * (1 + 1e-12)) st.energy_monotone_l2 = false;
    }
  }
  st.small_data = cfg.smallness_C * (1.0 + unorm[0]) <= 0.5;

  const auto cu4 = cumulative_trapezoid(tr.times, u4);
  const auto cgrad = cumulative_trapezoid(tr.times, grad);
  for (std::size_t i = 1; i < n; ++i) {
    if (cu4[i] < cu4[i - 1]) st.quartic_monotone = false;
    if (cgrad[i] < cgrad[i - 1]) st.dissipation_monotone = false;
  }
  {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < n; ++i) {
      if (tr.times[i] < 0.25 * cfg.horizon || cu4[i] <= 0) continue;
      lx.push_back(std::log(std::numbers::e + tr.times[i]));
      ly.push_back(std::log(cu4[i]));
    }
    if (lx.size() >= 2) st.quartic_exponent = linear_fit(lx, ly).slope;
  }

  // Envelopes: constant fitted on the first half, checked over the full run.
  const double half = 0.5 * cfg.horizon;
  {
    DecayFit f;
    f.model = "LogLaw";
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < n; ++i) {
      const double ll = std::log(std::numbers::e + tr.times[i]);
      if (tr.times[i] <= half) f.C = std::max(f.C, unorm[i] * std::sqrt(ll));
      if (unorm[i] > 0) {
        lx.push_back(std::log(ll));
        ly.push_back(std::log(unorm[i]));
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double env = f.C / std::sqrt(std::log(std::numbers::e + tr.times[i]));
      if (unorm[i] > env * (1 + 1e-12)) ++f.envelope_violations;
    }
    if (lx.size() >= 2) {
      const LinearFit lf = linear_fit(lx, ly);
      f.rate = -lf.slope;
      f.r2 = lf.r2;
    }
    st.loglaw = f;
  }
  {
    DecayFit f;
    f.model = "Exponential";
    std::vector<double> tx, ly;
    for (std::size_t i = 0; i < n; ++i) {
      if (unorm[i] > 0) {
        tx.push_back(tr.times[i]);
        ly.push_back(std::log(unorm[i]));
      }
    }
    if (tx.size() >= 2) {
      const LinearFit lf = linear_fit(tx, ly);
      f.rate = -lf.slope;
      f.r2 = lf.r2;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (tr.times[i] <= half) f.C = std::max(f.C, unorm[i] * std::exp(f.rate * tr.times[i]));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (unorm[i] > f.C * std::exp(-f.rate * tr.times[i]) * (1 + 1e-12)) ++f.envelope_violations;
    }
    st.exponential = f;
  }

  // Pointwise Fourier bound on the dual lattice.
  {
    const int size = g.size();
    const double scale = g.area() / size;  // L^2 / M^2: continuous transform of the samples
    const Eigen::ArrayXd x2 = xi_squared(g);
    const auto cu1 = cumulative_trapezoid(tr.times, unorm);
    const auto cu2 = cumulative_trapezoid(tr.times, u2);
    Fft2 fft(g.points);
    std::vector<Eigen::ArrayXd> mag(n);
    parallel_for(n, [&](std::size_t i) {
      const VelocityField u = model.velocity(tr.states[i]);
      CArray P;
      fft.forward(pack(u.u1, u.u2), P);
      mag[i].resize(size);
      const int m = g.points;
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
          const int p = a * m + b, q = wrap_index(-signed_freq(a, m), m) * m + wrap_index(-signed_freq(b, m), m);
          mag[i](p) = scale * std::sqrt(0.5 * (std::norm(P[p]) + std::norm(P[q])));
        }
      }
      if (i == 0) {
        st.fourier_bound.u0_l1 = g.weight() * (u.u1.square() + u.u2.square()).sqrt().sum();
      }
    });
    FourierBoundAudit& fb = st.fourier_bound;
    const Eigen::ArrayXd xi = x2.sqrt();
    auto bracket = [&](std::size_t i, int p) {
      return xi(p) * tr.times[i] + (1.0 + xi(p)) * (cu1[i] + cu2[i]);
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (tr.times[i] > half) break;
      for (int p = 0; p < size; ++p) {
        const double br = bracket(i, p);
        if (br > 0) fb.C = std::max(fb.C, (mag[i](p) - fb.u0_l1) / br);
      }
    }
    fb.C = std::max(fb.C, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (int p = 0; p < size; ++p) {
        ++fb.points;
        const double bound = fb.u0_l1 + fb.C * bracket(i, p);
        if (mag[i](p) > bound * (1 + 1e-12)) ++fb.violations;
      }
    }
  }
  return st;
}

EnergyLawReport energy_law(const GalerkinModel& model, const Eigen::VectorXd& c0, double dt, double horizon) {
  auto residual = [&](double h) {
    IntegrateOptions io;
    io.dt = h;
    io.horizon = horizon;
    io.record_every = 1;
    const TrajectoryRecord tr = integrate(model, c0, 0.0, io);
    std::vector<double> rate(tr.times.size());
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const auto& r = tr.ledger[i];
      rate[i] = 2.0 * (r.dissipation + r.friction - r.work);
    }
    const auto cum = cumulative_trapezoid(tr.times, rate);
    return tr.states.back().squaredNorm() - c0.squaredNorm() + cum.back();
  };
  EnergyLawReport rep;
  rep.initial_energy = c0.squaredNorm();
  rep.residual_coarse = residual(dt);
  rep.residual_fine = residual(0.5 * dt);
  rep.residual_richardson = (4.0 * rep.residual_fine - rep.residual_coarse) / 3.0;
  rep.relative = std::abs(rep.residual_richardson) / rep.initial_energy;
  return rep;
}

}  // namespace aimlake
