#include "aimlake/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>

#include "aimlake/error.hpp"
#include "aimlake/stats.hpp"
#include "aimlake/util.hpp"

namespace aimlake {

double theta_profile(double s) {
  const double t = std::clamp(s - 1.0, 0.0, 1.0);
  return 1.0 - t * t * (3.0 - 2.0 * t);
}

Eigen::VectorXd rhs_B(const GalerkinModel& model, const Eigen::VectorXd& c) {
  if (c.isZero(0.0)) return Eigen::VectorXd::Zero(c.size());
  return model.nonlinear(c);
}

Eigen::VectorXd rhs_B_theta(const GalerkinModel& model, const Eigen::VectorXd& c,
                            const PreparedNonlinearity& prep) {
  const double v = model.norm_v(c);
  const double th = prep.theta(v * v / (prep.rho1 * prep.rho1));
  if (th == 0.0) return Eigen::VectorXd::Zero(c.size());
  Eigen::VectorXd b = rhs_B(model, c);
  if (th != 1.0) b *= th;
  return b;
}

Eigen::VectorXd explicit_part(const GalerkinModel& model, const Eigen::VectorXd& c, double t,
                              const StepOptions& opt) {
  Eigen::VectorXd r = model.forcing(t);
  if (opt.friction) r.noalias() -= model.friction() * c;
  if (opt.nonlinear) r -= opt.prep ? rhs_B_theta(model, c, *opt.prep) : rhs_B(model, c);
  return r;
}

Eigen::VectorXd time_derivative(const GalerkinModel& model, const Eigen::VectorXd& c, double t,
                                const StepOptions& opt) {
  return explicit_part(model, c, t, opt) - (model.eigenvalues().array() * c.array()).matrix();
}

Eigen::VectorXd step(const GalerkinModel& model, const Eigen::VectorXd& c, double t, double dt,
                     const StepOptions& opt) {
  if (!(dt > 0)) throw Error(ErrorKind::ConfigError, "dt must be positive");
  const Eigen::ArrayXd ef = (-model.eigenvalues().array() * dt).exp();
  const Eigen::VectorXd n0 = explicit_part(model, c, t, opt);
  const Eigen::VectorXd mid = (ef * (c + dt * n0).array()).matrix();
  const Eigen::VectorXd n1 = explicit_part(model, mid, t + dt, opt);
  return (ef * c.array() + 0.5 * dt * (ef * n0.array() + n1.array())).matrix();
}

LedgerRow ledger_row(const GalerkinModel& model, const Eigen::VectorXd& c, double t) {
  LedgerRow r;
  r.time = t;
  r.norm_h = c.norm();
  r.norm_v = model.norm_v(c);
  r.dissipation = (model.eigenvalues().array() * c.array().square()).sum();
  r.friction = c.dot(model.friction() * c);
  r.work = c.dot(model.forcing(t));
  return r;
}

void TrajectoryRecord::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out << "time,normH,normV,dissipation,work\n" << std::setprecision(12);
  for (const auto& r : ledger) {
    out << r.time << ',' << r.norm_h << ',' << r.norm_v << ',' << r.dissipation << ',' << r.work << '\n';
  }
}

TrajectoryRecord integrate(const GalerkinModel& model, const Eigen::VectorXd& c0, double t0,
                           const IntegrateOptions& opt) {
  const long steps = std::max(1L, std::lround(opt.horizon / opt.dt));
  const double limit = 1e6 * std::max(c0.norm(), 1.0);
  TrajectoryRecord rec;
  Eigen::VectorXd c = c0;
  auto record = [&](double t) {
    rec.times.push_back(t);
    rec.states.push_back(c);
    rec.ledger.push_back(ledger_row(model, c, t));
  };
  record(t0);
  for (long s = 1; s <= steps; ++s) {
    const double t = t0 + (s - 1) * opt.dt;
    c = step(model, c, t, opt.dt, opt.step);
    const double h = c.norm();
    if (!std::isfinite(h) || h > limit) {
      throw Error(ErrorKind::BlowUp, "|u|_b = " + std::to_string(h) + " at t = " + std::to_string(t + opt.dt));
    }
    if (s % opt.record_every == 0 || s == steps) record(t0 + s * opt.dt);
  }
  return rec;
}

namespace {
Eigen::VectorXd smooth_direction(const GalerkinModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd c(model.dim());
  for (int k = 0; k < model.dim(); ++k) c(k) = gauss(rng) / (1.0 + model.eigenvalues()(k));
  return c;
}
}  // namespace

Eigen::VectorXd random_state(const GalerkinModel& model, double radius, std::uint64_t seed) {
  Eigen::VectorXd c = smooth_direction(model, seed);
  return c * (radius / c.norm());
}

Eigen::VectorXd random_state_v(const GalerkinModel& model, double vnorm, std::uint64_t seed) {
  Eigen::VectorXd c = smooth_direction(model, seed);
  return c * (vnorm / model.norm_v(c));
}

AbsorbingEstimates estimate_absorbing(const GalerkinModel& model, const EnsembleConfig& cfg) {
  const int members = cfg.ensemble_size;
  const int record_every = std::max(1, static_cast<int>(std::lround(0.05 / cfg.dt)));
  std::vector<TrajectoryRecord> runs(members);
  StepOptions so;
  parallel_for(members, [&](std::size_t m) {
    IntegrateOptions io;
    io.dt = cfg.dt;
    io.horizon = cfg.horizon;
    io.record_every = record_every;
    io.step = so;
    runs[m] = integrate(model, random_state(model, cfg.initial_radius, cfg.seed * 1000003ULL + m), 0.0, io);
  });

  AbsorbingEstimates est;
  const double late = 0.5 * cfg.horizon;
  double sup_h = 0, sup_v = 0, sup_d1 = 0, sup_d2 = 0;
  for (const auto& run : runs) {
    double q2 = 0, q4 = 0;
    const std::size_t n = run.times.size();
    std::vector<Eigen::VectorXd> deriv(n);
    for (std::size_t i = 0; i < n; ++i) deriv[i] = time_derivative(model, run.states[i], run.times[i], so);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = run.times[i];
      if (t < late) continue;
      sup_h = std::max(sup_h, run.ledger[i].norm_h);
      sup_v = std::max(sup_v, run.ledger[i].norm_v);
      sup_d1 = std::max(sup_d1, model.norm_v(deriv[i]));
      if (i > 0 && i + 1 < n) {
        const Eigen::VectorXd dd = (deriv[i + 1] - deriv[i - 1]) / (run.times[i + 1] - run.times[i - 1]);
        sup_d2 = std::max(sup_d2, model.norm_v(dd));
      }
      if (t < 0.75 * cfg.horizon) {
        q2 = std::max(q2, run.ledger[i].norm_h);
      } else {
        q4 = std::max(q4, run.ledger[i].norm_h);
      }
      est.late_states.push_back(run.states[i]);
    }
    if (q4 > 2.0 * q2 && q4 > cfg.initial_radius) {
      est.absorbed = false;
      est.note = "H-norm still growing at the end of the horizon";
    }
  }
  est.rho0 = (1 + cfg.margin) * sup_h;
  est.rho1 = (1 + cfg.margin) * sup_v;
  est.beta2 = sup_d1;
  est.beta1 = sup_d2;
  const double inf = std::numeric_limits<double>::infinity();
  const double a1 = est.beta2 > 0 ? 2 * est.rho1 / est.beta2 : inf;
  const double a2 = est.beta1 > 0 ? std::sqrt(8 * est.rho1 / est.beta1) : inf;
  est.alpha = std::min(a1, a2);

  // Entry time: after it every member stays inside the rho0 ball.
  est.t0 = 0.0;
  for (const auto& run : runs) {
    for (std::size_t i = run.times.size(); i-- > 0;) {
      if (run.ledger[i].norm_h > est.rho0) {
        est.t0 = std::max(est.t0, run.times[std::min(i + 1, run.times.size() - 1)]);
        break;
      }
    }
  }
  estimate_cutoff_constants(model, est, cfg);
  return est;
}

void estimate_cutoff_constants(const GalerkinModel& model, AbsorbingEstimates& est, const EnsembleConfig& cfg) {
  if (!(est.rho1 > 0)) {
    est.M0 = est.M1 = est.M1_p99 = est.M1_max = 0.0;
    return;
  }
  const PreparedNonlinearity prep{est.rho1};
  const int ns = cfg.cutoff_samples;
  std::vector<double> m0(ns + est.late_states.size(), 0.0);
  parallel_for(m0.size(), [&](std::size_t i) {
    Eigen::VectorXd c;
    if (i < est.late_states.size()) {
      c = est.late_states[i];
    } else {
      const std::uint64_t seed = cfg.seed * 7919ULL + 17 * i;
      std::mt19937_64 rng(seed);
      const double r = std::uniform_real_distribution<double>(0.0, 2.0)(rng) * est.rho1;
      c = random_state_v(model, r, seed + 1);
    }
    m0[i] = rhs_B_theta(model, c, prep).norm();
  });
  est.M0 = (1 + cfg.margin) * max_of(m0);

  const int np = cfg.lipschitz_pairs;
  std::vector<double> ratios(np, 0.0);
  parallel_for(np, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seed * 104729ULL + 31 * i;
    std::mt19937_64 rng(seed);
    Eigen::VectorXd u;
    if (!est.late_states.empty() && i % 2 == 0) {
      u = est.late_states[(i / 2) % est.late_states.size()];
    } else {
      const double r = std::uniform_real_distribution<double>(0.0, 2.0)(rng) * est.rho1;
      u = random_state_v(model, r, seed + 1);
    }
    const double eps = std::pow(10.0, std::uniform_real_distribution<double>(-3.0, 0.0)(rng));
    const Eigen::VectorXd d = random_state_v(model, eps * est.rho1, seed + 2);
    const Eigen::VectorXd v = u + d;
    const double dv = model.norm_v(d);
    ratios[i] = (rhs_B_theta(model, u, prep) - rhs_B_theta(model, v, prep)).norm() / dv;
  });
  est.M1_p99 = percentile(ratios, 99.0);
  est.M1_max = max_of(ratios);
  est.M1 = est.M1_max;
}

std::vector<SpectralState> sample_attractor(const GalerkinModel& model, const AbsorbingEstimates& est,
                                            const SampleConfig& cfg) {
  if (!est.absorbed) throw Error(ErrorKind::NoAbsorption, est.note);
  if (cfg.spinup < est.t0) {
    throw Error(ErrorKind::NoAbsorption, "spinup " + std::to_string(cfg.spinup) + " < entry time t0 = " +
                                             std::to_string(est.t0));
  }
  const long every = std::max(1L, std::lround(cfg.spacing / cfg.dt));
  const long first = std::lround(cfg.spinup / cfg.dt);
  const long last = first + every * (cfg.n_samples - 1);
  Eigen::VectorXd c = random_state(model, cfg.initial_radius, cfg.seed);
  std::vector<SpectralState> out;
  StepOptions so;
  for (long s = 0; s <= last; ++s) {
    if (s >= first && (s - first) % every == 0) out.push_back({c, s * cfg.dt});
    if (s == last) break;
    c = step(model, c, s * cfg.dt, cfg.dt, so);
    if (!c.allFinite()) throw Error(ErrorKind::BlowUp, "non-finite state while sampling");
  }
  return out;
}

}  // namespace aimlake
