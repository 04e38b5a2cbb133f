#include "aimlake/aim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "aimlake/error.hpp"
#include "aimlake/oracle.hpp"
#include "aimlake/stats.hpp"
#include "aimlake/util.hpp"

namespace aimlake {

double AimConfig::tau_at(int N) const {
  if (tau.empty()) throw Error(ErrorKind::ConfigError, "aim.tau: empty");
  return tau[std::min<std::size_t>(N, tau.size() - 1)];
}

namespace {

Eigen::VectorXd join(const Eigen::VectorXd& y, const Eigen::VectorXd& z) {
  Eigen::VectorXd u(y.size() + z.size());
  u << y, z;
  return u;
}

struct BackwardPath {
  std::vector<Eigen::VectorXd> y;  // low parts
  std::vector<Eigen::VectorXd> u;  // full states y_k + phi(y_k)
};

BackwardPath backward_path(const GalerkinModel& model, const Eigen::VectorXd& y0, const AimEvaluator* phi, int N,
                           double tau, const AimConfig& cfg) {
  const int n = cfg.n;
  const int D = model.dim();
  if (y0.size() != n) throw Error(ErrorKind::IndexOutOfRange, "low state has wrong length");
  const Eigen::VectorXd lam = model.eigenvalues().head(n);
  const Eigen::VectorXd f = model.forcing(cfg.forcing_time).head(n);
  const double limit = cfg.blowup_factor * cfg.prep.rho1;
  BackwardPath path;
  Eigen::VectorXd y = y0;
  for (int k = 0;; ++k) {
    const Eigen::VectorXd z = phi ? (*phi)(y) : Eigen::VectorXd::Zero(D - n);
    const Eigen::VectorXd u = join(y, z);
    if (!u.allFinite() || model.norm_v(join(y, Eigen::VectorXd::Zero(D - n))) > limit) {
      throw Error(ErrorKind::BackwardBlowUp, "backward sequence left the ball at k = " + std::to_string(k));
    }
    path.y.push_back(y);
    path.u.push_back(u);
    if (k == N) break;
    Eigen::VectorXd dy = (lam.array() * y.array()).matrix() - f;
    if (cfg.friction) dy += (model.friction() * u).head(n);
    if (cfg.nonlinear) dy += rhs_B_theta(model, u, cfg.prep).head(n);
    y += tau * dy;
  }
  return path;
}

}  // namespace

std::vector<Eigen::VectorXd> backward_euler_sequence(const GalerkinModel& model, const Eigen::VectorXd& y0,
                                                     const AimEvaluator* phi, int N, double tau,
                                                     const AimConfig& cfg) {
  return backward_path(model, y0, phi, N, tau, cfg).y;
}

Eigen::VectorXd apply_F_N_tau(const GalerkinModel& model, const AimEvaluator* phi, const Eigen::VectorXd& y0,
                              int N, double tau, const AimConfig& cfg) {
  if (N < 0) throw Error(ErrorKind::IndexOutOfRange, "N must be nonnegative");
  if (!(tau > 0)) throw Error(ErrorKind::ConfigError, "tau must be positive");
  const int n = cfg.n;
  const int D = model.dim();
  const int h = D - n;
  const BackwardPath path = backward_path(model, y0, phi, N, tau, cfg);

  const Eigen::ArrayXd lam = model.eigenvalues().tail(h).array();
  if ((lam <= 0).any()) throw Error(ErrorKind::SingularOperator, "zero eigenvalue above the cut");
  const Eigen::ArrayXd decay = (-lam * tau).exp();
  const Eigen::ArrayXd gain = (1.0 - (cfg.paper_literal ? (-lam).exp() : decay)) / lam;
  const Eigen::VectorXd f = model.forcing(cfg.forcing_time).tail(h);

  auto rhs = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd r = f;
    if (cfg.nonlinear) r -= rhs_B_theta(model, u, cfg.prep).tail(h);
    if (cfg.friction) r -= (model.friction() * u).tail(h);
    return r;
  };

  Eigen::VectorXd out = Eigen::VectorXd::Zero(h);
  Eigen::ArrayXd weight = Eigen::ArrayXd::Ones(h);  // e^{-k A tau}
  const int last = cfg.include_tail ? N - 1 : N;
  for (int k = 0; k <= last; ++k) {
    out.array() += gain * weight * rhs(path.u[k]).array();
    weight *= decay;
  }
  if (cfg.include_tail) out.array() += weight / lam * rhs(path.u[N]).array();
  return out;
}

AimEvaluator::AimEvaluator(const GalerkinModel& model, AimConfig cfg, int level, AimPtr parent,
                           std::shared_ptr<std::atomic<long>> counter)
    : model_(&model), cfg_(std::move(cfg)), level_(level), parent_(std::move(parent)), counter_(std::move(counter)) {
  if (cfg_.n < 1 || cfg_.n >= model.dim()) {
    throw Error(ErrorKind::IndexOutOfRange, "cut n = " + std::to_string(cfg_.n) + " outside [1, D)");
  }
  if (level_ > 0 && !parent_) throw Error(ErrorKind::ConfigError, "level > 0 needs a parent map");
  if (!counter_) counter_ = std::make_shared<std::atomic<long>>(0);
}

Eigen::VectorXd AimEvaluator::operator()(const Eigen::VectorXd& y) const {
  const int h = model_->dim() - cfg_.n;
  if (level_ == 0) return Eigen::VectorXd::Zero(h);

  Eigen::VectorXd yq = y;
  std::string key;
  const double res = cfg_.memo_resolution;
  if (res > 0) {
    key.reserve(8 * y.size());
    for (int i = 0; i < y.size(); ++i) {
      const auto q = static_cast<long long>(std::llround(y(i) / res));
      yq(i) = static_cast<double>(q) * res;
      append_bytes(key, q);
    }
    std::lock_guard<std::mutex> lock(memo_mutex_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  const long used = ++(*counter_);
  if (used > cfg_.budget) {
    throw Error(ErrorKind::BudgetExceeded, "more than " + std::to_string(cfg_.budget) + " map evaluations");
  }
  const int N = level_ - 1;
  Eigen::VectorXd z = apply_F_N_tau(*model_, parent_.get(), yq, N, cfg_.tau_at(N), cfg_);
  if (res > 0) {
    std::lock_guard<std::mutex> lock(memo_mutex_);
    memo_.emplace(std::move(key), z);
  }
  return z;
}

Eigen::VectorXd AimEvaluator::full(const Eigen::VectorXd& y) const {
  return join(Eigen::VectorXd::Zero(cfg_.n), (*this)(y));
}

std::vector<AimPtr> build_phi_sequence(const GalerkinModel& model, const AimConfig& cfg, int max_level) {
  if (max_level < 0) throw Error(ErrorKind::IndexOutOfRange, "levels must be nonnegative");
  auto counter = std::make_shared<std::atomic<long>>(0);
  std::vector<AimPtr> out;
  AimPtr prev;
  for (int L = 0; L <= max_level; ++L) {
    prev = std::make_shared<const AimEvaluator>(model, cfg, L, prev, counter);
    out.push_back(prev);
  }
  return out;
}

TheoremConstants theorem_constants(const GalerkinModel& model, const AbsorbingEstimates& est, int n, double chi,
                                   double delta0) {
  const int D = model.dim();
  if (n < 1 || n >= D) throw Error(ErrorKind::IndexOutOfRange, "cut n = " + std::to_string(n));
  const auto& ev = model.eigenvalues();
  const FieldScalars sc = model.scalars();
  TheoremConstants tc;
  tc.gamma = gamma_quadrature();
  tc.b_bar = sc.b_bar;
  tc.nu_i = sc.nu_i;
  tc.eta_bar = sc.eta_bar;
  tc.poincare = model.poincare();
  tc.M0 = est.M0;
  tc.M1 = est.M1;
  tc.rho0 = est.rho0;
  tc.rho1 = est.rho1;
  tc.beta1 = est.beta1;
  tc.beta2 = est.beta2;
  tc.f_norm = model.forcing_norm(0.0);
  tc.lambda_n = ev(n - 1);
  tc.lambda_n1 = ev(n);
  tc.chi = chi;
  tc.delta0 = delta0;

  const double bb = tc.b_bar, nu = tc.nu_i, ln = tc.lambda_n, ln1 = tc.lambda_n1;
  tc.m = tc.M1 + tc.poincare * tc.eta_bar;
  const double m = tc.m;
  const double g1 = tc.gamma / std::sqrt(nu) + 1.0;

  tc.ratio_chosen = std::sqrt(nu * ln1 / ln);
  tc.ratio_sup = 0.0;
  for (int k = 1; k < D; ++k) {
    if (ev(k - 1) > 0) tc.ratio_sup = std::max(tc.ratio_sup, std::sqrt(nu * ev(k) / ev(k - 1)));
  }
  tc.L0 = (tc.f_norm + tc.M0 + tc.eta_bar * tc.rho0) * g1 / std::sqrt(bb * ln1);
  tc.l = 6.0 * (0.5 + tc.ratio_chosen);
  tc.l_sup = 6.0 * (0.5 + tc.ratio_sup);
  const double l = tc.l;
  tc.delta1 = std::min(delta0, std::log(1.5) / l);

  // delta2 solves A s + B s^2 = 1/2 with s = delta2^{-1/4}.
  const double pre = std::exp(delta0) / std::sqrt(bb);
  const double qa = pre * 2.0 * std::pow(m, 1.5) * std::pow(bb / nu, 0.25);
  const double qb = pre * m * m / std::sqrt(nu);
  if (qb > 0) {
    const double s = (-qa + std::sqrt(qa * qa + 2.0 * qb)) / (2.0 * qb);
    tc.delta2 = std::pow(s, -4.0);
  } else {
    tc.delta2 = 0.0;
  }
  const double inner = (3.0 + 6.0 * tc.ratio_sup) / std::sqrt(nu) + g1;
  tc.delta3 = 4.0 * m * m / bb * inner * inner;

  const double grow = std::exp(tc.delta1 * (l + 1.0));
  tc.Xi = (l + 1.0) * grow / std::sqrt(bb) *
              (2.0 * std::pow(m, 1.5) * std::pow(bb / (nu * ln), 0.25) + m * m / std::sqrt(nu * ln1)) +
          grow * tc.ratio_chosen;
  tc.mu = std::sqrt(bb) * m * (l / std::sqrt(ln * nu) + g1 / std::sqrt(ln1));
  tc.window_upper = m > 0 ? tc.delta1 / m * std::sqrt(bb * nu / ln) : std::numeric_limits<double>::infinity();
  tc.target = 4.0 / std::sqrt(bb) * (tc.M0 + tc.eta_bar * tc.rho0) / std::sqrt(ln1) * std::exp(-ln1 * chi);
  return tc;
}

std::vector<double> paper_tau_schedule(const TheoremConstants& tc, int levels) {
  std::vector<double> tau;
  for (int N = 0; N < std::max(levels, 1); ++N) {
    double span = tc.chi;
    if (std::isfinite(tc.window_upper) && tc.window_upper >= tc.chi) span = 0.5 * (tc.chi + tc.window_upper);
    tau.push_back(span / (N + 1));
  }
  return tau;
}

namespace {

Eigen::VectorXd random_low(const GalerkinModel& model, int n, double vnorm, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = gauss(rng);
  const double v = model.norm_v(join(y, Eigen::VectorXd::Zero(model.dim() - n)));
  return v > 0 ? Eigen::VectorXd(y * (vnorm / v)) : y;
}

double vnorm_high(const GalerkinModel& model, int n, const Eigen::VectorXd& z) {
  return model.norm_v(join(Eigen::VectorXd::Zero(n), z));
}

double vnorm_low(const GalerkinModel& model, int n, const Eigen::VectorXd& y) {
  return model.norm_v(join(y, Eigen::VectorXd::Zero(model.dim() - n)));
}

}  // namespace

Theorem1Report audit_theorem1(const std::vector<AimPtr>& phis, const TheoremConstants& tc, int sample_count,
                              std::uint64_t seed) {
  Theorem1Report rep;
  rep.constants = tc;
  rep.lambda_ge_delta2 = tc.lambda_n >= tc.delta2;
  rep.lambda_ge_delta3 = tc.lambda_n >= tc.delta3;
  rep.xi_le_l = tc.Xi <= tc.l;
  rep.mu_le_half = tc.mu <= 0.5;
  rep.all_measured_ok = true;
  rep.hypotheses_ok = rep.lambda_ge_delta2;
  if (phis.empty()) return rep;
  const GalerkinModel& model = phis.front()->model();
  const int n = phis.front()->n();

  // Same samples for every level.
  std::vector<Eigen::VectorXd> ys(sample_count), yp(sample_count);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < sample_count; ++i) {
    ys[i] = random_low(model, n, 2.0 * tc.rho1 * unit(rng), rng);
    const double eps = std::pow(10.0, -2.0 * unit(rng)) * tc.rho1;
    yp[i] = ys[i] + random_low(model, n, eps, rng);
  }

  for (const auto& phi : phis) {
    LevelAudit la;
    la.level = phi->level();
    const int N = la.level - 1;
    la.tau = N >= 0 ? phi->config().tau_at(N) : 0.0;
    std::vector<double> sup(sample_count), lip(sample_count);
    parallel_for(sample_count, [&](std::size_t i) {
      const Eigen::VectorXd a = (*phi)(ys[i]);
      const Eigen::VectorXd b = (*phi)(yp[i]);
      sup[i] = vnorm_high(model, n, a);
      lip[i] = vnorm_high(model, n, a - b) / vnorm_low(model, n, ys[i] - yp[i]);
    });
    la.sup_norm = max_of(sup);
    la.lipschitz = max_of(lip);
    la.lipschitz_p99 = percentile(lip, 99.0);
    la.sup_ok = la.sup_norm <= tc.L0;
    la.lip_ok = la.lipschitz <= tc.l;
    la.window_ok = N < 0 || (N + 1) * la.tau <= tc.window_upper;
    la.support_ok = phi->full(ys[0]).head(n).isZero(0.0);
    rep.all_measured_ok = rep.all_measured_ok && la.sup_ok && la.lip_ok && la.support_ok;
    rep.hypotheses_ok = rep.hypotheses_ok && la.window_ok;
    rep.levels.push_back(la);
  }
  return rep;
}

std::vector<LevelDistance> semidistance_study(const std::vector<AimPtr>& phis,
                                              const std::vector<SpectralState>& samples,
                                              const TheoremConstants& tc) {
  std::vector<LevelDistance> out;
  if (phis.empty() || samples.empty()) return out;
  const GalerkinModel& model = phis.front()->model();
  const int n = phis.front()->n();
  const int h = model.dim() - n;
  double flat = 0.0;
  for (const auto& s : samples) flat = std::max(flat, vnorm_high(model, n, s.coeffs.tail(h)));
  for (const auto& phi : phis) {
    std::vector<double> d(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
      const auto& c = samples[i].coeffs;
      d[i] = vnorm_high(model, n, (*phi)(c.head(n)) - c.tail(h));
    });
    out.push_back({phi->level(), max_of(d), flat, tc.target});
  }
  return out;
}

SweepResult semidistance_sweep(const GalerkinModel& model, const AbsorbingEstimates& est,
                               const std::vector<SpectralState>& samples, const std::vector<int>& cuts,
                               int level, const AimConfig& base, double chi) {
  SweepResult res;
  std::vector<double> xs, ys;
  res.dominance_ok = true;
  for (int n : cuts) {
    AimConfig cfg = base;
    cfg.n = n;
    const TheoremConstants tc = theorem_constants(model, est, n, chi);
    const auto phis = build_phi_sequence(model, cfg, level);
    const auto dist = semidistance_study({phis.back()}, samples, tc);
    SweepRow row;
    row.n = n;
    row.lambda_n1 = tc.lambda_n1;
    row.level = level;
    row.rho_N = dist.front().rho_N;
    row.rho_flat = dist.front().rho_flat;
    row.target = tc.target;
    res.rows.push_back(row);
    if (row.rho_N > 1.01 * row.rho_flat) res.dominance_ok = false;
    if (row.rho_N > 0) {
      xs.push_back(row.lambda_n1);
      ys.push_back(std::log(row.rho_N));
    }
  }
  if (xs.size() >= 2) {
    const LinearFit fit = linear_fit(xs, ys);
    res.slope = fit.slope;
    res.r2 = fit.r2;
  }
  return res;
}

GrowthAudit backward_growth_audit(const GalerkinModel& model, const AimEvaluator* phi, const TheoremConstants& tc,
                                  int N, double tau, const AimConfig& cfg, int pairs, std::uint64_t seed) {
  const int n = cfg.n;
  const double rate = tc.lambda_n + tc.m * (1.0 + tc.l) / std::sqrt(tc.b_bar * tc.nu_i / tc.lambda_n);
  std::vector<double> worst(pairs, 0.0);
  std::vector<Eigen::VectorXd> a(pairs), b(pairs);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < pairs; ++i) {
    a[i] = random_low(model, n, 2.0 * tc.rho1 * unit(rng), rng);
    b[i] = a[i] + random_low(model, n, std::pow(10.0, -2.0 * unit(rng)) * tc.rho1, rng);
  }
  parallel_for(pairs, [&](std::size_t i) {
    const auto sa = backward_euler_sequence(model, a[i], phi, N, tau, cfg);
    const auto sb = backward_euler_sequence(model, b[i], phi, N, tau, cfg);
    const double d0 = vnorm_low(model, n, sa[0] - sb[0]);
    for (int k = 1; k <= N; ++k) {
      const double bound = std::exp(k * tau * rate) * d0;
      worst[i] = std::max(worst[i], vnorm_low(model, n, sa[k] - sb[k]) / bound);
    }
  });
  GrowthAudit g;
  g.worst_ratio = max_of(worst);
  g.pass = g.worst_ratio <= 1.0;
  return g;
}

}  // namespace aimlake
