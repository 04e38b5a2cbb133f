#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "aimlake/dynamics.hpp"
#include "aimlake/model.hpp"

namespace aimlake {

struct AimConfig {
  int n = 4;                       ///< low-mode cut
  std::vector<double> tau{0.05};   ///< tau[N] builds Phi_{N+1}; last entry repeats
  double memo_resolution = 1e-6;   ///< 0 disables the memo cache
  long budget = 20'000'000;        ///< cap on F^N evaluations across all levels
  bool paper_literal = false;      ///< use (I - e^{-A}) in place of (I - e^{-A tau})
  bool include_tail = true;        ///< false: sum k = 0..N without the e^{-N A tau} tail
  bool nonlinear = true;
  bool friction = true;
  PreparedNonlinearity prep;
  double blowup_factor = 1e6;
  double forcing_time = 0.0;

  double tau_at(int N) const;
};

class AimEvaluator;
using AimPtr = std::shared_ptr<const AimEvaluator>;

/// Phi_level as an on-demand recursive map from low coordinates (length n)
/// to high coordinates (length D - n). Level 0 is the zero map.
/// Inputs are snapped to the memo lattice before evaluation, so results do
/// not depend on evaluation order.
class AimEvaluator {
 public:
  AimEvaluator(const GalerkinModel& model, AimConfig cfg, int level, AimPtr parent,
               std::shared_ptr<std::atomic<long>> counter);

  int level() const { return level_; }
  int n() const { return cfg_.n; }
  const AimConfig& config() const { return cfg_; }
  const GalerkinModel& model() const { return *model_; }
  const AimEvaluator* parent() const { return parent_.get(); }
  long evaluations() const { return counter_->load(); }

  Eigen::VectorXd operator()(const Eigen::VectorXd& y) const;
  /// Full D-vector (0 on modes 1..n).
  Eigen::VectorXd full(const Eigen::VectorXd& y) const;

 private:
  const GalerkinModel* model_;
  AimConfig cfg_;
  int level_;
  AimPtr parent_;
  std::shared_ptr<std::atomic<long>> counter_;
  mutable std::mutex memo_mutex_;
  mutable std::unordered_map<std::string, Eigen::VectorXd> memo_;
};

/// y_{k+1} = y_k + tau (Lambda y_k + P_n(E u_k) + P_n B_theta(u_k) - P_n f),
/// u_k = y_k + phi(y_k). phi == nullptr is the zero map.
/// Throws BackwardBlowUp when ||y_k||_b exceeds blowup_factor * rho1.
std::vector<Eigen::VectorXd> backward_euler_sequence(const GalerkinModel& model, const Eigen::VectorXd& y0,
                                                     const AimEvaluator* phi, int N, double tau,
                                                     const AimConfig& cfg);

/// F^N_tau(phi)(y0): sum_k A^{-1}(I - e^{-A tau}) e^{-k A tau} h(u_k) + A^{-1} e^{-N A tau} h(u_N)
/// with h(u) = Q_n(f - B_theta(u) - eta u), restricted to modes > n.
Eigen::VectorXd apply_F_N_tau(const GalerkinModel& model, const AimEvaluator* phi, const Eigen::VectorXd& y0,
                              int N, double tau, const AimConfig& cfg);

/// Phi_0 ... Phi_max_level sharing one evaluation counter.
std::vector<AimPtr> build_phi_sequence(const GalerkinModel& model, const AimConfig& cfg, int max_level);

/// Constants of the existence and approximation theorems for one cut n.
struct TheoremConstants {
  double gamma = 0, b_bar = 0, nu_i = 0, eta_bar = 0, poincare = 0;
  double M0 = 0, M1 = 0, rho0 = 0, rho1 = 0, f_norm = 0, beta1 = 0, beta2 = 0;
  double lambda_n = 0, lambda_n1 = 0;
  double m = 0;             ///< M1 + Pi eta_bar
  double ratio_chosen = 0;  ///< (nu_i lambda_{n+1} / lambda_n)^{1/2} at the chosen n
  double ratio_sup = 0;     ///< the same, sup over all cuts
  double L0 = 0, l = 0, l_sup = 0;
  double delta0 = 1, delta1 = 0, delta2 = 0, delta3 = 0;
  double Xi = 0, mu = 0, window_upper = 0, chi = 0, target = 0;
};

TheoremConstants theorem_constants(const GalerkinModel& model, const AbsorbingEstimates& est, int n,
                                   double chi, double delta0 = 1.0);

/// tau_N with chi <= tau_N (N+1) <= window_upper (midpoint of the window).
std::vector<double> paper_tau_schedule(const TheoremConstants& tc, int levels);

struct LevelAudit {
  int level = 0;
  double tau = 0;
  double sup_norm = 0;      ///< max ||Phi_N(y)||_b over samples
  double lipschitz = 0;     ///< max ratio over pairs
  double lipschitz_p99 = 0;
  bool sup_ok = false, lip_ok = false;
  bool window_ok = false;   ///< (N+1) tau within the hypothesis window
  bool support_ok = false;  ///< Q_n-valued
};

struct Theorem1Report {
  TheoremConstants constants;
  std::vector<LevelAudit> levels;
  bool lambda_ge_delta2 = false;
  bool lambda_ge_delta3 = false;
  bool xi_le_l = false;
  bool mu_le_half = false;
  bool all_measured_ok = false;   ///< sup <= L0 and lip <= l at all levels
  bool hypotheses_ok = false;     ///< windows and lambda_n >= delta2
};

/// Random low states with ||y||_b uniform in [0, 2 rho1]; pairs perturbed by
/// 1e-2..1 rho1.
Theorem1Report audit_theorem1(const std::vector<AimPtr>& phis, const TheoremConstants& tc, int sample_count,
                              std::uint64_t seed);

struct LevelDistance {
  int level = 0;
  double rho_N = 0;     ///< sup ||Phi_N(y) - z||_b
  double rho_flat = 0;  ///< sup ||z||_b
  double target = 0;    ///< 4 b_bar^{-1/2}(M0 + eta_bar rho0) lambda_{n+1}^{-1/2} e^{-lambda_{n+1} chi}
};

std::vector<LevelDistance> semidistance_study(const std::vector<AimPtr>& phis,
                                              const std::vector<SpectralState>& samples,
                                              const TheoremConstants& tc);

struct SweepRow {
  int n = 0;
  double lambda_n1 = 0;
  int level = 0;
  double rho_N = 0, rho_flat = 0, target = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double slope = 0, r2 = 0;      ///< fit of log rho_N against lambda_{n+1}
  bool dominance_ok = false;     ///< rho_N <= 1.01 rho_flat everywhere
};

/// n-sweep of the semidistance at a fixed level.
SweepResult semidistance_sweep(const GalerkinModel& model, const AbsorbingEstimates& est,
                               const std::vector<SpectralState>& samples, const std::vector<int>& cuts,
                               int level, const AimConfig& base, double chi);

struct GrowthAudit {
  double worst_ratio = 0;  ///< max measured / bound
  bool pass = false;
};

/// Backward sequence divergence against the exponential bound.
GrowthAudit backward_growth_audit(const GalerkinModel& model, const AimEvaluator* phi, const TheoremConstants& tc,
                                  int N, double tau, const AimConfig& cfg, int pairs, std::uint64_t seed);

}  // namespace aimlake
