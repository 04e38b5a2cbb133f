#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "aimlake/model.hpp"
#include "aimlake/spectral_operator.hpp"

namespace aimlake {

/// theta(s) = 1 - smoothstep(s - 1): 1 on [0, 1], 0 on [2, inf), C^1, nonincreasing.
double theta_profile(double s);

struct PreparedNonlinearity {
  double rho1 = 1.0;
  double theta(double s) const { return theta_profile(s); }
};

Eigen::VectorXd rhs_B(const GalerkinModel& model, const Eigen::VectorXd& c);
Eigen::VectorXd rhs_B_theta(const GalerkinModel& model, const Eigen::VectorXd& c,
                            const PreparedNonlinearity& prep);

struct StepOptions {
  bool nonlinear = true;
  bool friction = true;
  std::optional<PreparedNonlinearity> prep;
};

/// Everything but -Lambda c: -E c - B(c) + F(t).
Eigen::VectorXd explicit_part(const GalerkinModel& model, const Eigen::VectorXd& c, double t,
                              const StepOptions& opt);
/// Full right-hand side du/dt.
Eigen::VectorXd time_derivative(const GalerkinModel& model, const Eigen::VectorXd& c, double t,
                                const StepOptions& opt);

/// One integrating-factor RK2 step from (c, t); A is integrated exactly.
Eigen::VectorXd step(const GalerkinModel& model, const Eigen::VectorXd& c, double t, double dt,
                     const StepOptions& opt);

struct LedgerRow {
  double time = 0;
  double norm_h = 0;       ///< |u|_b
  double norm_v = 0;       ///< ||u||_b
  double dissipation = 0;  ///< stress_form(u, u)
  double friction = 0;     ///< int b eta |u|^2
  double work = 0;         ///< (u, f)_b
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<LedgerRow> ledger;

  void write_csv(const std::string& path) const;
};

struct IntegrateOptions {
  double dt = 0.01;
  double horizon = 1.0;
  int record_every = 1;
  StepOptions step;
};

/// Integrates from c0 at t0; records every record_every steps plus the end.
/// Throws BlowUp when |u|_b exceeds 1e6 max(|c0|, 1) or becomes non-finite.
TrajectoryRecord integrate(const GalerkinModel& model, const Eigen::VectorXd& c0, double t0,
                           const IntegrateOptions& opt);

LedgerRow ledger_row(const GalerkinModel& model, const Eigen::VectorXd& c, double t);

/// Random smooth state with coefficients ~ N(0, 1) / (1 + lambda_k), scaled to |u|_b = radius.
Eigen::VectorXd random_state(const GalerkinModel& model, double radius, std::uint64_t seed);
/// Same profile scaled to a given V-norm.
Eigen::VectorXd random_state_v(const GalerkinModel& model, double vnorm, std::uint64_t seed);

struct EnsembleConfig {
  int ensemble_size = 4;
  double initial_radius = 1.0;
  double horizon = 40.0;
  double dt = 0.01;
  double margin = 0.1;
  int cutoff_samples = 1000;
  int lipschitz_pairs = 1000;
  std::uint64_t seed = 1;
};

struct AbsorbingEstimates {
  double rho0 = 0, rho1 = 0, t0 = 0;
  double M0 = 0;
  double M1 = 0, M1_p99 = 0, M1_max = 0;
  double beta1 = 0, beta2 = 0;
  double alpha = 0;
  bool alpha_empirical = true;
  bool absorbed = true;
  std::string note;
  /// Late-time states of every member (the attractor proxy pool).
  std::vector<Eigen::VectorXd> late_states;
};

AbsorbingEstimates estimate_absorbing(const GalerkinModel& model, const EnsembleConfig& cfg);

/// Fills M0 and M1 by sampling the 2 rho1 ball and the late states.
void estimate_cutoff_constants(const GalerkinModel& model, AbsorbingEstimates& est, const EnsembleConfig& cfg);

struct SampleConfig {
  int n_samples = 40;
  double spinup = 20.0;
  double spacing = 1.0;
  double dt = 0.01;
  std::uint64_t seed = 7;
  double initial_radius = 1.0;
};

/// States along one trajectory after spinup, spaced `spacing` apart.
/// Throws NoAbsorption when est.absorbed is false or spinup < est.t0.
std::vector<SpectralState> sample_attractor(const GalerkinModel& model, const AbsorbingEstimates& est,
                                            const SampleConfig& cfg);

}  // namespace aimlake
