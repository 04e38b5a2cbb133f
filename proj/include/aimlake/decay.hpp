#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "aimlake/dynamics.hpp"
#include "aimlake/model.hpp"

namespace aimlake {

/// Record indices at times 0 and horizon * 2^-j, j = 0..levels-1 (deduplicated, ascending).
std::vector<std::size_t> dyadic_indices(const std::vector<double>& times, int levels = 8);

struct EnergyPair {
  double s = 0, t = 0;
  double residual = 0;
};

struct ResidualReport {
  std::vector<EnergyPair> pairs;
  double min_residual = 0;
  double initial_energy = 0;  ///< b_s ||u(0)||_2^2
  double tolerance = 0;       ///< tol_rel * initial_energy
  bool pass = false;
};

/// R = b_s ||u(s)||^2 + 2 int (u, f)_b - b_i ||u(t)||^2 - 2 nu_i b_i int ||grad u||^2
/// at dyadic (s, t) pairs; trapezoid in time over the record.
ResidualReport strong_energy_residual(const LakeModel& model, const TrajectoryRecord& traj, double tol_rel = 1e-6);

enum class Mollifier { Identity, Gaussian, HeatEvolved, DeltaMinusGaussian };
Mollifier mollifier_from(const std::string& name);
std::string to_string(Mollifier m);

/// Z(t) = (1 + t)^alpha; alpha = 0 is Z = 1.
struct WeightProfile {
  double alpha = 0.0;
  double Z(double t) const;
  double dZ(double t) const;
};

struct GeneralizedOptions {
  Mollifier mollifier = Mollifier::Gaussian;
  WeightProfile weight;
  double delta_width = 1e4;  ///< n in zeta_n for DeltaMinusGaussian
  double tol_rel = 1e-6;
  int dyadic_levels = 8;
};

/// Residual (right side minus left side) of the generalized inequality with
/// all seven terms taken literally, including the "+" on the
/// nonlinear term. Convolutions are Fourier multipliers on the torus.
ResidualReport generalized_energy_residual(const LakeModel& model, const TrajectoryRecord& traj,
                                           const GeneralizedOptions& opt);

/// Fourier multiplier of psi on the dual lattice; `width` only used by DeltaMinusGaussian.
double mollifier_symbol(Mollifier m, double xi2, double width = 1e4);

/// psi * f for the Gaussian symbol e^{-|xi|^2}, componentwise.
void gaussian_mollify(const Grid& grid, const Eigen::ArrayXd& f1, const Eigen::ArrayXd& f2, Eigen::ArrayXd& g1,
                      Eigen::ArrayXd& g2);

struct SplitEnergy {
  double total = 0;  ///< ||u||_2^2 from the dual lattice
  double low = 0;    ///< sum e^{-2|xi|^2} |u^|^2
  double high = 0;   ///< sum (1 - e^{-|xi|^2})^2 |u^|^2
  double physical = 0;  ///< ||u||_2^2 by grid quadrature
};

SplitEnergy fourier_split(const Grid& grid, const Eigen::ArrayXd& u1, const Eigen::ArrayXd& u2);
SplitEnergy fourier_split(const LakeModel& model, const Eigen::VectorXd& c);

struct SplittingSchedule {
  double alpha = 2.0, b_s = 1.0;
  double Z(double t) const;
  double dZ(double t) const;
  double G2(double t) const;
  /// Z' - 2 b_s Z G^2.
  double residual(double t) const { return dZ(t) - 2.0 * b_s * Z(t) * G2(t); }
};

SplittingSchedule splitting_schedule(double alpha, double b_s);

/// |exp(2 int_0^t g^2) - log^2(e + t)| / log^2(e + t), g^2 = 1 / ((e + s) log(e + s)), by adaptive quadrature.
double log_schedule_error(double t);

struct LpLqReport {
  double q = 1.0;
  std::vector<double> times;
  std::vector<double> constants;   ///< smallest C at each t
  double C = 0;                    ///< max over t
  double stability = 0;            ///< max C / min C across t
  std::vector<double> concentrated_norm;  ///< ||S(t) u0||_2 for the concentrated datum
  double concentrated_slope = 0;   ///< log-log slope of concentrated_norm over the sampled t
};

/// ||S(t) u0||_2 <= C t^{-(1/q - 1/2)} (||u0||_2 + ||u0||_q), S(t) = exp(-(Lambda + E) t).
LpLqReport lp_lq_audit(const LakeModel& model, double q, const std::vector<double>& t_samples, int samples,
                       std::uint64_t seed);

/// Eigencoordinates of a narrow Gaussian stream bump centred in the box.
Eigen::VectorXd concentrated_state(const LakeModel& model, double width);

struct SplitLedgerRow {
  double time = 0, E_total = 0, E_low = 0, E_high = 0, dissipation = 0, work = 0, Z = 0, G2 = 0;
};

struct SplitLedger {
  std::vector<SplitLedgerRow> rows;
  void write_csv(const std::string& path) const;
};

struct DecayFit {
  std::string model;              ///< PowerLaw | LogLaw | Exponential
  double C = 0;                   ///< fitted envelope constant
  double rate = 0;                ///< exponent or rate where applicable
  double r2 = 0;
  int envelope_violations = 0;
};

struct FourierBoundAudit {
  double C = 0;             ///< fitted on the first half of the run
  double u0_l1 = 0;
  long points = 0;
  long violations = 0;
};

struct DecayConfig {
  double horizon = 20.0;
  double dt = 0.01;
  double record_dt = 0.05;
  double alpha = 2.0;
  double initial_radius = 0.1;
  std::uint64_t seed = 11;
  double smallness_C = 1.0;  ///< constant in the small-data check C (1 + ||u0||_2) <= 1/2
};

struct DecayStudy {
  double side_length = 0;
  SplitLedger ledger;
  TrajectoryRecord trajectory;
  DecayFit loglaw;
  DecayFit exponential;
  FourierBoundAudit fourier_bound;
  double quartic_exponent = 0;   ///< best p with int_0^t ||u||^4 <= C (e + t)^p
  bool quartic_monotone = true;
  bool dissipation_monotone = true;  ///< int ||grad u||^2 nondecreasing
  bool energy_monotone_weighted = true;
  bool energy_monotone_l2 = true;
  bool triangle_ok = true;
  double plancherel_error = 0;
  double kappa_cs = 0;          ///< sup b_s^{1/2} ||u||_2
  bool small_data = true;
  double schedule_residual = 0; ///< max |Z' - 2 b_s Z G^2| over records
};

DecayStudy decay_study(const LakeModel& model, const DecayConfig& cfg);

struct EnergyLawReport {
  double initial_energy = 0;
  double residual_coarse = 0;
  double residual_fine = 0;
  double residual_richardson = 0;
  double relative = 0;  ///< |richardson| / initial_energy
};

/// |c(T)|^2 - |c(0)|^2 + 2 int (lambda c.c + c.Ec - c.F) at dt and dt/2, Richardson-combined.
EnergyLawReport energy_law(const GalerkinModel& model, const Eigen::VectorXd& c0, double dt, double horizon);

}  // namespace aimlake
