#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "aimlake/field_core.hpp"
#include "aimlake/grid.hpp"

namespace aimlake {

/// Scalar summaries of the coefficient fields carried alongside the basis.
struct FieldScalars {
  double b_i = 1, b_s = 1, b_bar = 1, nu_i = 1, eta_bar = 0;
};

FieldScalars scalars_of(const CoefficientFields& f);

/// Eigenpairs of A on the weighted-divergence-free subspace, parametrized by
/// the stream basis. Stream-basis matrices are D x D; eigenvector columns are
/// gram-orthonormal. The *_e matrices are the same forms in eigencoordinates.
struct ConstrainedBasis {
  Grid grid;
  int dim = 0;
  std::vector<StreamMode> modes;
  FieldScalars scalars;

  Eigen::MatrixXd gram;       ///< int b u_i . u_j
  Eigen::MatrixXd stiffness;  ///< stress_form(u_i, u_j)
  Eigen::MatrixXd h1b;        ///< int b grad u_i : grad u_j
  Eigen::MatrixXd l2;         ///< int u_i . u_j
  Eigen::MatrixXd h1;         ///< int grad u_i : grad u_j
  Eigen::MatrixXd friction;   ///< int b eta u_i . u_j

  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  Eigen::MatrixXd metric_v_e;   ///< ||.||_b^2 in eigencoordinates
  Eigen::MatrixXd metric_l2_e;  ///< unweighted L2
  Eigen::MatrixXd metric_h1_e;  ///< unweighted H1 seminorm
  Eigen::MatrixXd friction_e;   ///< (eta w_j, w_k)_b

  double poincare = 0.0;        ///< Pi with |u|_b <= Pi ||u||_b
  double gram_condition = 0.0;
  std::string hash;
  std::vector<int> zero_gap_cuts;  ///< n (1-based) with lambda_n == lambda_{n+1}

  /// Dominant stream-mode index of eigenvector k.
  int dominant_mode(int k) const;
};

/// Content hash of (grid, sampled fields) used as the basis cache key.
std::string basis_hash(const CoefficientFields& fields);

/// Dense generalized symmetric eigensolve; throws SingularGram when cond(gram) > 1e12.
ConstrainedBasis build_basis(const CoefficientFields& fields);

/// Loads from `dir/<hash>.basis` when present, otherwise builds and stores it.
/// An empty dir disables caching.
ConstrainedBasis load_or_build_basis(const CoefficientFields& fields, const std::string& dir);
void save_basis(const ConstrainedBasis& basis, const std::string& path);
ConstrainedBasis load_basis(const std::string& path);

enum class Part { Low, High };

struct SpectralState {
  Eigen::VectorXd coeffs;
  double time = 0.0;
};

double norm_h(const SpectralState& s);
/// sqrt(sum lambda_k c_k^2), the energy norm of A.
double norm_a(const ConstrainedBasis& basis, const SpectralState& s);
/// ||u||_b = (int b |grad u|^2)^{1/2}.
double norm_v(const ConstrainedBasis& basis, const SpectralState& s);
double norm_v(const ConstrainedBasis& basis, const Eigen::VectorXd& c);

SpectralState project(const SpectralState& s, int n, Part part);
SpectralState semigroup_apply(const ConstrainedBasis& basis, const SpectralState& s, double t);
SpectralState apply_A(const ConstrainedBasis& basis, const SpectralState& s);
SpectralState apply_A_inverse(const ConstrainedBasis& basis, const SpectralState& s);

/// Stream coefficients of an eigencoordinate state.
Eigen::VectorXd to_stream(const ConstrainedBasis& basis, const Eigen::VectorXd& c);
VelocityField to_velocity(const FieldCore& core, const ConstrainedBasis& basis, const Eigen::VectorXd& c);

struct BoundCheck {
  std::string name;
  int n = 0;
  double t = 0.0;
  double tau = 0.0;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// H -> V norm of e^{-At} Q_n against b_bar^{-1/2}((nu_i t)^{-1/2} + lambda_{n+1}^{1/2}) e^{-lambda_{n+1} t}.
BoundCheck semigroup_bound_check(const ConstrainedBasis& basis, int n, double t);

/// V-norm of (I + tau A) P_n against 1 + tau lambda_n and e^{tau lambda_n}, and
/// the P_n H -> P_n V embedding against (b_bar nu_i / lambda_n)^{-1/2}.
std::vector<BoundCheck> resolvent_bounds_audit(const ConstrainedBasis& basis, int n, double tau);

/// Least-squares slope / R^2 of lambda_n vs n over n in [D/4, 3D/4].
struct WeylFit {
  double slope = 0.0;
  double r2 = 0.0;
};
WeylFit weyl_fit(const ConstrainedBasis& basis);

}  // namespace aimlake
