#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "aimlake/fft.hpp"
#include "aimlake/grid.hpp"

namespace aimlake {

/// One real stream basis function: cos(k.x) or sin(k.x) with k = 2 pi (k1, k2) / L
/// taken from the half lattice (k1 > 0, or k1 = 0 and k2 > 0).
struct StreamMode {
  int k1 = 0;
  int k2 = 0;
  bool sine = false;
};

/// Modes with max(|k1|,|k2|) <= K in lexicographic (k1, k2) order, cos before sin.
std::vector<StreamMode> stream_modes(int cutoff);

/// 2-component velocity sampled on the grid. Gradients are optional; when
/// missing they are taken spectrally from the samples.
struct VelocityField {
  Grid grid;
  Eigen::ArrayXd u1, u2;
  Eigen::ArrayXd u1x, u1y, u2x, u2y;
  bool has_gradient = false;
  bool constrained = false;

  static VelocityField from_samples(const Grid& grid, Eigen::ArrayXd u1, Eigen::ArrayXd u2);
  static VelocityField zero(const Grid& grid);
  void ensure_gradient();
};

/// Stream function on the retained modes: real coefficients of cos/sin in
/// stream_modes order (equivalent to Hermitian psi_hat with no mean).
struct StreamState {
  Grid grid;
  Eigen::VectorXd coeffs;

  /// Complex coefficient of exp(i k.x) for mode pair index p (see stream_modes).
  cplx psi_hat(int k1, int k2) const;
};

/// Precomputed spectral machinery for one set of coefficient fields.
/// All methods are const and thread-safe.
class FieldCore {
 public:
  explicit FieldCore(const CoefficientFields& fields);

  const CoefficientFields& fields() const { return *fields_; }
  const Grid& grid() const { return fields_->grid; }
  const std::vector<StreamMode>& modes() const { return modes_; }
  int dim() const { return static_cast<int>(modes_.size()); }

  /// u = b^-1 grad-perp psi with pointwise product-rule gradient.
  VelocityField velocity(const Eigen::VectorXd& stream) const;

  /// Stream-basis components p_j = int g . grad-perp phi_j (grid trapezoid),
  /// i.e. (g, u_j)_b for the basis velocity u_j.
  Eigen::VectorXd project(const Eigen::ArrayXd& g1, const Eigen::ArrayXd& g2) const;

  /// Stream-basis components of (u . grad u, u_j)_b.
  Eigen::VectorXd advection(const Eigen::VectorXd& stream) const;

  /// Stream-basis components of (u . grad w, u_j)_b.
  Eigen::VectorXd advection(const VelocityField& u, const VelocityField& w) const;

  /// Inverse of velocity() on retained modes via the spectral curl of b u.
  Eigen::VectorXd stream_of(const VelocityField& u) const;

  /// max over retained modes |k . (b u)^(k)| / rms(b u).
  double weighted_divergence(const VelocityField& u) const;

 private:
  std::shared_ptr<const CoefficientFields> fields_;
  std::vector<StreamMode> modes_;
  std::shared_ptr<Fft2> fft_;
};

double inner_b(const VelocityField& u, const VelocityField& v, const CoefficientFields& fields);
/// Squared weighted seminorm int b |grad u|^2.
double h1_seminorm_b(VelocityField u, const CoefficientFields& fields);
double stress_form(VelocityField u, VelocityField v, const CoefficientFields& fields);
double trilinear_b(const VelocityField& u, VelocityField w, const VelocityField& v,
                   const CoefficientFields& fields);
/// Unweighted L2 and H1-seminorm squares, used by the decay harness.
double l2_norm_sq(const VelocityField& u);
double h1_norm_sq(VelocityField u);

VelocityField stream_to_velocity(const StreamState& s, const CoefficientFields& fields);
StreamState velocity_to_stream(const VelocityField& u, const CoefficientFields& fields);

}  // namespace aimlake
