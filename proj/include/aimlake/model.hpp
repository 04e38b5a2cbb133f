#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

#include "aimlake/field_core.hpp"
#include "aimlake/spectral_operator.hpp"

namespace aimlake {

enum class ForcingKind { Zero, SteadyLowMode, IntegrableL1, DerivativeForm };

std::string to_string(ForcingKind k);
ForcingKind forcing_kind_from(const std::string& name);

/// Separable forcing f(x, t) = s(t) f_spatial(x).
///   Zero            f = 0
///   SteadyLowMode   f = amplitude * w_mode
///   IntegrableL1    f = exp(-kappa t) * amplitude * w_mode
///   DerivativeForm  f = kappa (e + t)^-2 (0, d_x g) / ||d_x g||_2
struct ForcingModel {
  ForcingKind kind = ForcingKind::Zero;
  double amplitude = 0.0;
  double decay_kappa = 0.0;
  int mode = 1;                ///< 1-based eigen index for the mode-based kinds
  std::string g_profile;       ///< expression in x, y, L for DerivativeForm
};

/// ForcingModel resolved against a basis: eigencoordinate projection of the
/// spatial part, its physical samples and norms.
class Forcing {
 public:
  Forcing() = default;
  Forcing(const ForcingModel& model, const FieldCore& core, const ConstrainedBasis& basis);

  const ForcingModel& model() const { return model_; }
  double profile(double t) const;
  Eigen::VectorXd coeffs(double t) const { return profile(t) * spatial_; }
  const Eigen::VectorXd& spatial_coeffs() const { return spatial_; }
  /// |f(t)|_b and ||f(t)||_2 of the physical field.
  double norm_b(double t) const { return std::abs(profile(t)) * spatial_norm_b_; }
  double norm_l2(double t) const { return std::abs(profile(t)) * spatial_norm_l2_; }
  /// Closed-form int_0^inf |f|_b dt (infinite for SteadyLowMode).
  double l1_time_norm_b() const;
  const Eigen::ArrayXd& f1() const { return f1_; }
  const Eigen::ArrayXd& f2() const { return f2_; }
  bool is_zero() const { return model_.kind == ForcingKind::Zero; }

 private:
  ForcingModel model_;
  Eigen::VectorXd spatial_;
  Eigen::ArrayXd f1_, f2_;
  double spatial_norm_b_ = 0.0;
  double spatial_norm_l2_ = 0.0;
};

/// Abstract Galerkin system in eigencoordinates:
///   c' = -Lambda c - E c - b(c) + F(t),  b(c)_k = (B(u,u), w_k)_b.
class GalerkinModel {
 public:
  virtual ~GalerkinModel() = default;
  virtual int dim() const = 0;
  virtual const Eigen::VectorXd& eigenvalues() const = 0;
  virtual Eigen::VectorXd nonlinear(const Eigen::VectorXd& c) const = 0;
  virtual const Eigen::MatrixXd& friction() const = 0;
  virtual Eigen::VectorXd forcing(double t) const = 0;
  virtual double forcing_norm(double t) const = 0;
  /// ||.||_b (V) norm; |.|_b (H) is the Euclidean norm of the coefficients.
  virtual double norm_v(const Eigen::VectorXd& c) const = 0;
  virtual double poincare() const = 0;
  virtual FieldScalars scalars() const = 0;
};

/// The lake system on a ConstrainedBasis.
class LakeModel : public GalerkinModel {
 public:
  LakeModel(std::shared_ptr<const FieldCore> core, std::shared_ptr<const ConstrainedBasis> basis,
            Forcing forcing);

  int dim() const override { return basis_->dim; }
  const Eigen::VectorXd& eigenvalues() const override { return basis_->eigenvalues; }
  Eigen::VectorXd nonlinear(const Eigen::VectorXd& c) const override;
  const Eigen::MatrixXd& friction() const override { return basis_->friction_e; }
  Eigen::VectorXd forcing(double t) const override { return forcing_.coeffs(t); }
  double forcing_norm(double t) const override { return forcing_.norm_b(t); }
  double norm_v(const Eigen::VectorXd& c) const override { return aimlake::norm_v(*basis_, c); }
  double poincare() const override { return basis_->poincare; }
  FieldScalars scalars() const override { return basis_->scalars; }

  const FieldCore& core() const { return *core_; }
  const ConstrainedBasis& basis() const { return *basis_; }
  const Forcing& forcing_model() const { return forcing_; }
  VelocityField velocity(const Eigen::VectorXd& c) const;
  /// Replaces the forcing while sharing core and basis.
  LakeModel with_forcing(const ForcingModel& fm) const;

 private:
  std::shared_ptr<const FieldCore> core_;
  std::shared_ptr<const ConstrainedBasis> basis_;
  Forcing forcing_;
};

/// Two-mode abstract system with a frozen low mode:
///   lambda = (0, lambda2), E = diag(0, eta2), F = (0, f2),
///   b(y, z) = (0, coupling * y * z + quad * y^2).
/// The low coordinate is invariant, so the balance manifold
/// lambda2 z + eta2 z + b2(y, z) = f2 is exactly the invariant graph.
class TwoModeToy : public GalerkinModel {
 public:
  TwoModeToy(double lambda2, double eta2, double f2, double coupling, double quad);

  int dim() const override { return 2; }
  const Eigen::VectorXd& eigenvalues() const override { return lambda_; }
  Eigen::VectorXd nonlinear(const Eigen::VectorXd& c) const override;
  const Eigen::MatrixXd& friction() const override { return friction_; }
  Eigen::VectorXd forcing(double) const override { return force_; }
  double forcing_norm(double) const override { return force_.norm(); }
  double norm_v(const Eigen::VectorXd& c) const override { return c.norm(); }
  double poincare() const override { return 1.0; }
  FieldScalars scalars() const override { return {}; }

  double lambda2() const { return lambda_(1); }
  double eta2() const { return friction_(1, 1); }
  double f2() const { return force_(1); }
  double coupling() const { return coupling_; }
  double quad() const { return quad_; }

 private:
  Eigen::VectorXd lambda_, force_;
  Eigen::MatrixXd friction_;
  double coupling_, quad_;
};

/// Builds the eigencoordinate vector with amplitude on one mode (1-based).
Eigen::VectorXd unit_mode(int dim, int mode, double amplitude = 1.0);

}  // namespace aimlake
