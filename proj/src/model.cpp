#include "aimlake/model.hpp"

#include <cmath>
#include <numbers>

#include "aimlake/error.hpp"
#include "aimlake/expression.hpp"

namespace aimlake {

std::string to_string(ForcingKind k) {
  switch (k) {
    case ForcingKind::Zero: return "Zero";
    case ForcingKind::SteadyLowMode: return "SteadyLowMode";
    case ForcingKind::IntegrableL1: return "IntegrableL1";
    case ForcingKind::DerivativeForm: return "DerivativeForm";
  }
  return "Zero";
}

ForcingKind forcing_kind_from(const std::string& name) {
  if (name == "Zero") return ForcingKind::Zero;
  if (name == "SteadyLowMode") return ForcingKind::SteadyLowMode;
  if (name == "IntegrableL1") return ForcingKind::IntegrableL1;
  if (name == "DerivativeForm") return ForcingKind::DerivativeForm;
  throw Error(ErrorKind::ConfigError, "forcing.kind: unknown value '" + name + "'");
}

Eigen::VectorXd unit_mode(int dim, int mode, double amplitude) {
  if (mode < 1 || mode > dim) throw Error(ErrorKind::IndexOutOfRange, "mode " + std::to_string(mode));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  v(mode - 1) = amplitude;
  return v;
}

Forcing::Forcing(const ForcingModel& model, const FieldCore& core, const ConstrainedBasis& basis)
    : model_(model) {
  const Grid& g = core.grid();
  const auto& fields = core.fields();
  switch (model.kind) {
    case ForcingKind::Zero:
      spatial_ = Eigen::VectorXd::Zero(basis.dim);
      f1_ = f2_ = Eigen::ArrayXd::Zero(g.size());
      break;
    case ForcingKind::SteadyLowMode:
    case ForcingKind::IntegrableL1: {
      spatial_ = unit_mode(basis.dim, model.mode, model.amplitude);
      const VelocityField u = to_velocity(core, basis, spatial_);
      f1_ = u.u1;
      f2_ = u.u2;
      break;
    }
    case ForcingKind::DerivativeForm: {
      if (model.g_profile.empty()) throw Error(ErrorKind::ConfigError, "forcing.g_profile: required for DerivativeForm");
      const Eigen::ArrayXd gs = sample_expression(g, Expression::parse(model.g_profile));
      Eigen::ArrayXd gx, gy;
      spectral_gradient(g, gs, gx, gy);
      const double norm = std::sqrt(g.weight() * gx.square().sum());
      if (!(norm > 0)) throw Error(ErrorKind::ConfigError, "forcing.g_profile: d_x g vanishes");
      f1_ = Eigen::ArrayXd::Zero(g.size());
      f2_ = gx / norm;
      // (f, w_k)_b through the stream basis: (f, u_j)_b = int f . grad-perp phi_j.
      spatial_ = basis.eigenvectors.transpose() * core.project(f1_, f2_);
      break;
    }
  }
  spatial_norm_b_ = std::sqrt(g.weight() * (fields.b * (f1_.square() + f2_.square())).sum());
  spatial_norm_l2_ = std::sqrt(g.weight() * (f1_.square() + f2_.square()).sum());
}

double Forcing::profile(double t) const {
  switch (model_.kind) {
    case ForcingKind::Zero: return 0.0;
    case ForcingKind::SteadyLowMode: return 1.0;
    case ForcingKind::IntegrableL1: return std::exp(-model_.decay_kappa * t);
    case ForcingKind::DerivativeForm: {
      const double s = std::numbers::e + t;
      return model_.decay_kappa / (s * s);
    }
  }
  return 0.0;
}

double Forcing::l1_time_norm_b() const {
  switch (model_.kind) {
    case ForcingKind::Zero: return 0.0;
    case ForcingKind::SteadyLowMode: return spatial_norm_b_ == 0.0 ? 0.0 : INFINITY;
    case ForcingKind::IntegrableL1: return spatial_norm_b_ / model_.decay_kappa;
    case ForcingKind::DerivativeForm: return model_.decay_kappa * spatial_norm_b_ / std::numbers::e;
  }
  return 0.0;
}

LakeModel::LakeModel(std::shared_ptr<const FieldCore> core, std::shared_ptr<const ConstrainedBasis> basis,
                     Forcing forcing)
    : core_(std::move(core)), basis_(std::move(basis)), forcing_(std::move(forcing)) {
  require_same_grid(core_->grid(), basis_->grid);
}

Eigen::VectorXd LakeModel::nonlinear(const Eigen::VectorXd& c) const {
  return basis_->eigenvectors.transpose() * core_->advection(to_stream(*basis_, c));
}

VelocityField LakeModel::velocity(const Eigen::VectorXd& c) const { return to_velocity(*core_, *basis_, c); }

LakeModel LakeModel::with_forcing(const ForcingModel& fm) const {
  return LakeModel(core_, basis_, Forcing(fm, *core_, *basis_));
}

TwoModeToy::TwoModeToy(double lambda2, double eta2, double f2, double coupling, double quad)
    : coupling_(coupling), quad_(quad) {
  lambda_ = Eigen::Vector2d(0.0, lambda2);
  force_ = Eigen::Vector2d(0.0, f2);
  friction_ = Eigen::Matrix2d::Zero();
  friction_(1, 1) = eta2;
}

Eigen::VectorXd TwoModeToy::nonlinear(const Eigen::VectorXd& c) const {
  return Eigen::Vector2d(0.0, coupling_ * c(0) * c(1) + quad_ * c(0) * c(0));
}

}  // namespace aimlake
