#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "aimlake/expression.hpp"
#include "aimlake/grid.hpp"
#include "aimlake/model.hpp"
#include "aimlake/spectral_operator.hpp"

#include <json.hpp>

namespace aimlake {

/// gamma = int_0^inf t^{-1/2} e^{-t} dt by double-exponential quadrature.
double gamma_quadrature();

/// Independent evaluation of int b (u . grad w) . v for stream coefficient
/// vectors, by direct trigonometric sums on a grid `oversample` times finer.
/// b comes from its expression; grad b from 4th-order central differences.
double quadrature_trilinear(const Grid& grid, const Expression& b, const Eigen::VectorXd& su,
                            const Eigen::VectorXd& sw, const Eigen::VectorXd& sv, int oversample = 4);

/// e^{-G^{-1} S t} in stream coordinates by dense matrix exponential.
Eigen::MatrixXd dense_semigroup(const ConstrainedBasis& basis, double t);

/// max |dense - V diag(e^{-lambda t}) V^T G| / max |dense|.
double semigroup_oracle_error(const ConstrainedBasis& basis, double t);

/// High coordinate z of the invariant graph of the two-mode toy at low
/// coordinate y, by damped fixed-point iteration to 1e-12.
double toy_slave_manifold(const TwoModeToy& toy, double y);

/// JSON oracle values stored as <dir>/<key>.json.
class OracleStore {
 public:
  explicit OracleStore(std::string dir) : dir_(std::move(dir)) {}
  static std::string key_for(const std::string& description);
  std::optional<nlohmann::json> get(const std::string& key) const;
  void put(const std::string& key, const nlohmann::json& value) const;
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
};

}  // namespace aimlake
