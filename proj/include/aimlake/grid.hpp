#pragma once

#include <Eigen/Dense>
#include <string>

#include "aimlake/expression.hpp"

namespace aimlake {

/// Square periodic box [0, L)^2 sampled on M x M points, keeping Fourier modes
/// with max(|k1|, |k2|) <= K. Sample (i, j) sits at x = i*L/M, y = j*L/M and is
/// stored at flat index i*M + j.
struct Grid {
  double side_length = 0.0;
  int points = 0;
  int cutoff = 0;

  /// Validates L > 0, M a power of two, M >= 4K+2, K >= 1.
  static Grid make(double side_length, int points, int cutoff);

  int size() const { return points * points; }
  double spacing() const { return side_length / points; }
  double weight() const { return spacing() * spacing(); }
  double coord(int i) const { return i * spacing(); }
  double wavenumber(int k) const;
  double area() const { return side_length * side_length; }

  bool operator==(const Grid& o) const {
    return side_length == o.side_length && points == o.points && cutoff == o.cutoff;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

void require_same_grid(const Grid& a, const Grid& b);

/// Where a coefficient field comes from: a closed-form expression in x, y, L
/// or a CSV table path.
struct FieldSource {
  std::string expression;
  std::string table_path;
};

/// Sampled b, nu, eta and their extrema. bx, by are spectral derivatives of b.
struct CoefficientFields {
  Grid grid;
  Eigen::ArrayXd b, nu, eta, bx, by;
  double b_i = 0, b_s = 0, b_bar = 0, nu_i = 0, eta_bar = 0;
};

Eigen::ArrayXd sample_expression(const Grid& grid, const Expression& expr);
Eigen::ArrayXd sample_source(const Grid& grid, const FieldSource& source, const std::string& key);

/// Reads an M x M row-major CSV whose first line is `# grid M L` and
/// resamples it onto `grid` by trigonometric interpolation.
Eigen::ArrayXd read_table(const std::string& path, const Grid& grid);
void write_table(const std::string& path, const Grid& grid, const Eigen::ArrayXd& values);

/// Builds fields from samples; throws NonPositiveDepth / NonPositiveViscosity.
CoefficientFields make_fields(const Grid& grid, Eigen::ArrayXd b, Eigen::ArrayXd nu,
                              Eigen::ArrayXd eta);

CoefficientFields sample_fields(const Grid& grid, const FieldSource& b, const FieldSource& nu,
                                const FieldSource& eta);

/// Spectral x/y derivatives of a real periodic sample array (Nyquist dropped).
void spectral_gradient(const Grid& grid, const Eigen::ArrayXd& f, Eigen::ArrayXd& fx,
                       Eigen::ArrayXd& fy);

}  // namespace aimlake
