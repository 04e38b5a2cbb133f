#include "aimlake/grid.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <vector>
#include <algorithm>

#include "aimlake/error.hpp"
#include "aimlake/fft.hpp"

namespace aimlake {

Grid Grid::make(double side_length, int points, int cutoff) {
  if (!(side_length > 0.0) || !std::isfinite(side_length)) {
    throw Error(ErrorKind::InvalidGrid, "side_length must be positive");
  }
  if (cutoff < 1) throw Error(ErrorKind::InvalidGrid, "mode cutoff K must be >= 1");
  if (points < 4 || (points & (points - 1)) != 0) {
    throw Error(ErrorKind::InvalidGrid, "points_per_side must be a power of two");
  }
  if (points < 4 * cutoff + 2) {
    throw Error(ErrorKind::InvalidGrid, "points_per_side " + std::to_string(points) +
                                            " < 4K+2 = " + std::to_string(4 * cutoff + 2));
  }
  return Grid{side_length, points, cutoff};
}

double Grid::wavenumber(int k) const { return 2.0 * std::numbers::pi * k / side_length; }

void require_same_grid(const Grid& a, const Grid& b) {
  if (a != b) throw Error(ErrorKind::GridMismatch, "fields live on different grids");
}

Eigen::ArrayXd sample_expression(const Grid& grid, const Expression& expr) {
  const int m = grid.points;
  Eigen::ArrayXd out(grid.size());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      out(i * m + j) = expr.at(grid.coord(i), grid.coord(j), grid.side_length);
    }
  }
  return out;
}

Eigen::ArrayXd sample_source(const Grid& grid, const FieldSource& source, const std::string& key) {
  if (!source.table_path.empty()) {
    if (!std::filesystem::exists(source.table_path)) {
      throw Error(ErrorKind::ConfigError, key + ": table file not found: " + source.table_path);
    }
    return read_table(source.table_path, grid);
  }
  if (source.expression.empty()) throw Error(ErrorKind::ConfigError, key + ": missing field");
  return sample_expression(grid, Expression::parse(source.expression));
}

Eigen::ArrayXd read_table(const std::string& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open table " + path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string hash, word;
  int tm = 0;
  double tl = 0.0;
  hs >> hash >> word >> tm >> tl;
  if (hash != "#" || word != "grid" || tm < 2 || !(tl > 0)) {
    throw Error(ErrorKind::ParseError, path + ": expected header '# grid M L'");
  }
  if (std::abs(tl - grid.side_length) > 1e-9 * grid.side_length) {
    throw Error(ErrorKind::GridMismatch, path + ": table side length differs from scenario grid");
  }
  Eigen::ArrayXd table(tm * tm);
  std::string line;
  int row = 0;
  while (row < tm && std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    for (int j = 0; j < tm; ++j) {
      if (!(ls >> table(row * tm + j))) {
        throw Error(ErrorKind::ParseError, path + ": short row " + std::to_string(row));
      }
    }
    ++row;
  }
  if (row != tm) throw Error(ErrorKind::ParseError, path + ": expected " + std::to_string(tm) + " rows");
  if (tm == grid.points) return table;

  // Trigonometric interpolation: FFT on the table grid, then evaluate the
  // series at the target samples. A Nyquist column stands for cos(N x).
  Fft2 fft(tm);
  CArray in_c(table.size()), spec;
  for (int p = 0; p < table.size(); ++p) in_c[p] = table(p);
  fft.forward(in_c, spec);
  const int m = grid.points;
  const double two_pi_l = 2.0 * std::numbers::pi / grid.side_length;
  std::vector<cplx> basis(static_cast<std::size_t>(tm) * m);
  for (int a = 0; a < tm; ++a) {
    const int k = signed_freq(a, tm);
    for (int i = 0; i < m; ++i) {
      const double ph = two_pi_l * k * grid.coord(i);
      basis[a * m + i] = (2 * k == -tm) ? cplx(std::cos(ph), 0.0) : std::polar(1.0, ph);
    }
  }
  std::vector<cplx> partial(static_cast<std::size_t>(tm) * m, 0.0);
  for (int a = 0; a < tm; ++a) {
    for (int j = 0; j < m; ++j) {
      cplx s = 0.0;
      for (int c = 0; c < tm; ++c) s += spec[a * tm + c] * basis[c * m + j];
      partial[a * m + j] = s / (double(tm) * tm);
    }
  }
  Eigen::ArrayXd out(grid.size());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      cplx s = 0.0;
      for (int a = 0; a < tm; ++a) s += basis[a * m + i] * partial[a * m + j];
      out(i * m + j) = s.real();
    }
  }
  return out;
}

void write_table(const std::string& path, const Grid& grid, const Eigen::ArrayXd& values) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write table " + path);
  out << "# grid " << grid.points << ' ' << std::setprecision(17) << grid.side_length << '\n';
  const int m = grid.points;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) out << (j ? "," : "") << values(i * m + j);
    out << '\n';
  }
}

void spectral_gradient(const Grid& grid, const Eigen::ArrayXd& f, Eigen::ArrayXd& fx,
                       Eigen::ArrayXd& fy) {
  const int m = grid.points;
  Fft2 fft(m);
  CArray in(grid.size()), spec, pack(grid.size()), out;
  for (int p = 0; p < grid.size(); ++p) in[p] = f(p);
  fft.forward(in, spec);
  const double norm = 1.0 / (double(m) * m);
  for (int a = 0; a < m; ++a) {
    const int k1 = signed_freq(a, m);
    for (int c = 0; c < m; ++c) {
      const int k2 = signed_freq(c, m);
      const cplx s = spec[a * m + c] * norm;
      const double w1 = (2 * k1 == -m) ? 0.0 : grid.wavenumber(k1);
      const double w2 = (2 * k2 == -m) ? 0.0 : grid.wavenumber(k2);
      // fx + i fy packed into one inverse transform.
      pack[a * m + c] = cplx(0, w1) * s + cplx(0, 1) * cplx(0, w2) * s;
    }
  }
  fft.backward(pack, out);
  fx.resize(grid.size());
  fy.resize(grid.size());
  for (int p = 0; p < grid.size(); ++p) {
    fx(p) = out[p].real();
    fy(p) = out[p].imag();
  }
}

CoefficientFields make_fields(const Grid& grid, Eigen::ArrayXd b, Eigen::ArrayXd nu,
                              Eigen::ArrayXd eta) {
  if (b.size() != grid.size() || nu.size() != grid.size() || eta.size() != grid.size()) {
    throw Error(ErrorKind::GridMismatch, "field sample count differs from grid");
  }
  if (!b.allFinite() || !nu.allFinite() || !eta.allFinite()) {
    throw Error(ErrorKind::ConfigError, "field samples are not finite");
  }
  CoefficientFields f;
  f.grid = grid;
  f.b_i = b.minCoeff();
  f.b_s = b.maxCoeff();
  if (f.b_i <= 0.0) throw Error(ErrorKind::NonPositiveDepth, "min b = " + std::to_string(f.b_i));
  f.nu_i = nu.minCoeff();
  if (f.nu_i <= 0.0) throw Error(ErrorKind::NonPositiveViscosity, "min nu = " + std::to_string(f.nu_i));
  if (eta.minCoeff() < 0.0) throw Error(ErrorKind::ConfigError, "eta must be nonnegative");
  f.b_bar = f.b_i / f.b_s;
  f.eta_bar = eta.maxCoeff();
  spectral_gradient(grid, b, f.bx, f.by);
  f.b = std::move(b);
  f.nu = std::move(nu);
  f.eta = std::move(eta);
  return f;
}

CoefficientFields sample_fields(const Grid& grid, const FieldSource& b, const FieldSource& nu,
                                const FieldSource& eta) {
  return make_fields(grid, sample_source(grid, b, "fields.b"), sample_source(grid, nu, "fields.nu"),
                     sample_source(grid, eta, "fields.eta"));
}

}  // namespace aimlake
