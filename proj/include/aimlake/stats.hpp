#pragma once

#include <vector>

namespace aimlake {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Linear-interpolated percentile, p in [0, 100].
double percentile(std::vector<double> values, double p);

double max_of(const std::vector<double>& v);

/// Trapezoid cumulative integral of samples y(t); out[0] = 0.
std::vector<double> cumulative_trapezoid(const std::vector<double>& t, const std::vector<double>& y);

}  // namespace aimlake
