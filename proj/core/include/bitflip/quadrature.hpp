#pragma once

#include <functional>
#include <span>

namespace bitflip {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

struct QuadratureOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-14;
  int max_subintervals = 4000;
};

/// Globally adaptive Gauss-Kronrod (7/15) quadrature over the consecutive
/// panels [b_0, b_1], [b_1, b_2], ... given by `breakpoints` (increasing, at
/// least two). The panel with the largest error estimate is bisected until
/// the total error is below max(abs_tol, rel_tol * |value|).
QuadratureResult integrate(const std::function<double(double)>& f,
                           std::span<const double> breakpoints,
                           const QuadratureOptions& options = {});

}  // namespace bitflip
