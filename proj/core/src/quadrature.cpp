#include "bitflip/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

namespace bitflip {
namespace {

constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel gauss_kronrod(const std::function<double(double)>& f, double a, double b, int& evals) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[static_cast<std::size_t>(i)];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[static_cast<std::size_t>(i)] * sum;
    if (i % 2 == 1) gauss += kGaussWeights[static_cast<std::size_t>(i / 2)] * sum;
  }
  evals += 15;
  return Panel{a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f,
                           std::span<const double> breakpoints,
                           const QuadratureOptions& options) {
  if (breakpoints.size() < 2) throw std::invalid_argument("integrate: need at least two breakpoints");
  QuadratureResult out;
  std::priority_queue<Panel> panels;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i + 1] > breakpoints[i])) {
      throw std::invalid_argument("integrate: breakpoints must be increasing");
    }
    panels.push(gauss_kronrod(f, breakpoints[i], breakpoints[i + 1], out.evaluations));
  }

  // Totals are recomputed from the queue now and then to shed the rounding
  // drift of repeated incremental updates.
  auto totals = [&panels]() {
    auto copy = panels;
    double value = 0.0, error = 0.0;
    while (!copy.empty()) {
      value += copy.top().value;
      error += copy.top().error;
      copy.pop();
    }
    return std::pair{value, error};
  };

  auto [value, error] = totals();
  int bisections = 0;
  while (error > std::max(options.abs_tol, options.rel_tol * std::abs(value)) &&
         static_cast<int>(panels.size()) < options.max_subintervals) {
    const Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      panels.push(worst);
      break;
    }
    const Panel left = gauss_kronrod(f, worst.a, mid, out.evaluations);
    const Panel right = gauss_kronrod(f, mid, worst.b, out.evaluations);
    panels.push(left);
    panels.push(right);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    if (++bisections % 64 == 0) std::tie(value, error) = totals();
  }
  std::tie(value, error) = totals();
  out.value = value;
  out.error = error;
  out.converged = error <= std::max(options.abs_tol, options.rel_tol * std::abs(value));
  return out;
}

}  // namespace bitflip
