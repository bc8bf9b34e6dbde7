#include "bitflip/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace bitflip {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double kolmogorov_pvalue(double d, double n) {
  if (!(n > 0.0)) throw std::domain_error("kolmogorov_pvalue: n must be positive");
  const double root = std::sqrt(n);
  const double lambda = (root + 0.12 + 0.11 / root) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16 * sum) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double chi_square_sf(double x, double dof) {
  if (!(dof > 0.0)) throw std::domain_error("chi_square_sf: dof must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::domain_error("ks_one_sample: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, kolmogorov_pvalue(d, n)};
}

KsResult ks_normal(std::vector<double> sample) { return ks_one_sample(std::move(sample), normal_cdf); }

KsResult ks_uniform(std::vector<double> sample) {
  return ks_one_sample(std::move(sample), [](double x) { return std::clamp(x, 0.0, 1.0); });
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::domain_error("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, kolmogorov_pvalue(d, na * nb / (na + nb))};
}

ChiSquareResult chi_square_gof(std::span<const std::size_t> observed, std::span<const double> expected,
                               std::size_t n) {
  if (observed.size() != expected.size() || observed.empty()) {
    throw std::invalid_argument("chi_square_gof: observed and expected must be non-empty and equal length");
  }
  if (n == 0) throw std::domain_error("chi_square_gof: n must be positive");
  const double total = static_cast<double>(n);
  ChiSquareResult out;
  double mass = 0.0;
  std::size_t counted = 0;
  int cells = 0;
  auto add = [&](double obs, double prob) {
    const double e = prob * total;
    out.statistic += (obs - e) * (obs - e) / e;
    ++cells;
  };
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0)) throw std::domain_error("chi_square_gof: expected probabilities must be positive");
    add(static_cast<double>(observed[i]), expected[i]);
    mass += expected[i];
    counted += observed[i];
  }
  if (counted > n) throw std::domain_error("chi_square_gof: observed counts exceed n");
  const double rest = 1.0 - mass;
  if (rest > 1e-12) add(static_cast<double>(n - counted), rest);
  out.dof = cells - 1;
  out.p_value = out.dof > 0 ? chi_square_sf(out.statistic, out.dof) : 1.0;
  return out;
}

SampleMoments sample_moments(std::span<const double> x) {
  SampleMoments m;
  m.n = x.size();
  if (m.n < 2) throw std::domain_error("sample_moments: need at least two values");
  const double n = static_cast<double>(m.n);
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.variance = m2 * n / (n - 1.0);
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw std::domain_error("least_squares: need >= 3 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::domain_error("least_squares: x values are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  fit.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

}  // namespace bitflip
