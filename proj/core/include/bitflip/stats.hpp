#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bitflip {

double normal_cdf(double x);

/// Asymptotic P(D > d) for the Kolmogorov statistic with Stephens'
/// small-sample correction; n is the (effective) sample size.
double kolmogorov_pvalue(double d, double n);

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chi_square_sf(double x, double dof);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// sup |F_n - F| against a continuous cdf. Ties are handled exactly: the
/// supremum is taken on both sides of every jump of F_n.
KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);
KsResult ks_normal(std::vector<double> sample);
KsResult ks_uniform(std::vector<double> sample);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Pearson goodness of fit. `expected` holds probabilities for the listed
/// cells; the remaining mass 1 - sum(expected) and the count n - sum(observed)
/// form one extra cell when that mass is positive.
ChiSquareResult chi_square_gof(std::span<const std::size_t> observed, std::span<const double> expected,
                               std::size_t n);

struct SampleMoments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

SampleMoments sample_moments(std::span<const double> x);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

/// Ordinary least squares y = intercept + slope x; needs at least 3 points.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace bitflip
