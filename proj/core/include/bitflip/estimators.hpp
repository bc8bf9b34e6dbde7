#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bitflip/distributions.hpp"
#include "bitflip/engine.hpp"

namespace bitflip {

/// E tau^r over uncensored samples, on all of them and on the first tenth.
struct FractionalMoment {
  double r = 0.0;
  double estimate = 0.0;
  double subsample_estimate = 0.0;
  /// |estimate / subsample_estimate - 1|.
  double relative_change = 0.0;
};

struct TailIndex {
  double theta = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t k = 0;           // order statistics used
  std::size_t exceedances = 0; // uncensored among them
  /// Slope of log survival vs log x over the same order statistics, negated.
  double regression_theta = 0.0;
  /// False when theta is above kHeavyTailLimit (looks exponential-like).
  bool heavy = true;
};

inline constexpr double kHeavyTailLimit = 3.0;

struct EstimatorSummary {
  std::size_t n_samples = 0;
  double censored_fraction = 0.0;
  std::optional<double> mean;
  std::optional<double> subsample_mean;
  /// Mean over all samples moved by more than 10% from the first-tenth mean.
  bool mean_unstable = false;
  std::vector<FractionalMoment> fractional_moments;
  std::optional<TailIndex> tail_index;
  std::optional<double> ks_statistic;
  std::optional<double> ks_p_value;
  std::optional<double> skewness;
  std::optional<double> excess_kurtosis;
  std::vector<std::string> notes;
};

inline constexpr std::size_t kMinReturnSamples = 100;

/// Mean and E tau^r (uncensored samples only), censored fraction and the
/// first-tenth vs all stability diagnostic. Throws std::domain_error for fewer
/// than kMinReturnSamples samples or r outside (0, 1).
EstimatorSummary return_stats(std::span<const ReturnOutcome> samples, std::span<const double> r_grid);

inline constexpr std::size_t kMinTailSamples = 10'000;

/// Hill estimator on the largest k = floor(k_fraction n) order statistics,
/// with a 95% normal CI theta (1 +- 1.96 / sqrt(k)). Censored values sit at
/// the top and contribute to the log-excess sum but not to the exceedance
/// count, which makes this the censored Pareto MLE. Throws
/// std::domain_error for fewer than kMinTailSamples uncensored values,
/// k_fraction outside (0, 0.2], or non-positive values.
TailIndex tail_index(std::span<const double> values, const std::vector<bool>& censored, double k_fraction);
TailIndex tail_index(std::span<const double> values, double k_fraction);
TailIndex tail_index(std::span<const ReturnOutcome> samples, double k_fraction);

struct GrowthPoint {
  BitIndex m = 0;
  double moment = 0.0;  // E[tau^r | M_0 = m], censored runs at the horizon
  double std_error = 0.0;
  double censored_fraction = 0.0;
};

struct GrowthFit {
  double r = 0.0;
  std::vector<GrowthPoint> points;
  double slope = 0.0;  // d log E[tau^r | M_0 = m] / dm
  double slope_se = 0.0;
  double bound = 0.0;  // log(1/(2p))
};

struct GrowthOptions {
  std::size_t replicas = 2000;
  std::int64_t horizon = 10'000'000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// E[tau^r | M_0 = m] from the state with the single active bit m (ground
/// state for m = 0), and the least-squares slope of its log over m_grid.
/// Point m uses master seed derive_seed(seed, kSteps, m). Throws
/// std::domain_error unless dist is geometric with p < 1/2 and
/// 0 < r < r_lower(p), or if m_grid has fewer than 3 points.
GrowthFit conditional_moment_growth(const BitDistribution& dist, double r, std::span<const BitIndex> m_grid,
                                    const GrowthOptions& options);

struct CltOptions {
  std::size_t replicas = 10'000;
  std::uint64_t seed = 0;
  SnapshotMethod method = SnapshotMethod::PerBit;
  unsigned threads = 0;
};

struct CltSummary {
  EstimatorSummary summary;
  double expected = 0.0;  // analytic E N_t
  double variance = 0.0;  // analytic Var N_t
  double standardized_mean = 0.0;
  double standardized_variance = 0.0;
  /// KS after spreading each integer count uniformly over its unit cell; a
  /// diagnostic for lattice effects only.
  double ks_continuity_corrected = 0.0;
};

/// Standardizes N_t with the analytic E N_t and Var N_t (never the sample
/// moments) and compares with N(0,1). Throws std::domain_error for fewer than
/// 1000 replicas or analytic variance below 1e-6.
CltSummary clt_check(const BitDistribution& dist, Model model, double t, const CltOptions& options);

}  // namespace bitflip
