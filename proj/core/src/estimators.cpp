#include "bitflip/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <variant>

#include "bitflip/analytics.hpp"
#include "bitflip/random.hpp"
#include "bitflip/stats.hpp"

namespace bitflip {
namespace {

constexpr double kStabilityLimit = 0.10;

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double power_mean(std::span<const double> x, double r) {
  double sum = 0.0;
  for (double v : x) sum += std::pow(v, r);
  return sum / static_cast<double>(x.size());
}

}  // namespace

EstimatorSummary return_stats(std::span<const ReturnOutcome> samples, std::span<const double> r_grid) {
  if (samples.size() < kMinReturnSamples) {
    throw std::domain_error("return_stats: need at least " + std::to_string(kMinReturnSamples) + " samples");
  }
  for (double r : r_grid) {
    if (!(r > 0.0 && r < 1.0)) throw std::domain_error("return_stats: r must lie in (0, 1)");
  }
  EstimatorSummary out;
  out.n_samples = samples.size();

  // The subsample is the first tenth in replica order.
  const std::size_t head = samples.size() / 10;
  std::vector<double> all, first;
  std::size_t censored = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].censored()) {
      ++censored;
      continue;
    }
    const double tau = static_cast<double>(*samples[i].tau);
    all.push_back(tau);
    if (i < head) first.push_back(tau);
  }
  out.censored_fraction = static_cast<double>(censored) / static_cast<double>(samples.size());
  if (censored > 0) out.notes.emplace_back("censored runs excluded; moments are biased low");
  if (all.empty()) return out;

  out.mean = mean_of(all);
  if (!first.empty()) {
    out.subsample_mean = mean_of(first);
    out.mean_unstable = std::abs(*out.mean / *out.subsample_mean - 1.0) > kStabilityLimit;
  }
  for (double r : r_grid) {
    FractionalMoment fm;
    fm.r = r;
    fm.estimate = power_mean(all, r);
    if (!first.empty()) {
      fm.subsample_estimate = power_mean(first, r);
      fm.relative_change = std::abs(fm.estimate / fm.subsample_estimate - 1.0);
    }
    out.fractional_moments.push_back(fm);
  }
  if (all.size() >= kMinTailSamples) {
    out.tail_index = tail_index(samples, 0.1);
  }
  return out;
}

TailIndex tail_index(std::span<const double> values, const std::vector<bool>& censored, double k_fraction) {
  if (values.size() != censored.size()) throw std::invalid_argument("tail_index: size mismatch");
  if (!(k_fraction > 0.0 && k_fraction <= 0.2)) throw std::domain_error("tail_index: k_fraction must lie in (0, 0.2]");
  const auto uncensored = static_cast<std::size_t>(std::count(censored.begin(), censored.end(), false));
  if (uncensored < kMinTailSamples) {
    throw std::domain_error("tail_index: need at least " + std::to_string(kMinTailSamples) + " uncensored samples");
  }

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  // Descending by value; censored first among ties since their true value is larger.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return censored[a] && !censored[b];
  });
  const std::size_t n = values.size();
  const auto k = static_cast<std::size_t>(std::floor(k_fraction * static_cast<double>(n)));
  if (k < 2 || k >= n) throw std::domain_error("tail_index: k_fraction leaves too few order statistics");
  const double threshold = values[order[k]];
  if (!(threshold > 0.0)) throw std::domain_error("tail_index: values must be positive");

  TailIndex out;
  out.k = k;
  double log_excess = 0.0;
  std::vector<double> log_x, log_survival;
  for (std::size_t i = 0; i < k; ++i) {
    const double v = values[order[i]];
    log_excess += std::log(v / threshold);
    if (!censored[order[i]]) {
      ++out.exceedances;
      log_x.push_back(std::log(v));
      log_survival.push_back(std::log(static_cast<double>(i + 1) / static_cast<double>(n)));
    }
  }
  if (out.exceedances == 0 || !(log_excess > 0.0)) {
    throw std::domain_error("tail_index: no uncensored exceedances above the threshold");
  }
  out.theta = static_cast<double>(out.exceedances) / log_excess;
  const double half_width = 1.959963984540054 * out.theta / std::sqrt(static_cast<double>(out.exceedances));
  out.ci_low = out.theta - half_width;
  out.ci_high = out.theta + half_width;
  out.heavy = out.theta <= kHeavyTailLimit;
  if (log_x.size() >= 3 && log_x.front() != log_x.back()) {
    out.regression_theta = -least_squares(log_x, log_survival).slope;
  }
  return out;
}

TailIndex tail_index(std::span<const double> values, double k_fraction) {
  return tail_index(values, std::vector<bool>(values.size(), false), k_fraction);
}

TailIndex tail_index(std::span<const ReturnOutcome> samples, double k_fraction) {
  std::vector<double> values;
  std::vector<bool> flags;
  values.reserve(samples.size());
  flags.reserve(samples.size());
  for (const auto& s : samples) {
    values.push_back(static_cast<double>(s.value_or_horizon()));
    flags.push_back(s.censored());
  }
  return tail_index(values, flags, k_fraction);
}

GrowthFit conditional_moment_growth(const BitDistribution& dist, double r, std::span<const BitIndex> m_grid,
                                    const GrowthOptions& options) {
  const auto* geo = std::get_if<Geometric>(&dist.family());
  if (geo == nullptr || !(geo->p < 0.5)) {
    throw std::domain_error("conditional_moment_growth: needs a geometric law with p < 1/2");
  }
  const MomentBounds bounds = moment_bounds(geo->p);
  if (!(r > 0.0 && r < bounds.r_lower)) {
    throw std::domain_error("conditional_moment_growth: r must lie in (0, r_lower(p))");
  }
  if (m_grid.size() < 3) throw std::domain_error("conditional_moment_growth: m_grid needs at least 3 points");
  if (options.replicas < 2) throw std::domain_error("conditional_moment_growth: replicas must be >= 2");

  GrowthFit fit;
  fit.r = r;
  fit.bound = std::log(1.0 / (2.0 * geo->p));
  std::vector<double> ms, logs;
  for (BitIndex m : m_grid) {
    if (m < 0) throw std::domain_error("conditional_moment_growth: m must be >= 0");
    ReturnExperiment exp;
    exp.model = Model::BF;
    exp.horizon = options.horizon;
    exp.initial_bit = m;
    const auto outcomes = simulate_returns(dist, exp,
                                           derive_seed(options.seed, StreamTag::kSteps, static_cast<std::uint64_t>(m)),
                                           options.replicas, options.threads);
    std::vector<double> powered;
    powered.reserve(outcomes.size());
    std::size_t censored = 0;
    for (const auto& o : outcomes) {
      powered.push_back(std::pow(static_cast<double>(o.value_or_horizon()), r));
      censored += o.censored() ? 1 : 0;
    }
    const SampleMoments mom = sample_moments(powered);
    GrowthPoint pt;
    pt.m = m;
    pt.moment = mom.mean;
    pt.std_error = std::sqrt(mom.variance / static_cast<double>(powered.size()));
    pt.censored_fraction = static_cast<double>(censored) / static_cast<double>(outcomes.size());
    fit.points.push_back(pt);
    ms.push_back(static_cast<double>(m));
    logs.push_back(std::log(pt.moment));
  }
  const LinearFit line = least_squares(ms, logs);
  fit.slope = line.slope;
  fit.slope_se = line.slope_se;
  return fit;
}

CltSummary clt_check(const BitDistribution& dist, Model model, double t, const CltOptions& options) {
  if (options.replicas < 1000) throw std::domain_error("clt_check: need at least 1000 replicas");
  CltSummary out;
  out.expected = expected_active(dist, model, t).value;
  out.variance = variance_active(dist, model, t).value;
  if (out.variance < 1e-6) throw std::domain_error("clt_check: analytic variance is degenerate");

  const auto counts = simulate_active_counts(model, dist, t, options.method, options.seed, options.replicas,
                                             options.threads);
  const double sd = std::sqrt(out.variance);
  std::vector<double> z, jittered;
  z.reserve(counts.size());
  jittered.reserve(counts.size());
  RngStream jitter(options.seed, StreamTag::kSynthetic, 0);
  for (std::int64_t n : counts) {
    const double c = static_cast<double>(n);
    z.push_back((c - out.expected) / sd);
    jittered.push_back((c + jitter.uniform() - 0.5 - out.expected) / sd);
  }
  const SampleMoments mom = sample_moments(z);
  out.standardized_mean = mom.mean;
  out.standardized_variance = mom.variance;

  EstimatorSummary& s = out.summary;
  s.n_samples = counts.size();
  s.mean = mom.mean;
  s.skewness = mom.skewness;
  s.excess_kurtosis = mom.excess_kurtosis;
  const KsResult ks = ks_normal(z);
  s.ks_statistic = ks.statistic;
  s.ks_p_value = ks.p_value;
  out.ks_continuity_corrected = ks_normal(std::move(jittered)).statistic;
  return out;
}

}  // namespace bitflip
