#include "bitflip/analytics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <type_traits>
#include <variant>

#include <boost/math/special_functions/gamma.hpp>

#include "bitflip/quadrature.hpp"

namespace bitflip {
namespace {

constexpr double kIntegrandTruncation = 1e-8;
constexpr double kLogFloor = -745.0;
constexpr double kTailEps = 0.01;

double active_probability(Model model, double x) {
  return model == Model::BF ? -0.5 * std::expm1(-2.0 * x) : x * std::exp(-x);
}

void check_t(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::domain_error(std::string(what) + ": t must be positive");
}

template <class Term>
AnalyticReport active_series(const char* name, const BitDistribution& dist, double t, Term term) {
  AnalyticReport out;
  out.quantity = name;
  const BitIndex last = dist.truncation_index(t, kSeriesTruncation);
  for (BitIndex k = 1; k <= last; ++k) out.value += term(dist.pmf(k) * t);
  out.error_estimate = dist.tail(last) * t;
  return out;
}

std::vector<double> panel_breakpoints(double t_max) {
  std::vector<double> points{0.0};
  for (double b = 1.0; b < t_max; b *= 2.0) points.push_back(b);
  points.push_back(t_max);
  return points;
}

AnalyticReport ground_occupancy(Model model, const BitDistribution& dist, double t_max, double tol) {
  check_t(t_max, "ground_occupancy");
  if (!(tol > 0.0)) throw std::domain_error("ground_occupancy: tol must be positive");
  AnalyticReport out;
  out.quantity = model == Model::BF ? "ground_occupancy_bf" : "ground_occupancy_db";

  const GroundIntegrand phi(model, dist, t_max);
  const auto points = panel_breakpoints(t_max);
  const auto quad = integrate([&phi](double t) { return phi(t); }, points, {tol, 1e-14, 20000});
  out.value = quad.value;
  // Truncating the log-product perturbs Phi by a relative 1e-8 at most.
  out.error_estimate = quad.error + kIntegrandTruncation * quad.value;
  if (!quad.converged) out.note = "quadrature did not reach the requested tolerance";

  const Verdict verdict = model == Model::BF ? classify_bf(dist) : classify_db(dist);
  if (verdict == Verdict::Recurrent) {
    out.diverged = true;
    out.note = "recurrent: the integral is infinite; value integrates [0, t_max] only";
    return out;
  }

  const double phi_end = phi(t_max);
  const auto* geo = std::get_if<Geometric>(&dist.family());
  if (model == Model::BF && geo != nullptr) {
    const double beta = std::log(2.0 - kTailEps) / std::log(1.0 / geo->p);
    if (beta <= 1.0) {
      out.error_estimate = std::numeric_limits<double>::infinity();
      out.note = "power-law tail bound is not integrable for this p";
      return out;
    }
    const double tail = phi_end * t_max / (beta - 1.0);
    out.value += tail;
    out.error_estimate += tail;
  } else if (phi_end > 0.0) {
    // No tail bound for this family; Phi(t_max) t_max indicates its size.
    out.error_estimate += phi_end * t_max;
    out.note = "tail beyond t_max not bounded analytically";
  }
  if (verdict == Verdict::Undetermined && out.note.empty()) {
    out.note = "recurrence undetermined; value integrates [0, t_max]";
  }
  return out;
}

}  // namespace

StateProbs state_probs(Model model, double x) {
  if (!(x >= 0.0)) throw std::domain_error("state_probs: x must be >= 0");
  StateProbs s;
  if (model == Model::BF) {
    s.active = -0.5 * std::expm1(-2.0 * x);
    s.idle = 1.0 - s.active;
    return s;
  }
  if (x == 0.0) return s;
  s.idle = std::exp(-x);
  s.active = x * s.idle;
  s.damaged = boost::math::gamma_p(2.0, x);
  return s;
}

AnalyticReport expected_active(const BitDistribution& dist, Model model, double t) {
  check_t(t, "expected_active");
  return active_series("expected_active", dist, t,
                       [model](double x) { return active_probability(model, x); });
}

AnalyticReport variance_active(const BitDistribution& dist, Model model, double t) {
  check_t(t, "variance_active");
  return active_series("variance_active", dist, t, [model](double x) {
    const double f = active_probability(model, x);
    return f * (1.0 - f);
  });
}

GroundIntegrand::GroundIntegrand(Model model, const BitDistribution& dist, double t_max)
    : model_(model), t_max_(t_max) {
  check_t(t_max, "GroundIntegrand");
  const BitIndex last = dist.truncation_index(t_max, kIntegrandTruncation);
  rates_.resize(static_cast<std::size_t>(last));
  tails_.resize(static_cast<std::size_t>(last));
  for (BitIndex k = 1; k <= last; ++k) rates_[static_cast<std::size_t>(k - 1)] = dist.pmf(k);
  // Q_{k-1} = Q_k + p_k keeps relative precision in the far tail.
  double q = last > 0 ? dist.tail(last) : 1.0;
  for (BitIndex k = last; k >= 1; --k) {
    tails_[static_cast<std::size_t>(k - 1)] = q;
    q += rates_[static_cast<std::size_t>(k - 1)];
  }
}

double GroundIntegrand::log_value(double t) const {
  if (t < 0.0) throw std::domain_error("GroundIntegrand: t must be >= 0");
  double sum = 0.0;
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    const double x = rates_[i] * t;
    if (model_ == Model::BF) {
      sum += (x > 40.0 ? 0.0 : std::log1p(std::exp(-2.0 * x))) - std::numbers::ln2;
    } else if (x < 745.0) {
      sum += std::log1p(-x * std::exp(-x));
    }
    if (sum < kLogFloor) return -std::numeric_limits<double>::infinity();
    if (tails_[i] * t < kIntegrandTruncation) break;
  }
  return sum;
}

double GroundIntegrand::operator()(double t) const { return std::exp(log_value(t)); }

AnalyticReport ground_occupancy_bf(const BitDistribution& dist, double t_max, double tol) {
  return ground_occupancy(Model::BF, dist, t_max, tol);
}

AnalyticReport ground_occupancy_db(const BitDistribution& dist, double t_max, double tol) {
  return ground_occupancy(Model::DB, dist, t_max, tol);
}

MomentBounds moment_bounds(double p) {
  if (!(p > 0.0 && p < 0.5)) throw std::domain_error("moment_bounds: p must lie in (0, 1/2)");
  const double scale = std::log(1.0 / p);
  return MomentBounds{p, 1.0 - std::numbers::ln2 / scale, 1.0 - std::log(2.0 - p) / scale};
}

double bk_given_ak(const BitDistribution& dist, BitIndex k, double tol) {
  if (k < 1) throw std::domain_error("bk_given_ak: k must be >= 1");
  const double q = dist.tail(k);
  if (!(q > 0.0)) throw std::domain_error("bk_given_ak: Q_k = 0, no mass above k");
  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(k));
  for (BitIndex j = 1; j <= k; ++j) ratios.push_back(dist.pmf(j) / q);

  auto integrand = [&ratios](double t) {
    if (t == 0.0) return 0.0;
    double log_sum = -t;
    for (double r : ratios) {
      const double at_least_two = boost::math::gamma_p(2.0, r * t);
      if (at_least_two == 0.0) return 0.0;
      log_sum += std::log(at_least_two);
    }
    return std::exp(log_sum);
  };
  std::vector<double> points{0.0};
  for (double b = 0x1.0p-10; b <= 128.0; b *= 2.0) points.push_back(b);
  return integrate(integrand, points, {tol, 1e-16, 20000}).value;
}

BandCount band_count(const BitDistribution& dist, double t, double l1, double l2) {
  check_t(t, "band_count");
  if (!(l1 > 0.0 && l1 < l2)) throw std::domain_error("band_count: need 0 < l1 < l2");
  BandCount out;
  auto in_band = [&](BitIndex k) {
    const double x = dist.pmf(k) * t;
    return x >= l1 && x <= l2;
  };
  if (auto size = dist.support_size()) {
    for (BitIndex k = 1; k <= *size; ++k) out.exact += in_band(k) ? 1 : 0;
  } else {
    for (BitIndex k = 1; dist.pmf(k) * t >= l1; ++k) out.exact += in_band(k) ? 1 : 0;
  }
  if (const auto* se = std::get_if<StretchedExp>(&dist.family())) {
    const double log_tc = std::log(t * dist.normalizer());
    if (log_tc > 0.0) {
      out.asymptotic = (std::log(l2) - std::log(l1)) / (se->gamma * std::pow(se->alpha, 1.0 / se->gamma)) *
                       std::pow(log_tc, 1.0 / se->gamma - 1.0);
    }
  }
  return out;
}

}  // namespace bitflip
