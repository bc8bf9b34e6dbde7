#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bitflip/distributions.hpp"
#include "bitflip/engine.hpp"

namespace bitflip {

/// Marginal law of one bit in continuous time at x = p_k t.
struct StateProbs {
  double idle = 1.0;
  double active = 0.0;
  double damaged = 0.0;
};

/// BF: ((1 + e^{-2x})/2, (1 - e^{-2x})/2, 0).
/// DB: (e^{-x}, x e^{-x}, 1 - (1 + x) e^{-x}).
/// Throws std::domain_error for x < 0.
StateProbs state_probs(Model model, double x);

struct AnalyticReport {
  std::string quantity;
  double value = 0.0;
  double error_estimate = 0.0;
  /// The quantity is infinite; value is then the partial integral over
  /// [0, t_max], a lower bound.
  bool diverged = false;
  std::string note;
};

/// Bits below this expected-count bound are dropped from E N_t and Var N_t.
inline constexpr double kSeriesTruncation = 1e-9;

/// E N_t = sum_k f(p_k t), f the active probability. error_estimate is the
/// truncation bound Q_K t.
AnalyticReport expected_active(const BitDistribution& dist, Model model, double t);
/// Var N_t = sum_k f(p_k t)(1 - f(p_k t)).
AnalyticReport variance_active(const BitDistribution& dist, Model model, double t);

/// Phi(t) = prod_k P(bit k not active at t): the probability that the
/// continuous-time chain is at a ground state at time t.
///   BF: prod (1 + e^{-2 p_k t})/2,   DB: prod (1 - p_k t e^{-p_k t}).
/// Rates are tabulated once up to the first K with Q_K t_max < 1e-8; the
/// log-product stops as soon as the remaining bits change it by less than
/// that bound.
class GroundIntegrand {
 public:
  GroundIntegrand(Model model, const BitDistribution& dist, double t_max);

  /// log Phi(t); -infinity once it falls below the double range.
  double log_value(double t) const;
  double operator()(double t) const;
  double t_max() const { return t_max_; }

 private:
  Model model_;
  double t_max_;
  std::vector<double> rates_;  // p_1, p_2, ...
  std::vector<double> tails_;  // Q_1, Q_2, ...
};

inline constexpr double kDefaultTMax = 1e8;

/// E T_tot = int_0^inf Phi_BF(t) dt over [0, t_max]. For geometric laws the
/// part beyond t_max is estimated from the power-law decay
/// t^{-log(2 - eps)/log(1/p)}, eps = 0.01, and added. Recurrent laws are
/// reported as diverged.
AnalyticReport ground_occupancy_bf(const BitDistribution& dist, double t_max = kDefaultTMax,
                                   double tol = 1e-6);
/// E nu = int_0^inf Phi_DB(t) dt, with the same conventions.
AnalyticReport ground_occupancy_db(const BitDistribution& dist, double t_max = kDefaultTMax,
                                   double tol = 1e-6);

struct MomentBounds {
  double p = 0.0;
  double r_lower = 0.0;  // E tau^r < inf for r < r_lower
  double r_upper = 0.0;  // E tau^r = inf for r > r_upper
};

/// r_lower = 1 - log 2 / log(1/p), r_upper = 1 - log(2 - p) / log(1/p).
/// Throws std::domain_error unless 0 < p < 1/2.
MomentBounds moment_bounds(double p);

/// P(B_k | A_k) = int_0^inf prod_{j<=k} (1 - g(p_j t / Q_k)) e^{-t} dt with
/// g(x) = e^{-x}(1 + x). Throws std::domain_error if k < 1 or Q_k = 0.
double bk_given_ak(const BitDistribution& dist, BitIndex k, double tol = 1e-10);

struct BandCount {
  std::int64_t exact = 0;
  /// (log l2 - log l1) / (gamma alpha^{1/gamma}) (log(t C))^{1/gamma - 1};
  /// stretched-exponential laws only.
  std::optional<double> asymptotic;
};

/// card{k : l1 <= p_k t <= l2}. Throws std::domain_error unless 0 < l1 < l2.
BandCount band_count(const BitDistribution& dist, double t, double l1, double l2);

}  // namespace bitflip
