#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bitflip {

/// Bit indices are 1-based; 0 is reserved for "no bit" (e.g. M_n of the ground state).
using BitIndex = std::int64_t;

enum class Verdict { Recurrent, Transient, Undetermined };

std::string_view to_string(Verdict v);

/// p_k = (1-p) p^(k-1).
struct Geometric {
  double p;
};

/// p_k = C exp(-alpha k^gamma), C the exact normalizer.
struct StretchedExp {
  double alpha;
  double gamma;
};

/// p_k = C 2^(-kappa(k)) with kappa(k) = min{j^2 : j^2 > k}.
struct KappaCounterexample {};

/// Finite support; weights are normalized at construction.
struct FiniteTable {
  std::vector<double> pmf;
};

using Family = std::variant<Geometric, StretchedExp, KappaCounterexample, FiniteTable>;

/// kappa(k) = min{j^2 : j^2 > k}.
std::int64_t kappa_exponent(BitIndex k);

/// The flip-index law P = (p_1, p_2, ...) on the positive integers.
///
/// Parameters are immutable. Prefix sums S_k used by quantile() are cached
/// lazily in segments of doubling length; a segment is fully written before
/// it is published, so concurrent readers see either the old or the new
/// extent and never a partial one. Copies share the cache.
///
/// Tails are computed directly rather than as 1 - S_k, so Q_k keeps full
/// relative precision far beyond 1e-16. S_k is defined as 1 - Q_k.
class BitDistribution {
 public:
  /// Throws std::domain_error unless 0 < p < 1.
  static BitDistribution geometric(double p);
  /// Throws std::domain_error unless alpha > 0 and 0 < gamma < 1.
  static BitDistribution stretched_exp(double alpha, double gamma);
  static BitDistribution kappa();
  /// Throws std::domain_error on an empty table, negative or non-finite
  /// weights, or a zero total.
  static BitDistribution table(std::vector<double> weights);

  const Family& family() const;

  /// p_k; throws std::domain_error for k < 1.
  double pmf(BitIndex k) const;
  /// Q_k = sum_{j>k} p_j; Q_0 = 1. Throws std::domain_error for k < 0.
  double tail(BitIndex k) const;
  /// S_k = 1 - Q_k.
  double cdf(BitIndex k) const { return 1.0 - tail(k); }
  /// F^-1(u) = min{k : S_k > u}; throws std::domain_error unless 0 < u < 1.
  BitIndex quantile(double u) const;

  /// Largest index with positive mass, for finite tables.
  std::optional<BitIndex> support_size() const;
  /// The constant C (1 for geometric and tables).
  double normalizer() const;
  /// Smallest K with Q_K * scale < threshold (scale > 0).
  BitIndex truncation_index(double scale, double threshold) const;

  std::string describe() const;

 private:
  struct Impl;
  explicit BitDistribution(std::shared_ptr<Impl> impl);
  std::shared_ptr<Impl> impl_;
};

/// Recurrence of the Binary Flipping model for the built-in families.
Verdict classify_bf(const BitDistribution& dist);
/// Recurrence of the Damaged Bits model for the built-in families.
Verdict classify_db(const BitDistribution& dist);

}  // namespace bitflip
