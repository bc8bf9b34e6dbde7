#include "bitflip/distributions.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace bitflip {

namespace {

constexpr int kMaxSegments = 48;
constexpr BitIndex kFirstSegment = 64;

BitIndex isqrt(BitIndex k) {
  auto r = static_cast<BitIndex>(std::sqrt(static_cast<double>(k)));
  while (r * r > k) --r;
  while ((r + 1) * (r + 1) <= k) ++r;
  return r;
}

// Unnormalized stretched-exponential weights, scaled so that w(1) = 1:
// w(x) = exp(-alpha (x^gamma - 1)).
struct StretchedWeights {
  double alpha;
  double gamma;

  double operator()(double x) const { return std::exp(-alpha * (std::pow(x, gamma) - 1.0)); }

  // |w'/w| at x; the Euler-Maclaurin remainder is accurate once this is small.
  double decay_rate(double x) const { return alpha * gamma * std::pow(x, gamma - 1.0); }

  // sum_{j >= a} w(j) via Euler-Maclaurin with the upper incomplete gamma
  // integral and two derivative corrections.
  double remainder(double a) const {
    const double s = 1.0 / gamma;
    const double z = alpha * std::pow(a, gamma);
    const double q = boost::math::gamma_q(s, z);
    double integral = 0.0;
    if (q > 0.0) {
      integral = std::exp(alpha + boost::math::lgamma(s) + std::log(q) - std::log(gamma) -
                          s * std::log(alpha));
    }
    const double w = (*this)(a);
    const double h1 = -alpha * gamma * std::pow(a, gamma - 1.0);
    const double h2 = -alpha * gamma * (gamma - 1.0) * std::pow(a, gamma - 2.0);
    const double h3 = -alpha * gamma * (gamma - 1.0) * (gamma - 2.0) * std::pow(a, gamma - 3.0);
    const double d1 = h1 * w;
    const double d3 = (h3 + 3.0 * h1 * h2 + h1 * h1 * h1) * w;
    return integral + 0.5 * w - d1 / 12.0 + d3 / 720.0;
  }

  // sum_{j > k} w(j).
  double tail(BitIndex k) const {
    double sum = 0.0;
    BitIndex j = k + 1;
    for (;; ++j) {
      const double x = static_cast<double>(j);
      const double w = (*this)(x);
      if (w == 0.0) return sum;
      if (j - k > 8 && (decay_rate(x) <= 0.005 || w <= 1e-20 * sum)) break;
      sum += w;
    }
    return sum + remainder(static_cast<double>(j));
  }
};

// sum_{j > k} 2^(-kappa(j)); index block i >= 1 spans [i^2, (i+1)^2 - 1].
double kappa_raw_tail(BitIndex k) {
  const BitIndex b = isqrt(k);
  if ((b + 1) * (b + 1) > 1100) return 0.0;
  const double rest = static_cast<double>((b + 1) * (b + 1) - 1 - k);
  double sum = rest * std::ldexp(1.0, static_cast<int>(-(b + 1) * (b + 1)));
  for (BitIndex i = b + 1;; ++i) {
    const BitIndex e = (i + 1) * (i + 1);
    if (e > 1100) break;
    const double term = static_cast<double>(2 * i + 1) * std::ldexp(1.0, static_cast<int>(-e));
    if (term == 0.0 || term < 1e-30 * sum) break;
    sum += term;
  }
  return sum;
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Recurrent: return "Recurrent";
    case Verdict::Transient: return "Transient";
    case Verdict::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

std::int64_t kappa_exponent(BitIndex k) {
  if (k < 0) throw std::domain_error("kappa_exponent: k must be non-negative");
  const BitIndex j = isqrt(k) + 1;
  return j * j;
}

struct BitDistribution::Impl {
  Family family;
  // Normalizing total of the raw weights (stretched/kappa), 1 otherwise.
  double raw_total = 1.0;
  // Q_0..Q_n for finite tables.
  std::vector<double> table_tails;

  // Lazily extended S_k segments. Segment i starts at index
  // 1 + kFirstSegment (2^i - 1) and holds kFirstSegment 2^i entries.
  mutable std::mutex extend_mutex;
  mutable std::array<std::unique_ptr<double[]>, kMaxSegments> storage;
  mutable std::array<std::atomic<const double*>, kMaxSegments> segments{};
  mutable std::atomic<int> published{0};

  double raw_tail(BitIndex k) const {
    return std::visit(
        [&](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Geometric>) {
            return std::pow(f.p, static_cast<double>(k));
          } else if constexpr (std::is_same_v<T, StretchedExp>) {
            return StretchedWeights{f.alpha, f.gamma}.tail(k);
          } else if constexpr (std::is_same_v<T, KappaCounterexample>) {
            return kappa_raw_tail(k);
          } else {
            const auto n = static_cast<BitIndex>(f.pmf.size());
            return k >= n ? 0.0 : table_tails[static_cast<std::size_t>(k)];
          }
        },
        family);
  }

  double tail(BitIndex k) const {
    if (k == 0) return 1.0;
    return raw_tail(k) / raw_total;
  }

  const double* segment(int i) const {
    if (i < published.load(std::memory_order_acquire)) {
      return segments[static_cast<std::size_t>(i)].load(std::memory_order_relaxed);
    }
    if (i >= kMaxSegments) throw std::runtime_error("BitDistribution: quantile cache exhausted");
    std::lock_guard lock(extend_mutex);
    for (int s = published.load(std::memory_order_relaxed); s <= i; ++s) {
      const BitIndex size = kFirstSegment << s;
      const BitIndex start = 1 + kFirstSegment * ((BitIndex{1} << s) - 1);
      auto values = std::make_unique<double[]>(static_cast<std::size_t>(size));
      double prev = s == 0 ? 0.0 : storage[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>((kFirstSegment << (s - 1)) - 1)];
      for (BitIndex j = 0; j < size; ++j) {
        // Keeps S_k monotone against rounding in independently computed tails.
        prev = std::max(prev, 1.0 - tail(start + j));
        values[static_cast<std::size_t>(j)] = prev;
      }
      segments[static_cast<std::size_t>(s)].store(values.get(), std::memory_order_relaxed);
      storage[static_cast<std::size_t>(s)] = std::move(values);
      published.store(s + 1, std::memory_order_release);
    }
    return segments[static_cast<std::size_t>(i)].load(std::memory_order_relaxed);
  }
};

BitDistribution::BitDistribution(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

BitDistribution BitDistribution::geometric(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("geometric: p must lie in (0,1)");
  auto impl = std::make_shared<Impl>();
  impl->family = Geometric{p};
  return BitDistribution(std::move(impl));
}

BitDistribution BitDistribution::stretched_exp(double alpha, double gamma) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::domain_error("stretched_exp: alpha must be positive");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::domain_error("stretched_exp: gamma must lie in (0,1)");
  auto impl = std::make_shared<Impl>();
  impl->family = StretchedExp{alpha, gamma};
  impl->raw_total = StretchedWeights{alpha, gamma}.tail(0);
  return BitDistribution(std::move(impl));
}

BitDistribution BitDistribution::kappa() {
  auto impl = std::make_shared<Impl>();
  impl->family = KappaCounterexample{};
  impl->raw_total = kappa_raw_tail(0);
  return BitDistribution(std::move(impl));
}

BitDistribution BitDistribution::table(std::vector<double> weights) {
  if (weights.empty()) throw std::domain_error("table: pmf must not be empty");
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw std::domain_error("table: weights must be finite and non-negative");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw std::domain_error("table: weights must have a positive sum");
  while (weights.back() == 0.0) weights.pop_back();
  for (double& w : weights) w /= total;

  auto impl = std::make_shared<Impl>();
  impl->table_tails.assign(weights.size() + 1, 0.0);
  for (std::size_t k = weights.size(); k-- > 0;) {
    impl->table_tails[k] = impl->table_tails[k + 1] + weights[k];
  }
  impl->table_tails[0] = 1.0;
  impl->family = FiniteTable{std::move(weights)};
  return BitDistribution(std::move(impl));
}

const Family& BitDistribution::family() const { return impl_->family; }

double BitDistribution::pmf(BitIndex k) const {
  if (k < 1) throw std::domain_error("pmf: index must be >= 1");
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Geometric>) {
          return (1.0 - f.p) * std::pow(f.p, static_cast<double>(k - 1));
        } else if constexpr (std::is_same_v<T, StretchedExp>) {
          return StretchedWeights{f.alpha, f.gamma}(static_cast<double>(k)) / impl_->raw_total;
        } else if constexpr (std::is_same_v<T, KappaCounterexample>) {
          const BitIndex e = kappa_exponent(k);
          if (e > 1100) return 0.0;
          return std::ldexp(1.0, static_cast<int>(-e)) / impl_->raw_total;
        } else {
          const auto n = static_cast<BitIndex>(f.pmf.size());
          return k > n ? 0.0 : f.pmf[static_cast<std::size_t>(k - 1)];
        }
      },
      impl_->family);
}

double BitDistribution::tail(BitIndex k) const {
  if (k < 0) throw std::domain_error("tail: index must be >= 0");
  return impl_->tail(k);
}

BitIndex BitDistribution::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile: u must lie in (0,1)");
  BitIndex start = 1;
  for (int i = 0;; ++i) {
    const double* seg = impl_->segment(i);
    const BitIndex size = kFirstSegment << i;
    if (seg[size - 1] > u) {
      return start + (std::upper_bound(seg, seg + size, u) - seg);
    }
    start += size;
  }
}

std::optional<BitIndex> BitDistribution::support_size() const {
  if (const auto* t = std::get_if<FiniteTable>(&impl_->family)) {
    return static_cast<BitIndex>(t->pmf.size());
  }
  return std::nullopt;
}

double BitDistribution::normalizer() const {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, StretchedExp>) {
          return std::exp(f.alpha) / impl_->raw_total;
        } else if constexpr (std::is_same_v<T, KappaCounterexample>) {
          return 1.0 / impl_->raw_total;
        } else {
          return 1.0;
        }
      },
      impl_->family);
}

BitIndex BitDistribution::truncation_index(double scale, double threshold) const {
  auto below = [&](BitIndex k) { return tail(k) * scale < threshold; };
  if (below(0)) return 0;
  BitIndex lo = 0;
  BitIndex hi = 1;
  while (!below(hi)) {
    lo = hi;
    if (hi > (BitIndex{1} << 50)) throw std::runtime_error("truncation_index: tail does not vanish");
    hi *= 2;
  }
  while (hi - lo > 1) {
    const BitIndex mid = lo + (hi - lo) / 2;
    (below(mid) ? hi : lo) = mid;
  }
  return hi;
}

std::string BitDistribution::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Geometric>) {
          os << "geometric(p=" << f.p << ")";
        } else if constexpr (std::is_same_v<T, StretchedExp>) {
          os << "stretched_exp(alpha=" << f.alpha << ", gamma=" << f.gamma << ")";
        } else if constexpr (std::is_same_v<T, KappaCounterexample>) {
          os << "kappa";
        } else {
          os << "table(n=" << f.pmf.size() << ")";
        }
      },
      impl_->family);
  return os.str();
}

Verdict classify_bf(const BitDistribution& dist) {
  return std::visit(
      [](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Geometric>) {
          // 2^k p_k = (1-p)/p (2p)^k: bounded iff p <= 1/2; for p > 1/2 some
          // (2-eps)^k p_k stays bounded away from zero.
          return f.p <= 0.5 ? Verdict::Recurrent : Verdict::Transient;
        } else {
          // Super-geometric decay, kappa(k) > k, or a finite chain.
          return Verdict::Recurrent;
        }
      },
      dist.family());
}

Verdict classify_db(const BitDistribution& dist) {
  return std::visit(
      [](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Geometric>) {
          return Verdict::Recurrent;  // Q_{k+1}/Q_k = p < 1
        } else if constexpr (std::is_same_v<T, StretchedExp>) {
          return f.gamma < 0.5 ? Verdict::Transient : Verdict::Undetermined;
        } else if constexpr (std::is_same_v<T, KappaCounterexample>) {
          // Q_{i^2}/Q_{i^2-1} -> 1, so the ratio test fails.
          return Verdict::Undetermined;
        } else {
          return Verdict::Recurrent;
        }
      },
      dist.family());
}

}  // namespace bitflip
