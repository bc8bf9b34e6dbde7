#pragma once

#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bitflip/distributions.hpp"
#include "bitflip/engine.hpp"
#include "bitflip/random.hpp"

namespace bitflip {

/// K = min{k : Q_{k-1} <= 1/2}.
BitIndex buffer_index_k(const BitDistribution& dist);

/// s(u) = 1 - u if F^-1(u) or F^-1(1-u) is in D, else u. `in_d` is any
/// predicate BitIndex -> bool describing D.
template <std::predicate<BitIndex> Pred>
double swap_map(double u, const BitDistribution& dist, Pred&& in_d) {
  if (in_d(dist.quantile(u)) || in_d(dist.quantile(1.0 - u))) return 1.0 - u;
  return u;
}

inline double swap_map(double u, const BitDistribution& dist, const IndexSet& d) {
  return swap_map(u, dist, [&d](BitIndex k) { return d.contains(k); });
}

/// Raised when a coupled step breaks lower <= upper on some k >= K.
class CouplingViolation : public std::logic_error {
 public:
  CouplingViolation(BitIndex index, std::int64_t step);
  BitIndex index() const noexcept { return index_; }
  std::int64_t step() const noexcept { return step_; }

 private:
  BitIndex index_;
  std::int64_t step_;
};

/// Two BF chains driven by common uniforms. The lower chain starts at the
/// ground state; the upper chain starts from i.i.d. Bernoulli(1/2) bits and
/// uses the swapped uniform s_n(U), which redirects flips from discrepancy
/// indices into the buffer {1, ..., K-1}.
///
/// The upper chain has infinitely many active bits, so it is stored as the
/// parity of flips per index on top of an initial bit computed on demand from
/// (seed, index). The discrepancy set D_n is infinite for the same reason and
/// is evaluated per index.
class CoupledPair {
 public:
  CoupledPair(BitDistribution dist, std::uint64_t upper_seed);

  const BitDistribution& distribution() const { return dist_; }
  BitIndex buffer_k() const { return buffer_k_; }
  std::int64_t step_count() const { return lower_.step; }

  const BitState& lower() const { return lower_; }
  int lower_at(BitIndex k) const { return lower_.active.contains(k) ? 1 : 0; }
  int upper_initial(BitIndex k) const;
  int upper_at(BitIndex k) const { return upper_initial(k) ^ (upper_flips_.contains(k) ? 1 : 0); }

  /// k in D_n: k >= K, lower idle, upper active.
  bool in_discrepancy(BitIndex k) const { return k >= buffer_k_ && lower_at(k) == 0 && upper_at(k) == 1; }
  /// Members of D_n among indices touched so far.
  std::vector<BitIndex> touched_discrepancies() const;
  /// Indices either chain has flipped.
  const IndexSet& touched() const { return touched_; }

  double swap(double u) const {
    return swap_map(u, dist_, [this](BitIndex k) { return in_discrepancy(k); });
  }

  /// Lower flips at F^-1(u), upper at F^-1(swap(u)). Returns the pair of
  /// flipped indices. Throws CouplingViolation if domination fails afterwards
  /// at one of them.
  std::pair<BitIndex, BitIndex> step(double u);

  /// Number of touched k >= K with lower > upper.
  std::size_t count_violations() const;

 private:
  BitDistribution dist_;
  std::uint64_t upper_seed_;
  BitIndex buffer_k_;
  BitState lower_;
  IndexSet upper_flips_;
  IndexSet touched_;
};

struct DominationAudit {
  std::size_t runs = 0;
  std::int64_t steps_per_run = 0;
  std::size_t violations = 0;
  std::size_t swapped_steps = 0;
};

/// `runs` coupled runs of `steps` steps each; run i uses
/// RngStream(seed, kCoupling, i) for the uniforms and
/// derive_seed(seed, kUpperInit, i) for the upper chain's initial bits.
DominationAudit audit_domination(const BitDistribution& dist, std::size_t runs, std::int64_t steps,
                                 std::uint64_t seed, unsigned threads = 0);

/// DB and BF return times on one shared index sequence. A bit selected while
/// active turns idle in BF and damaged in DB, so a BF ground state is also a DB
/// ground state and tau_DB <= tau_BF.
struct CoupledReturns {
  ReturnOutcome db;
  ReturnOutcome bf;
};

CoupledReturns couple_bf_db(const BitDistribution& dist, std::int64_t horizon, RngStream& rng);
/// Same on an explicit index sequence; the horizon is its length.
CoupledReturns couple_bf_db(std::span<const BitIndex> indices);

struct OrderingAudit {
  std::size_t runs = 0;
  std::size_t both_finite = 0;
  std::size_t db_not_after_bf = 0;  // runs with tau_DB <= tau_BF (censored BF counts as +inf)
  std::size_t bf_censored = 0;
  std::size_t db_censored = 0;
};

/// Run i uses RngStream(seed, kCoupling, i).
OrderingAudit audit_bf_db(const BitDistribution& dist, std::size_t runs, std::int64_t horizon,
                          std::uint64_t seed, unsigned threads = 0);

}  // namespace bitflip
