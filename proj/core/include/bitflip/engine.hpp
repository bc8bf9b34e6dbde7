#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "bitflip/distributions.hpp"
#include "bitflip/random.hpp"

namespace bitflip {

enum class Model { BF, DB };

std::string_view to_string(Model m);

/// Sparse set of positive bit indices with O(1) size and cached maximum.
///
/// Indices below kDenseLimit live in a bitmap; larger ones in a hash set.
/// Typical configurations only hold small indices, so the hash set is
/// rarely touched.
class IndexSet {
 public:
  static constexpr BitIndex kDenseLimit = 1024;

  bool contains(BitIndex k) const {
    if (k < kDenseLimit) return (words_[static_cast<std::size_t>(k >> 6)] >> (k & 63)) & 1U;
    return overflow_.contains(k);
  }
  void insert(BitIndex k);
  void erase(BitIndex k);
  /// Inserts if absent, erases if present.
  void toggle(BitIndex k) { contains(k) ? erase(k) : insert(k); }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  /// Largest member, or 0 when empty.
  BitIndex max() const { return max_; }
  /// Members in increasing order.
  std::vector<BitIndex> sorted() const;

  friend bool operator==(const IndexSet& a, const IndexSet& b) {
    return a.size_ == b.size_ && a.words_ == b.words_ && a.overflow_ == b.overflow_;
  }

 private:
  void recompute_max();

  std::array<std::uint64_t, kDenseLimit / 64> words_{};
  std::unordered_set<BitIndex> overflow_;
  std::size_t size_ = 0;
  BitIndex max_ = 0;
};

/// Configuration of a BF or DB chain: active bits (state 1) and, for DB,
/// damaged bits (state 2). All other bits are idle.
struct BitState {
  Model model = Model::BF;
  IndexSet active;
  IndexSet damaged;
  std::int64_t step = 0;

  static BitState ground(Model model) { return BitState{model, {}, {}, 0}; }
  /// Ground state plus the given active bits.
  static BitState with_active(Model model, std::span<const BitIndex> bits);

  /// 0 idle, 1 active, 2 damaged.
  int state_of(BitIndex k) const { return active.contains(k) ? 1 : (damaged.contains(k) ? 2 : 0); }
  /// M_n, the largest active index (0 when none).
  BitIndex max_active() const { return active.max(); }
  /// N_n, the number of active bits.
  std::size_t active_count() const { return active.size(); }
  bool is_ground() const { return active.empty(); }

  /// Applies one transition of this state's model at `index`, in place.
  void apply(BitIndex index);
};

/// Toggles `index` (BF); the step counter advances.
BitState step_bf(BitState state, BitIndex index);
/// idle -> active -> damaged -> damaged at `index` (DB); the step counter advances.
BitState step_db(BitState state, BitIndex index);

/// One return-time run: tau in steps, or censored at the horizon.
struct ReturnOutcome {
  std::optional<std::int64_t> tau;
  std::int64_t horizon = 0;
  BitIndex m0 = 0;
  BitIndex peak_m = 0;

  bool censored() const { return !tau.has_value(); }
  /// tau, or the horizon for censored runs (a lower bound on tau).
  std::int64_t value_or_horizon() const { return tau.value_or(horizon); }
};

/// Runs the chain from `initial` with chi_n = F^-1(U_n) until the first n >= 1
/// with no active bits, or until `horizon` steps. Throws std::domain_error if
/// horizon < 1.
ReturnOutcome run_return_time(const BitDistribution& dist, BitState initial, std::int64_t horizon,
                              RngStream& rng);

/// BF chain from the ground state stopped when bits 1..m are all idle;
/// flips above m count as steps but do not affect the stopping test.
ReturnOutcome run_projected_return(BitIndex m, const BitDistribution& dist, std::int64_t horizon,
                                   RngStream& rng);

enum class SnapshotMethod { PoissonEmbed, PerBit };

/// Expected-count threshold below which PerBit stops enumerating bits.
inline constexpr double kSnapshotTruncation = 1e-9;

/// Continuous-time configuration at time t from the ground state.
/// PoissonEmbed runs Poisson(t) discrete steps; PerBit samples each bit from
/// its marginal (BF active with prob (1 - e^{-2x})/2, DB active with prob
/// x e^{-x} and damaged with prob 1 - (1+x) e^{-x}, x = p_k t), stopping at the
/// first K with Q_K t < kSnapshotTruncation. Throws std::domain_error if t <= 0.
BitState sample_snapshot(Model model, const BitDistribution& dist, double t, SnapshotMethod method,
                         RngStream& rng);

/// Ground-state occupancy of one continuous-time run.
struct GroundOccupancy {
  double time = 0.0;        // total time with no active bits
  std::int64_t visits = 0;  // number of ground sojourns, including the one at t = 0
};

/// Event-driven occupancy: runs `horizon` discrete steps and adds an Exp(1)
/// holding time for each step spent in a ground state (rate-1 embedding).
GroundOccupancy accumulate_ground_time(Model model, const BitDistribution& dist,
                                       std::int64_t horizon, RngStream& rng);

/// Exact occupancy over the time window [0, t_end] using the independence of
/// bits in continuous time. Bits are processed from the slowest down, each
/// one simulated only inside the windows where all slower bits are idle, so
/// the cost does not grow with t_end the way event-driven simulation does.
/// Bits beyond the first K with Q_K t_end < 1e-12 are treated as never flipping.
GroundOccupancy sample_ground_occupancy(Model model, const BitDistribution& dist, double t_end,
                                        RngStream& rng);

/// How replicas of a return-time experiment start and stop.
struct ReturnExperiment {
  Model model = Model::BF;
  std::int64_t horizon = 1'000'000;
  /// Start with the single active bit `initial_bit` (0 = ground start).
  BitIndex initial_bit = 0;
  /// Stop when bits 1..project_m are idle instead of all bits (BF only, 0 = off).
  BitIndex project_m = 0;
};

/// Replica i draws from RngStream(seed, kSteps, i); the result is identical
/// for every thread count.
std::vector<ReturnOutcome> simulate_returns(const BitDistribution& dist, const ReturnExperiment& exp,
                                            std::uint64_t seed, std::size_t replicas,
                                            unsigned threads = 0);

/// N_t for each replica; replica i draws from RngStream(seed, kSnapshot, i).
std::vector<std::int64_t> simulate_active_counts(Model model, const BitDistribution& dist, double t,
                                                 SnapshotMethod method, std::uint64_t seed,
                                                 std::size_t replicas, unsigned threads = 0);

}  // namespace bitflip
