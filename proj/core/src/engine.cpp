#include "bitflip/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "bitflip/parallel.hpp"

namespace bitflip {

std::string_view to_string(Model m) { return m == Model::BF ? "bf" : "db"; }

void IndexSet::insert(BitIndex k) {
  if (contains(k)) return;
  if (k < kDenseLimit) {
    words_[static_cast<std::size_t>(k >> 6)] |= std::uint64_t{1} << (k & 63);
  } else {
    overflow_.insert(k);
  }
  ++size_;
  max_ = std::max(max_, k);
}

void IndexSet::erase(BitIndex k) {
  if (!contains(k)) return;
  if (k < kDenseLimit) {
    words_[static_cast<std::size_t>(k >> 6)] &= ~(std::uint64_t{1} << (k & 63));
  } else {
    overflow_.erase(k);
  }
  --size_;
  if (k == max_) recompute_max();
}

void IndexSet::recompute_max() {
  if (!overflow_.empty()) {
    max_ = *std::max_element(overflow_.begin(), overflow_.end());
    return;
  }
  for (std::size_t w = words_.size(); w-- > 0;) {
    if (words_[w] != 0) {
      max_ = static_cast<BitIndex>(64 * w + 63 - static_cast<std::size_t>(std::countl_zero(words_[w])));
      return;
    }
  }
  max_ = 0;
}

std::vector<BitIndex> IndexSet::sorted() const {
  std::vector<BitIndex> out;
  out.reserve(size_);
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t bits = words_[w];
    while (bits != 0) {
      out.push_back(static_cast<BitIndex>(64 * w + static_cast<std::size_t>(std::countr_zero(bits))));
      bits &= bits - 1;
    }
  }
  const auto dense = out.size();
  out.insert(out.end(), overflow_.begin(), overflow_.end());
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(dense), out.end());
  return out;
}

BitState BitState::with_active(Model model, std::span<const BitIndex> bits) {
  BitState s = ground(model);
  for (BitIndex k : bits) {
    if (k < 1) throw std::domain_error("BitState: bit indices must be >= 1");
    s.active.insert(k);
  }
  return s;
}

void BitState::apply(BitIndex index) {
  if (model == Model::BF) {
    active.toggle(index);
  } else if (!damaged.contains(index)) {
    if (active.contains(index)) {
      active.erase(index);
      damaged.insert(index);
    } else {
      active.insert(index);
    }
  }
  ++step;
}

BitState step_bf(BitState state, BitIndex index) {
  state.model = Model::BF;
  state.apply(index);
  return state;
}

BitState step_db(BitState state, BitIndex index) {
  state.model = Model::DB;
  state.apply(index);
  return state;
}

ReturnOutcome run_return_time(const BitDistribution& dist, BitState initial, std::int64_t horizon,
                              RngStream& rng) {
  if (horizon < 1) throw std::domain_error("run_return_time: horizon must be >= 1");
  ReturnOutcome out;
  out.horizon = horizon;
  out.m0 = initial.max_active();
  out.peak_m = out.m0;
  BitState s = std::move(initial);
  for (std::int64_t n = 1; n <= horizon; ++n) {
    s.apply(dist.quantile(rng.uniform()));
    out.peak_m = std::max(out.peak_m, s.max_active());
    if (s.is_ground()) {
      out.tau = n;
      return out;
    }
  }
  return out;
}

ReturnOutcome run_projected_return(BitIndex m, const BitDistribution& dist, std::int64_t horizon,
                                   RngStream& rng) {
  if (m < 1) throw std::domain_error("run_projected_return: m must be >= 1");
  if (horizon < 1) throw std::domain_error("run_projected_return: horizon must be >= 1");
  ReturnOutcome out;
  out.horizon = horizon;
  BitState s = BitState::ground(Model::BF);
  std::int64_t low_active = 0;
  for (std::int64_t n = 1; n <= horizon; ++n) {
    const BitIndex k = dist.quantile(rng.uniform());
    if (k <= m) low_active += s.active.contains(k) ? -1 : 1;
    s.apply(k);
    out.peak_m = std::max(out.peak_m, s.max_active());
    if (low_active == 0) {
      out.tau = n;
      return out;
    }
  }
  return out;
}

namespace {

// Per-bit rates p_k t for k = 1..K, K the snapshot truncation index.
struct SnapshotPlan {
  std::vector<double> x;

  SnapshotPlan(const BitDistribution& dist, double t) {
    const BitIndex last = dist.truncation_index(t, kSnapshotTruncation);
    x.reserve(static_cast<std::size_t>(last));
    for (BitIndex k = 1; k <= last; ++k) x.push_back(dist.pmf(k) * t);
  }
};

void check_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::domain_error("snapshot: t must be positive and finite");
}

BitState sample_per_bit(Model model, const SnapshotPlan& plan, RngStream& rng) {
  BitState s = BitState::ground(model);
  for (std::size_t i = 0; i < plan.x.size(); ++i) {
    const double x = plan.x[i];
    const auto k = static_cast<BitIndex>(i + 1);
    const double u = rng.uniform();
    if (model == Model::BF) {
      if (u < -0.5 * std::expm1(-2.0 * x)) s.active.insert(k);
    } else {
      const double active = x * std::exp(-x);
      if (u < active) {
        s.active.insert(k);
      } else if (u < -std::expm1(-x)) {
        s.damaged.insert(k);
      }
    }
  }
  return s;
}

BitState sample_embedded(Model model, const BitDistribution& dist, double t, RngStream& rng) {
  BitState s = BitState::ground(model);
  const auto n = static_cast<std::int64_t>(rng.poisson(t));
  for (std::int64_t i = 0; i < n; ++i) s.apply(dist.quantile(rng.uniform()));
  return s;
}

}  // namespace

BitState sample_snapshot(Model model, const BitDistribution& dist, double t, SnapshotMethod method,
                         RngStream& rng) {
  check_time(t);
  if (method == SnapshotMethod::PoissonEmbed) return sample_embedded(model, dist, t, rng);
  return sample_per_bit(model, SnapshotPlan(dist, t), rng);
}

GroundOccupancy accumulate_ground_time(Model model, const BitDistribution& dist,
                                       std::int64_t horizon, RngStream& rng) {
  if (horizon < 1) throw std::domain_error("accumulate_ground_time: horizon must be >= 1");
  GroundOccupancy occ;
  BitState s = BitState::ground(model);
  occ.time += rng.exponential(1.0);
  occ.visits = 1;
  bool was_ground = true;
  for (std::int64_t n = 1; n <= horizon; ++n) {
    s.apply(dist.quantile(rng.uniform()));
    const bool ground = s.is_ground();
    if (ground) {
      occ.time += rng.exponential(1.0);
      if (!was_ground) ++occ.visits;
    }
    was_ground = ground;
  }
  return occ;
}

namespace {

using Interval = std::pair<double, double>;

// Removes [lo, hi) from a sorted list of disjoint intervals.
void remove_span(std::vector<Interval>& intervals, double lo, double hi) {
  if (!(hi > lo)) return;
  auto first = std::lower_bound(intervals.begin(), intervals.end(), lo,
                                [](const Interval& iv, double v) { return iv.second <= v; });
  if (first == intervals.end() || first->first >= hi) return;
  std::vector<Interval> replacement;
  auto last = first;
  for (; last != intervals.end() && last->first < hi; ++last) {
    if (last->first < lo) replacement.emplace_back(last->first, lo);
    if (last->second > hi) replacement.emplace_back(hi, last->second);
  }
  const auto pos = intervals.erase(first, last);
  intervals.insert(pos, replacement.begin(), replacement.end());
}

// min{k > base : Q_k < w Q_base}: a draw from P conditioned on indices above base.
BitIndex sample_above(const BitDistribution& dist, BitIndex base, double w) {
  const double target = w * dist.tail(base);
  BitIndex lo = base;
  BitIndex step = 1;
  BitIndex hi = base + step;
  while (!(dist.tail(hi) < target)) {
    lo = hi;
    step *= 2;
    hi = base + step;
  }
  while (hi - lo > 1) {
    const BitIndex mid = lo + (hi - lo) / 2;
    (dist.tail(mid) < target ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

GroundOccupancy sample_ground_occupancy(Model model, const BitDistribution& dist, double t_end,
                                        RngStream& rng) {
  check_time(t_end);
  std::vector<Interval> idle{{0.0, t_end}};

  // Bits above `split` flip rarely (< 1 expected event in total): draw their
  // superposed event stream, a rate-Q_split Poisson process with marks
  // distributed as P restricted to k > split.
  const BitIndex split = dist.truncation_index(t_end, 1.0);
  const double high_rate = dist.tail(split);
  if (high_rate > 0.0) {
    std::map<BitIndex, std::vector<double>> events;
    const auto count = rng.poisson(high_rate * t_end);
    for (std::uint64_t i = 0; i < count; ++i) {
      const double at = rng.uniform() * t_end;
      events[sample_above(dist, split, rng.uniform())].push_back(at);
    }
    for (auto& [bit, times] : events) {
      std::sort(times.begin(), times.end());
      if (model == Model::DB) {
        remove_span(idle, times[0], times.size() > 1 ? times[1] : t_end);
      } else {
        for (std::size_t i = 0; i < times.size(); i += 2) {
          remove_span(idle, times[i], i + 1 < times.size() ? times[i + 1] : t_end);
        }
      }
    }
  }

  std::vector<Interval> next;
  for (BitIndex k = split; k >= 1 && !idle.empty(); --k) {
    const double rate = dist.pmf(k);
    if (rate == 0.0) continue;
    if (model == Model::DB) {
      const double on = rng.exponential(rate);
      if (on < t_end) remove_span(idle, on, std::min(t_end, on + rng.exponential(rate)));
      continue;
    }
    // BF: simulate bit k only inside the current idle windows; across a gap
    // its state advances by the parity of a Poisson(rate * gap) count.
    next.clear();
    int state = 0;
    double last = 0.0;
    for (const auto& [a, b] : idle) {
      const double gap = a - last;
      if (gap > 0.0 && rng.uniform() < -0.5 * std::expm1(-2.0 * rate * gap)) state ^= 1;
      double cur = a;
      for (;;) {
        const double flip = cur + rng.exponential(rate);
        const double end = std::min(flip, b);
        if (state == 0 && end > cur) next.emplace_back(cur, end);
        if (flip >= b) break;
        state ^= 1;
        cur = flip;
      }
      last = b;
    }
    idle.swap(next);
  }

  GroundOccupancy occ;
  for (const auto& [a, b] : idle) occ.time += b - a;
  occ.visits = static_cast<std::int64_t>(idle.size());
  return occ;
}

std::vector<ReturnOutcome> simulate_returns(const BitDistribution& dist, const ReturnExperiment& exp,
                                            std::uint64_t seed, std::size_t replicas,
                                            unsigned threads) {
  if (exp.horizon < 1) throw std::domain_error("simulate_returns: horizon must be >= 1");
  if (exp.project_m > 0 && exp.model != Model::BF) {
    throw std::domain_error("simulate_returns: projected returns are defined for BF only");
  }
  std::vector<ReturnOutcome> out(replicas);
  parallel_for(replicas, threads, [&](std::size_t i) {
    RngStream rng(seed, StreamTag::kSteps, i);
    if (exp.project_m > 0) {
      out[i] = run_projected_return(exp.project_m, dist, exp.horizon, rng);
      return;
    }
    BitState start = BitState::ground(exp.model);
    if (exp.initial_bit > 0) start.active.insert(exp.initial_bit);
    out[i] = run_return_time(dist, std::move(start), exp.horizon, rng);
  });
  return out;
}

std::vector<std::int64_t> simulate_active_counts(Model model, const BitDistribution& dist, double t,
                                                 SnapshotMethod method, std::uint64_t seed,
                                                 std::size_t replicas, unsigned threads) {
  check_time(t);
  std::vector<std::int64_t> out(replicas);
  if (method == SnapshotMethod::PerBit) {
    const SnapshotPlan plan(dist, t);
    parallel_for(replicas, threads, [&](std::size_t i) {
      RngStream rng(seed, StreamTag::kSnapshot, i);
      out[i] = static_cast<std::int64_t>(sample_per_bit(model, plan, rng).active_count());
    });
  } else {
    parallel_for(replicas, threads, [&](std::size_t i) {
      RngStream rng(seed, StreamTag::kSnapshot, i);
      out[i] = static_cast<std::int64_t>(sample_embedded(model, dist, t, rng).active_count());
    });
  }
  return out;
}

}  // namespace bitflip
