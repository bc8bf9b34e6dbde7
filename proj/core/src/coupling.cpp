#include "bitflip/coupling.hpp"

#include <algorithm>
#include <string>

#include "bitflip/parallel.hpp"

namespace bitflip {

BitIndex buffer_index_k(const BitDistribution& dist) {
  BitIndex k = 1;
  while (dist.tail(k - 1) > 0.5) ++k;
  return k;
}

CouplingViolation::CouplingViolation(BitIndex index, std::int64_t step)
    : std::logic_error("coupling: lower chain exceeds upper chain at bit " + std::to_string(index) +
                       " after step " + std::to_string(step)),
      index_(index),
      step_(step) {}

CoupledPair::CoupledPair(BitDistribution dist, std::uint64_t upper_seed)
    : dist_(std::move(dist)),
      upper_seed_(upper_seed),
      buffer_k_(buffer_index_k(dist_)),
      lower_(BitState::ground(Model::BF)) {}

int CoupledPair::upper_initial(BitIndex k) const {
  return static_cast<int>(derive_seed(upper_seed_, StreamTag::kUpperInit, static_cast<std::uint64_t>(k)) >> 63);
}

std::vector<BitIndex> CoupledPair::touched_discrepancies() const {
  std::vector<BitIndex> out;
  for (BitIndex k : touched_.sorted()) {
    if (in_discrepancy(k)) out.push_back(k);
  }
  return out;
}

std::pair<BitIndex, BitIndex> CoupledPair::step(double u) {
  const BitIndex lo = dist_.quantile(u);
  const BitIndex hi = dist_.quantile(swap(u));
  lower_.apply(lo);
  upper_flips_.toggle(hi);
  touched_.insert(lo);
  touched_.insert(hi);
  for (BitIndex k : {lo, hi}) {
    if (k >= buffer_k_ && lower_at(k) > upper_at(k)) throw CouplingViolation(k, lower_.step);
  }
  return {lo, hi};
}

std::size_t CoupledPair::count_violations() const {
  std::size_t n = 0;
  for (BitIndex k : touched_.sorted()) {
    if (k >= buffer_k_ && lower_at(k) > upper_at(k)) ++n;
  }
  return n;
}

DominationAudit audit_domination(const BitDistribution& dist, std::size_t runs, std::int64_t steps,
                                 std::uint64_t seed, unsigned threads) {
  std::vector<std::size_t> violations(runs, 0);
  std::vector<std::size_t> swapped(runs, 0);
  parallel_for(runs, threads, [&](std::size_t i) {
    RngStream rng(seed, StreamTag::kCoupling, i);
    CoupledPair pair(dist, derive_seed(seed, StreamTag::kUpperInit, i));
    for (std::int64_t n = 0; n < steps; ++n) {
      const double u = rng.uniform();
      std::pair<BitIndex, BitIndex> flipped;
      try {
        flipped = pair.step(u);
      } catch (const CouplingViolation&) {
        ++violations[i];
        continue;
      }
      if (flipped.first != flipped.second) ++swapped[i];
    }
    violations[i] += pair.count_violations();
  });
  DominationAudit audit;
  audit.runs = runs;
  audit.steps_per_run = steps;
  for (std::size_t i = 0; i < runs; ++i) {
    audit.violations += violations[i];
    audit.swapped_steps += swapped[i];
  }
  return audit;
}

namespace {

class CoupledRun {
 public:
  explicit CoupledRun(std::int64_t horizon) {
    out_.db.horizon = out_.bf.horizon = horizon;
  }

  // Returns true once both chains have returned.
  bool advance(BitIndex k) {
    ++n_;
    if (!out_.bf.tau) {
      bf_.apply(k);
      out_.bf.peak_m = std::max(out_.bf.peak_m, bf_.max_active());
      if (bf_.is_ground()) out_.bf.tau = n_;
    }
    if (!out_.db.tau) {
      db_.apply(k);
      out_.db.peak_m = std::max(out_.db.peak_m, db_.max_active());
      if (db_.is_ground()) out_.db.tau = n_;
    }
    return out_.bf.tau && out_.db.tau;
  }

  const CoupledReturns& result() const { return out_; }

 private:
  BitState bf_ = BitState::ground(Model::BF);
  BitState db_ = BitState::ground(Model::DB);
  CoupledReturns out_;
  std::int64_t n_ = 0;
};

}  // namespace

CoupledReturns couple_bf_db(const BitDistribution& dist, std::int64_t horizon, RngStream& rng) {
  if (horizon < 1) throw std::domain_error("couple_bf_db: horizon must be >= 1");
  CoupledRun run(horizon);
  for (std::int64_t n = 0; n < horizon; ++n) {
    if (run.advance(dist.quantile(rng.uniform()))) break;
  }
  return run.result();
}

CoupledReturns couple_bf_db(std::span<const BitIndex> indices) {
  if (indices.empty()) throw std::domain_error("couple_bf_db: empty index sequence");
  CoupledRun run(static_cast<std::int64_t>(indices.size()));
  for (BitIndex k : indices) {
    if (k < 1) throw std::domain_error("couple_bf_db: bit indices must be >= 1");
    if (run.advance(k)) break;
  }
  return run.result();
}

OrderingAudit audit_bf_db(const BitDistribution& dist, std::size_t runs, std::int64_t horizon,
                          std::uint64_t seed, unsigned threads) {
  std::vector<CoupledReturns> results(runs);
  parallel_for(runs, threads, [&](std::size_t i) {
    RngStream rng(seed, StreamTag::kCoupling, i);
    results[i] = couple_bf_db(dist, horizon, rng);
  });
  OrderingAudit audit;
  audit.runs = runs;
  for (const auto& r : results) {
    if (r.bf.censored()) ++audit.bf_censored;
    if (r.db.censored()) ++audit.db_censored;
    if (r.bf.tau && r.db.tau) ++audit.both_finite;
    if (r.bf.censored() || (r.db.tau && *r.db.tau <= *r.bf.tau)) ++audit.db_not_after_bf;
  }
  return audit;
}

}  // namespace bitflip
