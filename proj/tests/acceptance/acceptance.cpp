// Acceptance suite: one pass/fail line per criterion. With no arguments all
// criteria run; otherwise only the listed numbers. Exit status is non-zero if
// any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "bitflip/analytics.hpp"
#include "bitflip/cli.hpp"
#include "bitflip/coupling.hpp"
#include "bitflip/distributions.hpp"
#include "bitflip/engine.hpp"
#include "bitflip/estimators.hpp"
#include "bitflip/random.hpp"
#include "bitflip/stats.hpp"
#include "oracles.hpp"

using namespace bitflip;
using bitflip::testing::mean_estimate;

namespace {

constexpr std::uint64_t kMasterSeed = 20240611;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects sub-checks of one criterion; every check is reported.
class Report {
 public:
  void check(bool ok, const std::string& what) {
    pass_ = pass_ && ok;
    if (!detail_.empty()) detail_ += "; ";
    detail_ += what + (ok ? "" : " [FAIL]");
  }
  void note(const std::string& what) {
    if (!detail_.empty()) detail_ += "; ";
    detail_ += what;
  }
  Outcome done() const { return {pass_, detail_}; }

 private:
  bool pass_ = true;
  std::string detail_;
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string run_cli(const std::string& config, unsigned threads) {
  std::ostringstream out;
  cli::run_command(cli::parse_config(config), out, threads);
  return out.str();
}

// 1. E tau^{^m} = 2^m for Geometric(0.25), m = 1..4, within 3% at 2e5 replicas; < 2 minutes.
Outcome projected_return() {
  Report r;
  const auto start = std::chrono::steady_clock::now();
  const auto d = BitDistribution::geometric(0.25);
  for (BitIndex m = 1; m <= 4; ++m) {
    ReturnExperiment exp{Model::BF, 100'000'000, 0, m};
    std::vector<double> taus;
    std::size_t censored = 0;
    for (const auto& o : simulate_returns(d, exp, kMasterSeed, 200'000)) {
      taus.push_back(static_cast<double>(o.value_or_horizon()));
      censored += o.censored() ? 1 : 0;
    }
    const double target = std::ldexp(1.0, static_cast<int>(m));
    const double mean = mean_estimate(taus).mean;
    r.check(censored == 0 && std::abs(mean / target - 1.0) <= 0.03,
            "m=" + std::to_string(m) + " mean " + fmt(mean, 5) + " vs " + fmt(target));
  }
  const double elapsed = seconds_since(start);
  r.check(elapsed < 120.0, "runtime " + fmt(elapsed, 3) + " s < 120 s");
  return r.done();
}

// 2. Linear-system mean return time = 2^m to 1e-9 and MC within 3 SE, three random pmfs for m = 2, 3.
Outcome finite_support() {
  Report r;
  RngStream weights(kMasterSeed, StreamTag::kSynthetic, 2);
  int index = 0;
  for (std::size_t m : {2U, 3U}) {
    for (int rep = 0; rep < 3; ++rep, ++index) {
      std::vector<double> pmf(m);
      double total = 0.0;
      for (auto& w : pmf) total += (w = weights.uniform());
      for (auto& w : pmf) w /= total;
      const double exact = bitflip::testing::exact_bf_mean_return(pmf);
      const double target = std::ldexp(1.0, static_cast<int>(m));
      ReturnExperiment exp{Model::BF, 100'000'000, 0, 0};
      std::vector<double> taus;
      for (const auto& o : simulate_returns(BitDistribution::table(pmf), exp,
                                            derive_seed(kMasterSeed, StreamTag::kSteps, index), 100'000)) {
        taus.push_back(static_cast<double>(o.value_or_horizon()));
      }
      const auto est = mean_estimate(taus);
      r.check(std::abs(exact - target) <= 1e-9 && est.within(exact),
              "m=" + std::to_string(m) + " exact " + fmt(exact, 12) + " MC " + fmt(est.mean, 5) + "+-" +
                  fmt(est.std_error, 2));
    }
  }
  return r.done();
}

// 3. P(bit k active) at t = 1, 10 for Geometric(0.5), k = 1..3, within 3 SE at 1e5 replicas.
// Snapshots come from the exact Poisson embedding, not from the per-bit
// marginals under test.
Outcome per_bit_marginals() {
  Report r;
  const auto d = BitDistribution::geometric(0.5);
  constexpr std::size_t n = 100'000;
  for (Model model : {Model::BF, Model::DB}) {
    for (double t : {1.0, 10.0}) {
      std::vector<std::vector<double>> on(3, std::vector<double>(n));
      for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(kMasterSeed, StreamTag::kSnapshot, i + (model == Model::DB ? n : 0) + (t > 1.0 ? 2 * n : 0));
        const auto s = sample_snapshot(model, d, t, SnapshotMethod::PoissonEmbed, rng);
        for (BitIndex k = 1; k <= 3; ++k) on[static_cast<std::size_t>(k - 1)][i] = s.active.contains(k) ? 1.0 : 0.0;
      }
      for (BitIndex k = 1; k <= 3; ++k) {
        const double x = d.pmf(k) * t;
        const double target = model == Model::BF ? -std::expm1(-2.0 * x) / 2.0 : x * std::exp(-x);
        const auto est = mean_estimate(on[static_cast<std::size_t>(k - 1)]);
        r.check(est.within(target), std::string(to_string(model)) + " t=" + fmt(t) + " k=" + std::to_string(k) + " " +
                                        fmt(est.mean, 5) + " vs " + fmt(target, 5));
      }
    }
  }
  return r.done();
}

// 4. Log-log slope of the BF integrand for Geometric(0.3) over [1e2, 1e6].
Outcome integrand_power_law() {
  Report r;
  const double p = 0.3;
  GroundIntegrand phi(Model::BF, BitDistribution::geometric(p), 1e6);
  std::vector<double> x, y;
  for (int j = 0; j <= 64; ++j) {
    const double t = std::pow(10.0, 2.0 + j / 16.0);
    x.push_back(std::log(t));
    y.push_back(phi.log_value(t));
  }
  const double slope = least_squares(x, y).slope;
  const double lo = -std::log(2.0) / std::log(1.0 / p) - 0.05;
  const double hi = -std::log(1.99) / std::log(1.0 / p) + 0.05;
  r.check(slope >= lo && slope <= hi, "slope " + fmt(slope, 5) + " in [" + fmt(lo, 5) + ", " + fmt(hi, 5) + "]");
  return r.done();
}

// 5. Quadrature E T_tot for Geometric(0.7) vs simulated ground-state time over
// a 1e7 window, 1e3 replicas, within 5%.
Outcome transient_occupancy() {
  Report r;
  const auto d = BitDistribution::geometric(0.7);
  const auto quad = ground_occupancy_bf(d);
  std::vector<double> time, visits;
  for (std::size_t i = 0; i < 1000; ++i) {
    RngStream rng(kMasterSeed, StreamTag::kOccupancy, i);
    const auto occ = sample_ground_occupancy(Model::BF, d, 1e7, rng);
    time.push_back(occ.time);
    visits.push_back(static_cast<double>(occ.visits));
  }
  // Each ground sojourn lasts Exp(1), so the visit count is the conditional
  // mean of the holding time given the path of sojourns.
  const auto rb = mean_estimate(visits);
  const auto raw = mean_estimate(time);
  r.check(!quad.diverged && std::abs(rb.mean / quad.value - 1.0) <= 0.05,
          "quadrature " + fmt(quad.value, 8) + " vs MC " + fmt(rb.mean, 5) + "+-" + fmt(rb.std_error, 2));
  r.note("raw holding time " + fmt(raw.mean, 5) + "+-" + fmt(raw.std_error, 2));
  return r.done();
}

// 6. moments CSV at p = 0.25 and the Hill index of 1e5 BF return times.
Outcome moment_exponents() {
  Report r;
  const auto csv = run_cli(R"({"command":"moments","seed":)" + std::to_string(kMasterSeed) + "}", 1);
  std::istringstream lines(csv);
  std::string line, row;
  while (std::getline(lines, line)) {
    if (line.rfind("0.25,", 0) == 0) row = line;
  }
  const auto c1 = row.find(',', 5);
  const std::string r_lower = row.empty() ? "" : row.substr(5, c1 - 5);
  const double r_upper = row.empty() ? 0.0 : std::stod(row.substr(c1 + 1));
  r.check(r_lower == "0.5", "r_lower(0.25) = " + r_lower);
  r.check(std::abs(r_upper - 0.5963) <= 1e-4, "r_upper(0.25) = " + fmt(r_upper, 10));

  ReturnExperiment exp{Model::BF, 1'000'000, 0, 0};
  const auto runs = simulate_returns(BitDistribution::geometric(0.25), exp, kMasterSeed, 100'000);
  const auto tail = tail_index(runs, 0.1);
  std::size_t censored = 0;
  for (const auto& o : runs) censored += o.censored() ? 1 : 0;
  r.check(tail.theta >= 0.40 && tail.theta <= 0.70,
          "Hill theta " + fmt(tail.theta, 4) + " [" + fmt(tail.ci_low, 3) + ", " + fmt(tail.ci_high, 3) + "] in [0.40, 0.70]");
  r.note("regression theta " + fmt(tail.regression_theta, 4) + ", " + std::to_string(censored) + " censored at 1e6");
  return r.done();
}

// 7. Slope of log E[tau^r | M_0 = m], p = 0.25, r = 0.3, m = 2..8, <= log 2 + 0.2.
Outcome conditional_growth() {
  Report r;
  const std::vector<BitIndex> grid{2, 3, 4, 5, 6, 7, 8};
  GrowthOptions opt;
  opt.replicas = 2000;
  opt.horizon = 10'000'000;
  opt.seed = kMasterSeed;
  const auto fit = conditional_moment_growth(BitDistribution::geometric(0.25), 0.3, grid, opt);
  r.check(fit.slope <= std::log(2.0) + 0.2,
          "slope " + fmt(fit.slope, 4) + "+-" + fmt(fit.slope_se, 2) + " <= " + fmt(std::log(2.0) + 0.2, 4));
  r.note("E tau^r at m=2 " + fmt(fit.points.front().moment, 4) + ", at m=8 " + fmt(fit.points.back().moment, 4) +
         ", censored at m=8: " + fmt(100.0 * fit.points.back().censored_fraction, 3) + "%");
  return r.done();
}

// 8. Coupling audits.
Outcome coupling_audits() {
  Report r;
  const auto dom = audit_domination(BitDistribution::geometric(0.4), 1000, 1000, kMasterSeed);
  r.check(dom.violations == 0, "domination violations " + std::to_string(dom.violations) + " over " +
                                   std::to_string(dom.runs) + "x" + std::to_string(dom.steps_per_run));
  const auto ord = audit_bf_db(BitDistribution::geometric(0.3), 10'000, 100'000, kMasterSeed);
  r.check(ord.db_not_after_bf == ord.runs, "tau_DB <= tau_BF on " + std::to_string(ord.db_not_after_bf) + "/" +
                                               std::to_string(ord.runs) + " (" + std::to_string(ord.both_finite) +
                                               " both finite)");

  // The discrepancy set of a coupled pair after 1e3 steps; it is infinite
  // (every bit >= K where the upper chain starts active and the lower is idle).
  CoupledPair pair(BitDistribution::geometric(0.4), derive_seed(kMasterSeed, StreamTag::kUpperInit, 0));
  RngStream steps(kMasterSeed, StreamTag::kCoupling, 0);
  for (int n = 0; n < 1000; ++n) pair.step(steps.uniform());
  RngStream u(kMasterSeed, StreamTag::kSynthetic, 8);
  std::vector<double> images(1'000'000);
  std::size_t moved = 0;
  for (auto& v : images) {
    const double x = u.uniform();
    v = pair.swap(x);
    moved += v != x ? 1 : 0;
  }
  const auto ks = ks_uniform(std::move(images));
  r.check(ks.p_value > 0.001, "swap_map KS p = " + fmt(ks.p_value, 3) + " (" + std::to_string(moved) + " of 1e6 swapped)");
  return r.done();
}

// Distance from N(0,1) of the exact law of the standardized N_t, a sum of
// independent Bernoulli(f(p_k t)). No sample can do better than this.
double exact_lattice_ks(const BitDistribution& dist, Model model, double t) {
  std::vector<double> q;
  for (BitIndex k = 1; dist.tail(k - 1) * t >= 1e-12; ++k) {
    const double x = dist.pmf(k) * t;
    q.push_back(model == Model::BF ? -std::expm1(-2.0 * x) / 2.0 : x * std::exp(-x));
  }
  double mean = 0.0, var = 0.0;
  for (double v : q) {
    mean += v;
    var += v * (1.0 - v);
  }
  const auto pmf = bitflip::testing::poisson_binomial(q);
  double cdf = 0.0, sup = 0.0;
  for (std::size_t j = 0; j < pmf.size(); ++j) {
    const double z = normal_cdf((static_cast<double>(j) - mean) / std::sqrt(var));
    sup = std::max(sup, std::abs(cdf - z));
    cdf += pmf[j];
    sup = std::max(sup, std::abs(cdf - z));
  }
  return sup;
}

// 9. CLT for N_t: BF Geometric(0.3) at t = 1e6 and DB StretchedExp(1, 0.5) at t = e^25, 1e4 replicas.
Outcome clt() {
  Report r;
  struct Case {
    const char* name;
    BitDistribution dist;
    Model model;
    double t;
    double ks_limit;
    bool moment_checks;
  };
  const std::vector<Case> cases{{"BF geo(0.3) t=1e6", BitDistribution::geometric(0.3), Model::BF, 1e6, 0.05, true},
                                {"DB se(1,0.5) t=e^25", BitDistribution::stretched_exp(1.0, 0.5), Model::DB,
                                 std::exp(25.0), 0.1, true}};
  for (const auto& c : cases) {
    const auto start = std::chrono::steady_clock::now();
    const auto out = clt_check(c.dist, c.model, c.t, {10'000, kMasterSeed, SnapshotMethod::PerBit, 0});
    const double elapsed = seconds_since(start);
    const double ks = *out.summary.ks_statistic;
    const std::string tag = std::string(c.name) + " ";
    r.check(ks < c.ks_limit, tag + "KS " + fmt(ks, 4) + " < " + fmt(c.ks_limit));
    if (c.moment_checks) {
      r.check(std::abs(out.standardized_mean) < 0.05, tag + "mean " + fmt(out.standardized_mean, 3));
      r.check(out.standardized_variance >= 0.9 && out.standardized_variance <= 1.1,
              tag + "var " + fmt(out.standardized_variance, 4));
    }
    r.check(elapsed < 600.0, tag + "runtime " + fmt(elapsed, 3) + " s");
    r.note(tag + "E N_t " + fmt(out.expected, 5) + ", continuity-corrected KS " + fmt(out.ks_continuity_corrected, 3) +
           ", exact lattice KS " + fmt(exact_lattice_ks(c.dist, c.model, c.t), 3));
  }
  return r.done();
}

// 10. Classifier table.
Outcome classifier_table() {
  Report r;
  struct Row {
    const char* name;
    BitDistribution dist;
    Verdict bf;
    Verdict db;
  };
  const std::vector<Row> rows{
      {"geo(0.4)", BitDistribution::geometric(0.4), Verdict::Recurrent, Verdict::Recurrent},
      {"geo(0.5)", BitDistribution::geometric(0.5), Verdict::Recurrent, Verdict::Recurrent},
      {"geo(0.6)", BitDistribution::geometric(0.6), Verdict::Transient, Verdict::Recurrent},
      {"se(1,0.3)", BitDistribution::stretched_exp(1.0, 0.3), Verdict::Recurrent, Verdict::Transient},
      {"se(1,0.7)", BitDistribution::stretched_exp(1.0, 0.7), Verdict::Recurrent, Verdict::Undetermined},
      {"kappa", BitDistribution::kappa(), Verdict::Recurrent, Verdict::Undetermined},
  };
  for (const auto& row : rows) {
    const Verdict bf = classify_bf(row.dist);
    const Verdict db = classify_db(row.dist);
    r.check(bf == row.bf && db == row.db,
            std::string(row.name) + " " + std::string(to_string(bf)) + "/" + std::string(to_string(db)));
  }
  return r.done();
}

// 11. Mean of 1e5 BF return times for Geometric(0.3) exceeds the mean of 1e3 by >= 50%.
// Censored runs enter at the horizon, which keeps the 1e5 mean a lower bound.
Outcome null_recurrence() {
  Report r;
  ReturnExperiment exp{Model::BF, 100'000'000, 0, 0};
  const auto runs = simulate_returns(BitDistribution::geometric(0.3), exp, kMasterSeed, 100'000);
  double head = 0.0, all = 0.0;
  std::size_t head_censored = 0, censored = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto v = static_cast<double>(runs[i].value_or_horizon());
    all += v;
    censored += runs[i].censored() ? 1 : 0;
    if (i < 1000) {
      head += v;
      head_censored += runs[i].censored() ? 1 : 0;
    }
  }
  head /= 1000.0;
  all /= static_cast<double>(runs.size());
  r.check(all >= 1.5 * head, "mean(1e5) " + fmt(all, 6) + " vs mean(1e3) " + fmt(head, 6) + ", ratio " +
                                 fmt(all / head, 4) + " >= 1.5");
  r.note("censored at 1e8: " + std::to_string(censored) + " of 1e5, " + std::to_string(head_censored) + " of 1e3");
  return r.done();
}

// 12. Byte-identical output for the same config and seed, across thread counts.
Outcome determinism() {
  Report r;
  const std::string seed = std::to_string(kMasterSeed);
  const std::vector<std::string> configs{
      R"({"command":"simulate","dist":{"family":"geometric","p":0.3},"replicas":2000,"horizon":100000,"seed":)" + seed + "}",
      R"({"command":"snapshot","model":"db","dist":{"family":"stretched_exp","alpha":1,"gamma":0.5},"t":1e6,"replicas":2000,"seed":)" + seed + "}",
      R"({"command":"snapshot","method":"poisson_embed","dist":{"family":"geometric","p":0.5},"t":300,"replicas":2000,"seed":)" + seed + "}",
      R"({"command":"clt","dist":{"family":"geometric","p":0.3},"t":1e4,"replicas":2000,"seed":)" + seed + "}",
      R"({"command":"couple-audit","dist":{"family":"geometric","p":0.4},"replicas":200,"horizon":500,"seed":)" + seed + "}",
      R"({"command":"returns","dist":{"family":"geometric","p":0.25},"replicas":20000,"horizon":100000,"seed":)" + seed + "}",
      R"({"command":"growth","dist":{"family":"geometric","p":0.4},"r_grid":[0.1],"m_grid":[2,3,4],"replicas":200,"horizon":10000,"seed":)" + seed + "}",
  };
  for (const auto& config : configs) {
    const auto name = cli::parse_config(config).command;
    const auto a = run_cli(config, 1);
    const auto b = run_cli(config, 1);
    const auto c = run_cli(config, 3);
    r.check(a == b && a == c, name + " (" + std::to_string(a.size()) + " bytes)");
  }
  return r.done();
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "projected return time mean 2^m", projected_return},
      {2, "finite-support exact oracle", finite_support},
      {3, "per-bit marginals", per_bit_marginals},
      {4, "BF integrand power law", integrand_power_law},
      {5, "transient occupancy agreement", transient_occupancy},
      {6, "moment exponents and tail index", moment_exponents},
      {7, "conditional moment growth", conditional_growth},
      {8, "coupling audits", coupling_audits},
      {9, "CLT for N_t", clt},
      {10, "classifier table", classifier_table},
      {11, "null recurrence (divergent mean)", null_recurrence},
      {12, "determinism across thread counts", determinism},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(start);
    failures += out.pass ? 0 : 1;
    std::printf("%s criterion %2d: %s | %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.title,
                out.detail.c_str(), elapsed);
    std::fflush(stdout);
  }
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
