#include "bitflip/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bitflip/analytics.hpp"
#include "bitflip/coupling.hpp"
#include "bitflip/estimators.hpp"
#include "bitflip/version.hpp"

namespace bitflip::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const std::set<std::string> kKnownFields{
    "command", "model",  "dist",      "seed",   "replicas",  "horizon",   "t",         "r_grid", "m_grid",
    "p_grid",  "output", "tolerance", "method", "initial_m", "project_m", "t_max", "k_fraction"};

bool is_command(const std::string& name) {
  const auto& names = command_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

double positive_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "must be a number");
  const double x = v.get<double>();
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(path, "must be positive and finite");
  return x;
}

std::int64_t integer(const json& v, const std::string& path, std::int64_t min) {
  if (!v.is_number_integer()) throw ConfigError(path, "must be an integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    throw ConfigError(path, "is too large");
  }
  const auto x = v.get<std::int64_t>();
  if (x < min) throw ConfigError(path, "must be >= " + std::to_string(min));
  return x;
}

template <class T, class Parse>
std::vector<T> list(const json& v, const std::string& path, Parse parse) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "must be a non-empty array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

void require_dist(const ExperimentConfig& c) {
  if (!c.dist) throw ConfigError("dist", "missing required field for command '" + c.command + "'");
}

void require_t(const ExperimentConfig& c) {
  if (!c.t) throw ConfigError("t", "missing required field for command '" + c.command + "'");
}

std::string num(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_csv_header(std::ostream& out, const ExperimentConfig& c, std::string_view columns) {
  out << "# bitflip " << kVersion << "\n";
  out << "# config: " << c.resolved.dump() << "\n";
  out << "# convention: bf active probability (1 - exp(-2 p_k t))/2\n";
  out << columns << "\n";
}

void write_json(std::ostream& out, const ExperimentConfig& c, ordered_json result) {
  ordered_json doc;
  doc["tool"] = "bitflip";
  doc["version"] = kVersion;
  doc["config"] = c.resolved;
  doc["conventions"] = {{"bf_active_probability", "(1 - exp(-2 p_k t))/2"}};
  doc["result"] = std::move(result);
  out << doc.dump(2) << "\n";
}

ordered_json report_json(const AnalyticReport& r) {
  ordered_json j;
  j["quantity"] = r.quantity;
  j["value"] = r.value;
  j["error_estimate"] = r.error_estimate;
  j["diverged"] = r.diverged;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json summary_json(const EstimatorSummary& s) {
  ordered_json j;
  j["n_samples"] = s.n_samples;
  j["censored_fraction"] = s.censored_fraction;
  j["mean"] = optional_json(s.mean);
  j["subsample_mean"] = optional_json(s.subsample_mean);
  j["mean_unstable"] = s.mean_unstable;
  ordered_json moments = ordered_json::array();
  for (const auto& fm : s.fractional_moments) {
    moments.push_back({{"r", fm.r},
                       {"estimate", fm.estimate},
                       {"subsample_estimate", fm.subsample_estimate},
                       {"relative_change", fm.relative_change}});
  }
  j["fractional_moments"] = std::move(moments);
  if (s.tail_index) {
    const auto& ti = *s.tail_index;
    j["tail_index"] = {{"theta", ti.theta},
                       {"ci_low", ti.ci_low},
                       {"ci_high", ti.ci_high},
                       {"k", ti.k},
                       {"exceedances", ti.exceedances},
                       {"regression_theta", ti.regression_theta},
                       {"heavy", ti.heavy}};
  } else {
    j["tail_index"] = nullptr;
  }
  j["ks_statistic"] = optional_json(s.ks_statistic);
  j["ks_p_value"] = optional_json(s.ks_p_value);
  j["skewness"] = optional_json(s.skewness);
  j["excess_kurtosis"] = optional_json(s.excess_kurtosis);
  j["notes"] = s.notes;
  return j;
}

void cmd_simulate(const ExperimentConfig& c, std::ostream& out, unsigned threads) {
  require_dist(c);
  ReturnExperiment exp{c.model, c.horizon, c.initial_m, c.project_m};
  const auto runs = simulate_returns(*c.dist, exp, c.seed, c.replicas, threads);
  write_csv_header(out, c, "replica_id,tau,censored,m0,peak_m");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    out << i << ',' << (r.tau ? std::to_string(*r.tau) : std::string()) << ',' << (r.censored() ? 1 : 0) << ','
        << r.m0 << ',' << r.peak_m << '\n';
  }
}

void cmd_snapshot(const ExperimentConfig& c, std::ostream& out, unsigned threads) {
  require_dist(c);
  require_t(c);
  const auto counts = simulate_active_counts(c.model, *c.dist, *c.t, c.method, c.seed, c.replicas, threads);
  write_csv_header(out, c, "replica_id,n_active");
  for (std::size_t i = 0; i < counts.size(); ++i) out << i << ',' << counts[i] << '\n';
}

void cmd_analyze(const ExperimentConfig& c, std::ostream& out) {
  require_dist(c);
  ordered_json result;
  if (c.t) {
    result["expected_active"] = report_json(expected_active(*c.dist, c.model, *c.t));
    result["variance_active"] = report_json(variance_active(*c.dist, c.model, *c.t));
  }
  result["ground_occupancy"] = report_json(c.model == Model::BF ? ground_occupancy_bf(*c.dist, c.t_max, c.tolerance)
                                                                 : ground_occupancy_db(*c.dist, c.t_max, c.tolerance));
  write_json(out, c, std::move(result));
}

void cmd_classify(const ExperimentConfig& c, std::ostream& out) {
  require_dist(c);
  ordered_json result;
  result["bf"] = std::string(to_string(classify_bf(*c.dist)));
  result["db"] = std::string(to_string(classify_db(*c.dist)));
  write_json(out, c, std::move(result));
}

void cmd_moments(const ExperimentConfig& c, std::ostream& out) {
  for (std::size_t i = 0; i < c.p_grid.size(); ++i) {
    const double p = c.p_grid[i];
    if (!(p > 0.0 && p < 0.5)) throw ConfigError("p_grid[" + std::to_string(i) + "]", "must lie in (0, 0.5)");
  }
  write_csv_header(out, c, "p,r_lower,r_upper");
  for (double p : c.p_grid) {
    const auto b = moment_bounds(p);
    out << num(p) << ',' << num(b.r_lower) << ',' << num(b.r_upper) << '\n';
  }
}

void cmd_clt(const ExperimentConfig& c, std::ostream& out, unsigned threads) {
  require_dist(c);
  require_t(c);
  const auto clt = clt_check(*c.dist, c.model, *c.t, {c.replicas, c.seed, c.method, threads});
  ordered_json result;
  result["expected_active"] = clt.expected;
  result["variance_active"] = clt.variance;
  result["standardized_mean"] = clt.standardized_mean;
  result["standardized_variance"] = clt.standardized_variance;
  result["ks_continuity_corrected"] = clt.ks_continuity_corrected;
  result["summary"] = summary_json(clt.summary);
  write_json(out, c, std::move(result));
}

void cmd_couple_audit(const ExperimentConfig& c, std::ostream& out, unsigned threads) {
  require_dist(c);
  const auto dom = audit_domination(*c.dist, c.replicas, c.horizon, c.seed, threads);
  const auto ord = audit_bf_db(*c.dist, c.replicas, c.horizon, c.seed, threads);
  ordered_json result;
  result["buffer_k"] = buffer_index_k(*c.dist);
  result["domination"] = {{"runs", dom.runs},
                          {"steps_per_run", dom.steps_per_run},
                          {"violations", dom.violations},
                          {"swapped_steps", dom.swapped_steps}};
  result["ordering"] = {{"runs", ord.runs},
                        {"both_finite", ord.both_finite},
                        {"db_not_after_bf", ord.db_not_after_bf},
                        {"bf_censored", ord.bf_censored},
                        {"db_censored", ord.db_censored},
                        {"holds", ord.db_not_after_bf == ord.runs}};
  write_json(out, c, std::move(result));
}

void cmd_returns(const ExperimentConfig& c, std::ostream& out, unsigned threads) {
  require_dist(c);
  ReturnExperiment exp{c.model, c.horizon, c.initial_m, c.project_m};
  const auto runs = simulate_returns(*c.dist, exp, c.seed, c.replicas, threads);
  EstimatorSummary s = return_stats(runs, c.r_grid);
  std::size_t uncensored = 0;
  for (const auto& r : runs) uncensored += r.censored() ? 0 : 1;
  if (uncensored >= kMinTailSamples) s.tail_index = tail_index(runs, c.k_fraction);
  write_json(out, c, summary_json(s));
}

void cmd_growth(const ExperimentConfig& c, std::ostream& out, unsigned threads) {
  require_dist(c);
  ordered_json result = ordered_json::array();
  for (double r : c.r_grid) {
    const auto fit = conditional_moment_growth(*c.dist, r, c.m_grid, {c.replicas, c.horizon, c.seed, threads});
    ordered_json points = ordered_json::array();
    for (const auto& pt : fit.points) {
      points.push_back({{"m", pt.m},
                        {"moment", pt.moment},
                        {"std_error", pt.std_error},
                        {"censored_fraction", pt.censored_fraction}});
    }
    result.push_back({{"r", r},
                      {"slope", fit.slope},
                      {"slope_se", fit.slope_se},
                      {"bound", fit.bound},
                      {"within_bound", fit.slope <= fit.bound + c.tolerance},
                      {"points", std::move(points)}});
  }
  write_json(out, c, std::move(result));
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, std::optional<std::string> command) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config_json(doc, std::move(command));
}

ExperimentConfig parse_config_json(const json& doc, std::optional<std::string> command) {
  if (!doc.is_object()) throw ConfigError("<document>", "must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kKnownFields.contains(key)) throw ConfigError(key, "unknown field");
  }
  ExperimentConfig c;

  if (auto it = doc.find("command"); it != doc.end()) {
    if (!it->is_string()) throw ConfigError("command", "must be a string");
    c.command = it->get<std::string>();
    if (command && *command != c.command) {
      throw ConfigError("command", "'" + c.command + "' does not match subcommand '" + *command + "'");
    }
  } else if (command) {
    c.command = *command;
  } else {
    throw ConfigError("command", "missing required field");
  }
  if (!is_command(c.command)) throw ConfigError("command", "unknown command '" + c.command + "'");

  const auto seed = doc.find("seed");
  if (seed == doc.end()) throw ConfigError("seed", "missing required field");
  if (!seed->is_number_unsigned()) throw ConfigError("seed", "must be a non-negative 64-bit integer");
  c.seed = seed->get<std::uint64_t>();

  if (auto it = doc.find("model"); it != doc.end()) {
    if (!it->is_string()) throw ConfigError("model", "must be a string");
    const auto m = it->get<std::string>();
    if (m == "bf") {
      c.model = Model::BF;
    } else if (m == "db") {
      c.model = Model::DB;
    } else {
      throw ConfigError("model", "must be \"bf\" or \"db\"");
    }
  }
  if (auto it = doc.find("dist"); it != doc.end()) c.dist = distribution_from_json(*it, "dist");

  // Defaults that depend on the command.
  if (c.command == "clt") c.replicas = 10'000;
  if (c.command == "couple-audit") c.horizon = 1000;
  if (c.command == "growth") c.horizon = 10'000'000;

  if (auto it = doc.find("replicas"); it != doc.end()) c.replicas = static_cast<std::size_t>(integer(*it, "replicas", 1));
  if (auto it = doc.find("horizon"); it != doc.end()) c.horizon = integer(*it, "horizon", 1);
  if (auto it = doc.find("t"); it != doc.end()) c.t = positive_number(*it, "t");
  if (auto it = doc.find("r_grid"); it != doc.end()) {
    c.r_grid = list<double>(*it, "r_grid", [](const json& v, const std::string& path) {
      const double r = positive_number(v, path);
      if (!(r < 1.0)) throw ConfigError(path, "must lie in (0, 1)");
      return r;
    });
  }
  if (auto it = doc.find("m_grid"); it != doc.end()) {
    c.m_grid = list<BitIndex>(*it, "m_grid", [](const json& v, const std::string& path) { return integer(v, path, 0); });
  }
  if (auto it = doc.find("p_grid"); it != doc.end()) {
    c.p_grid = list<double>(*it, "p_grid", [](const json& v, const std::string& path) {
      const double p = positive_number(v, path);
      if (!(p < 0.5)) throw ConfigError(path, "must lie in (0, 0.5)");
      return p;
    });
  }
  if (auto it = doc.find("output"); it != doc.end()) {
    if (!it->is_string() || it->get<std::string>().empty()) throw ConfigError("output", "must be a non-empty string");
    c.output = it->get<std::string>();
  }
  if (auto it = doc.find("tolerance"); it != doc.end()) c.tolerance = positive_number(*it, "tolerance");
  if (auto it = doc.find("method"); it != doc.end()) {
    if (!it->is_string()) throw ConfigError("method", "must be a string");
    const auto m = it->get<std::string>();
    if (m == "per_bit") {
      c.method = SnapshotMethod::PerBit;
    } else if (m == "poisson_embed") {
      c.method = SnapshotMethod::PoissonEmbed;
    } else {
      throw ConfigError("method", "must be \"per_bit\" or \"poisson_embed\"");
    }
  }
  if (auto it = doc.find("initial_m"); it != doc.end()) c.initial_m = integer(*it, "initial_m", 0);
  if (auto it = doc.find("project_m"); it != doc.end()) c.project_m = integer(*it, "project_m", 0);
  if (c.project_m > 0 && c.model != Model::BF) throw ConfigError("project_m", "projected returns need model \"bf\"");
  if (auto it = doc.find("t_max"); it != doc.end()) c.t_max = positive_number(*it, "t_max");
  if (auto it = doc.find("k_fraction"); it != doc.end()) {
    c.k_fraction = positive_number(*it, "k_fraction");
    if (c.k_fraction > 0.2) throw ConfigError("k_fraction", "must lie in (0, 0.2]");
  }

  auto& r = c.resolved;
  r["command"] = c.command;
  r["model"] = std::string(to_string(c.model));
  r["dist"] = c.dist ? ordered_json(distribution_to_json(*c.dist)) : ordered_json(nullptr);
  r["seed"] = c.seed;
  r["replicas"] = c.replicas;
  r["horizon"] = c.horizon;
  r["t"] = c.t ? ordered_json(*c.t) : ordered_json(nullptr);
  r["r_grid"] = c.r_grid;
  r["m_grid"] = c.m_grid;
  r["p_grid"] = c.p_grid;
  r["output"] = c.output ? ordered_json(*c.output) : ordered_json(nullptr);
  r["tolerance"] = c.tolerance;
  r["method"] = c.method == SnapshotMethod::PerBit ? "per_bit" : "poisson_embed";
  r["initial_m"] = c.initial_m;
  r["project_m"] = c.project_m;
  r["t_max"] = c.t_max;
  r["k_fraction"] = c.k_fraction;
  return c;
}

void run_command(const ExperimentConfig& c, std::ostream& out, unsigned threads) {
  const auto& cmd = c.command;
  if (cmd == "simulate") return cmd_simulate(c, out, threads);
  if (cmd == "snapshot") return cmd_snapshot(c, out, threads);
  if (cmd == "analyze") return cmd_analyze(c, out);
  if (cmd == "classify") return cmd_classify(c, out);
  if (cmd == "moments") return cmd_moments(c, out);
  if (cmd == "clt") return cmd_clt(c, out, threads);
  if (cmd == "couple-audit") return cmd_couple_audit(c, out, threads);
  if (cmd == "returns") return cmd_returns(c, out, threads);
  if (cmd == "growth") return cmd_growth(c, out, threads);
  throw ConfigError("command", "unknown command '" + cmd + "'");
}

int run_main(const std::string& command, const std::string& config_path,
             const std::optional<std::string>& output_override, unsigned threads, std::ostream& out,
             std::ostream& err) {
  std::ifstream in(config_path);
  if (!in) {
    err << "bitflip: cannot read config file '" << config_path << "'\n";
    return kExitRuntime;
  }
  std::stringstream text;
  text << in.rdbuf();

  ExperimentConfig config;
  try {
    config = parse_config(text.str(), command == "run" ? std::nullopt : std::optional<std::string>(command));
  } catch (const ConfigError& e) {
    err << "bitflip: config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const auto target = output_override ? output_override : config.output;
  try {
    // Write to a buffer first so a failed run leaves no partial file.
    std::ostringstream buffer;
    run_command(config, buffer, threads);
    if (!target) {
      out << buffer.str();
      return kExitOk;
    }
    std::ofstream file(*target, std::ios::binary);
    if (!file) {
      err << "bitflip: cannot open output file '" << *target << "'\n";
      return kExitRuntime;
    }
    file << buffer.str();
    if (!file.flush()) {
      err << "bitflip: failed writing '" << *target << "'\n";
      return kExitRuntime;
    }
  } catch (const ConfigError& e) {
    err << "bitflip: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "bitflip: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace bitflip::cli
