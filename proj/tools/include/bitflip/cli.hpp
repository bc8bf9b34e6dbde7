#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bitflip/distribution_json.hpp"
#include "bitflip/distributions.hpp"
#include "bitflip/engine.hpp"

namespace bitflip::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Subcommands, in the order `bitflip --help` lists them.
inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "snapshot", "analyze",  "classify", "moments",
                                              "clt",      "couple-audit", "returns", "growth"};
  return names;
}

struct ExperimentConfig {
  std::string command;
  Model model = Model::BF;
  std::optional<BitDistribution> dist;
  std::uint64_t seed = 0;
  std::size_t replicas = 1000;
  std::int64_t horizon = 1'000'000;
  std::optional<double> t;
  std::vector<double> r_grid{0.1, 0.2, 0.3, 0.4};
  std::vector<BitIndex> m_grid{2, 3, 4, 5, 6, 7, 8};
  std::vector<double> p_grid{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45};
  std::optional<std::string> output;
  double tolerance = 1e-6;
  SnapshotMethod method = SnapshotMethod::PerBit;
  BitIndex initial_m = 0;
  BitIndex project_m = 0;
  double t_max = 1e8;
  double k_fraction = 0.1;

  /// Every field with defaults filled in, in a fixed key order; embedded in
  /// each output header.
  nlohmann::ordered_json resolved;
};

/// Strict parse: unknown fields, wrong types and out-of-range values raise
/// ConfigError naming the field path. `seed` is always required. If
/// `command` is given both here and in the document they must agree.
ExperimentConfig parse_config(std::string_view text, std::optional<std::string> command = std::nullopt);
ExperimentConfig parse_config_json(const nlohmann::json& doc, std::optional<std::string> command = std::nullopt);

/// Runs the configured command and writes its output to `out`. Throws on
/// runtime failure.
void run_command(const ExperimentConfig& config, std::ostream& out, unsigned threads = 0);

/// Reads the config file, runs the command and writes to the output path
/// (the override, else config.output, else `out`). Returns an exit code and
/// reports errors on `err`.
int run_main(const std::string& command, const std::string& config_path,
             const std::optional<std::string>& output_override, unsigned threads, std::ostream& out,
             std::ostream& err);

}  // namespace bitflip::cli
