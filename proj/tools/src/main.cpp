#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bitflip/cli.hpp"
#include "bitflip/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Simulation and numerics for the Binary Flipping and Damaged Bits chains", "bitflip"};
  app.set_version_flag("--version", std::string(bitflip::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  unsigned threads = 0;

  auto add = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "JSON experiment config")->required();
    sub->add_option("-o,--output", output, "Output path (overrides the config's \"output\")");
    sub->add_option("--threads", threads, "Worker threads, 0 = all cores; never changes results");
  };
  add("simulate", "Return-time samples (CSV)");
  add("snapshot", "Active-bit counts N_t at time t (CSV)");
  add("analyze", "E N_t, Var N_t and the ground-state occupancy integral (JSON)");
  add("classify", "Recurrence verdicts for BF and DB (JSON)");
  add("moments", "Moment exponent bounds over a p grid (CSV)");
  add("clt", "Normal approximation check for N_t (JSON)");
  add("couple-audit", "Coupling domination and tau_DB <= tau_BF audits (JSON)");
  add("returns", "Return-time moments, censoring and tail index (JSON)");
  add("growth", "Growth of E[tau^r | M_0 = m] in m (JSON)");
  add("run", "Run the command named in the config's \"command\" field");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bitflip::cli::kExitConfig;
  }

  const auto* sub = app.get_subcommands().front();
  const std::optional<std::string> override_path = output.empty() ? std::nullopt : std::optional(output);
  return bitflip::cli::run_main(sub->get_name(), config_path, override_path, threads, std::cout, std::cerr);
}
