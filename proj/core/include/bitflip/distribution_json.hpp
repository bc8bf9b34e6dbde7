#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "bitflip/distributions.hpp"

namespace bitflip {

/// A configuration value failed validation; path() names the offending field
/// in dotted form (e.g. "dist.p").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Parses {"family":"geometric","p":0.3} | {"family":"stretched_exp","alpha":1,"gamma":0.4}
/// | {"family":"kappa"} | {"family":"table","pmf":[...]}. Unknown keys are
/// rejected. Errors carry `path` as prefix of the field path.
BitDistribution distribution_from_json(const nlohmann::json& spec, const std::string& path = "dist");

nlohmann::json distribution_to_json(const BitDistribution& dist);

}  // namespace bitflip
