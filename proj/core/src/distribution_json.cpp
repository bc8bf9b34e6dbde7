#include "bitflip/distribution_json.hpp"

#include <set>

namespace bitflip {

namespace {

using nlohmann::json;

void reject_unknown(const json& spec, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : spec.items()) {
    if (!allowed.contains(key)) throw ConfigError(path + "." + key, "unknown field");
  }
}

double number_field(const json& spec, const std::string& path, const char* key) {
  const auto it = spec.find(key);
  if (it == spec.end()) throw ConfigError(path + "." + key, "missing required field");
  if (!it->is_number()) throw ConfigError(path + "." + key, "must be a number");
  return it->get<double>();
}

}  // namespace

BitDistribution distribution_from_json(const json& spec, const std::string& path) {
  if (!spec.is_object()) throw ConfigError(path, "must be an object");
  const auto fam = spec.find("family");
  if (fam == spec.end()) throw ConfigError(path + ".family", "missing required field");
  if (!fam->is_string()) throw ConfigError(path + ".family", "must be a string");
  const auto family = fam->get<std::string>();

  if (family == "geometric") {
    reject_unknown(spec, path, {"family", "p"});
    const double p = number_field(spec, path, "p");
    if (!(p > 0.0 && p < 1.0)) throw ConfigError(path + ".p", "must lie in (0,1)");
    return BitDistribution::geometric(p);
  }
  if (family == "stretched_exp") {
    reject_unknown(spec, path, {"family", "alpha", "gamma"});
    const double alpha = number_field(spec, path, "alpha");
    const double gamma = number_field(spec, path, "gamma");
    if (!(alpha > 0.0)) throw ConfigError(path + ".alpha", "must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError(path + ".gamma", "must lie in (0,1)");
    return BitDistribution::stretched_exp(alpha, gamma);
  }
  if (family == "kappa") {
    reject_unknown(spec, path, {"family"});
    return BitDistribution::kappa();
  }
  if (family == "table") {
    reject_unknown(spec, path, {"family", "pmf"});
    const auto it = spec.find("pmf");
    if (it == spec.end()) throw ConfigError(path + ".pmf", "missing required field");
    if (!it->is_array() || it->empty()) throw ConfigError(path + ".pmf", "must be a non-empty array");
    std::vector<double> weights;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& v = (*it)[i];
      const auto where = path + ".pmf[" + std::to_string(i) + "]";
      if (!v.is_number()) throw ConfigError(where, "must be a number");
      if (v.get<double>() < 0.0) throw ConfigError(where, "must be non-negative");
      weights.push_back(v.get<double>());
    }
    try {
      return BitDistribution::table(std::move(weights));
    } catch (const std::domain_error& e) {
      throw ConfigError(path + ".pmf", e.what());
    }
  }
  throw ConfigError(path + ".family", "unknown family '" + family + "'");
}

nlohmann::json distribution_to_json(const BitDistribution& dist) {
  return std::visit(
      [](const auto& f) -> json {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Geometric>) {
          return {{"family", "geometric"}, {"p", f.p}};
        } else if constexpr (std::is_same_v<T, StretchedExp>) {
          return {{"family", "stretched_exp"}, {"alpha", f.alpha}, {"gamma", f.gamma}};
        } else if constexpr (std::is_same_v<T, KappaCounterexample>) {
          return {{"family", "kappa"}};
        } else {
          return {{"family", "table"}, {"pmf", f.pmf}};
        }
      },
      dist.family());
}

}  // namespace bitflip
