#pragma once

// JSON run configuration for the command-line tool: parsing with defaults,
// flag overrides, and the canonical echo written next to every output.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierslab/hierslab.hpp"

namespace hierslab::cli {

using nlohmann::json;

inline const std::vector<std::string> kCommands{"extract", "fit", "cv", "simulate", "validate", "summarize"};

struct RunConfig {
  std::string command;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::filesystem::path out;

  // fit / cv
  std::filesystem::path data;
  ModelVariant variant = ModelVariant::hierarchical;
  std::vector<ModelVariant> variants{kAllVariants.begin(), kAllVariants.end()};
  Schedule schedule{};
  PriorConfig prior{};
  int chains = 1;
  int folds = 5;
  double level = 0.95;
  std::string standardize = "none";  ///< none | pooled | per_group

  // extract
  std::filesystem::path manifest;
  double total_variance = 0.0;
  double threshold = 0.01;
  int max_components = 0;

  // summarize
  std::vector<std::filesystem::path> posteriors;

  // simulate / validate
  StudyConfig study{};
  ValidationConfig validation{};
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base / path;
  return std::filesystem::weakly_canonical(path);
}

inline Schedule schedule_from_json(const json& j, Schedule s) {
  for (const auto& [k, v] : j.items()) {
    if (k == "total") s.total = v.get<long>();
    else if (k == "burn_in") s.burn_in = v.get<long>();
    else if (k == "thin") s.thin = v.get<long>();
    else throw ConfigError("unknown schedule field '" + k + "'");
  }
  return s;
}

inline json schedule_to_json(const Schedule& s) { return {{"total", s.total}, {"burn_in", s.burn_in}, {"thin", s.thin}}; }

inline std::vector<ModelVariant> variants_from_json(const json& j) {
  std::vector<ModelVariant> out;
  for (const auto& v : j) out.push_back(parse_variant(v.get<std::string>()));
  if (out.empty()) throw ConfigError("variant list is empty");
  return out;
}

inline json variants_to_json(const std::vector<ModelVariant>& vs) {
  json j = json::array();
  for (auto v : vs) j.push_back(to_string(v));
  return j;
}

/// {"template": "desk", "groups": 10, "size": 150} | {"template": "validation"} |
/// {"covariates": [...], "groups": [{"id", "size", "covariates": [...]}], "min_size", "max_size"}
inline StructureTemplate structure_from_json(const json& j) {
  if (j.contains("template")) {
    const auto name = j.at("template").get<std::string>();
    if (name == "desk") return StructureTemplate::desk(j.value("groups", 10), j.value("size", 150));
    if (name == "validation") {
      auto t = StructureTemplate::validation();
      t.min_size = j.value("min_size", t.min_size);
      t.max_size = j.value("max_size", t.max_size);
      return t;
    }
    throw ConfigError("unknown structure template '" + name + "'");
  }
  StructureTemplate t;
  t.covariate_ids = j.at("covariates").get<std::vector<std::string>>();
  for (const auto& g : j.at("groups")) {
    StructureTemplate::GroupSpec s;
    s.id = g.at("id").get<std::string>();
    s.size = g.value("size", 0);
    for (const auto& c : g.at("covariates")) {
      const auto name = c.get<std::string>();
      const auto it = std::find(t.covariate_ids.begin(), t.covariate_ids.end(), name);
      if (it == t.covariate_ids.end()) throw ConfigError("group '" + s.id + "' lists unknown covariate '" + name + "'");
      s.covariates.push_back(static_cast<int>(it - t.covariate_ids.begin()));
    }
    t.groups.push_back(std::move(s));
  }
  t.min_size = j.value("min_size", 0);
  t.max_size = j.value("max_size", 0);
  t.validate();
  return t;
}

/// Always written in explicit form so the echo does not depend on template names.
inline json structure_to_json(const StructureTemplate& t) {
  json groups = json::array();
  for (const auto& g : t.groups) {
    json covs = json::array();
    for (int c : g.covariates) covs.push_back(t.covariate_ids[static_cast<std::size_t>(c)]);
    groups.push_back({{"id", g.id}, {"size", g.size}, {"covariates", covs}});
  }
  return {{"covariates", t.covariate_ids}, {"groups", groups}, {"min_size", t.min_size}, {"max_size", t.max_size}};
}

}  // namespace detail

/// Reads `j` (already merged with flag overrides) into a RunConfig; relative
/// paths resolve against `base`.
inline RunConfig config_from_json(const json& j, const std::filesystem::path& base) {
  RunConfig c;
  c.command = j.at("command").get<std::string>();
  if (std::find(kCommands.begin(), kCommands.end(), c.command) == kCommands.end())
    throw ConfigError("unknown command '" + c.command + "'");
  std::optional<StructureTemplate> structure;
  std::vector<std::string> conditions;
  std::optional<double> censor_fraction;
  std::optional<PriorConfig> generating;
  for (const auto& [k, v] : j.items()) {
    if (k == "command") continue;
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else if (k == "threads") c.threads = v.get<int>();
    else if (k == "out") c.out = detail::resolve(base, v.get<std::string>());
    else if (k == "data") c.data = detail::resolve(base, v.get<std::string>());
    else if (k == "variant") c.variant = parse_variant(v.get<std::string>());
    else if (k == "variants") c.variants = detail::variants_from_json(v);
    else if (k == "schedule") c.schedule = detail::schedule_from_json(v, c.command == "validate" ? Schedule{2000, 1000, 1} : c.schedule);
    else if (k == "prior") c.prior = hierslab::detail::prior_from_json(v, c.command == "validate" ? PriorConfig::validation() : PriorConfig{});
    else if (k == "generating_prior") generating = hierslab::detail::prior_from_json(v, PriorConfig::validation());
    else if (k == "chains") c.chains = v.get<int>();
    else if (k == "folds") c.folds = v.get<int>();
    else if (k == "level") c.level = v.get<double>();
    else if (k == "standardize") c.standardize = v.get<std::string>();
    else if (k == "manifest") c.manifest = detail::resolve(base, v.get<std::string>());
    else if (k == "total_variance") c.total_variance = v.get<double>();
    else if (k == "threshold") c.threshold = v.get<double>();
    else if (k == "max_components") c.max_components = v.get<int>();
    else if (k == "posteriors") for (const auto& p : v) c.posteriors.push_back(detail::resolve(base, p.get<std::string>()));
    else if (k == "conditions") conditions = v.get<std::vector<std::string>>();
    else if (k == "structure") structure = detail::structure_from_json(v);
    else if (k == "replications") c.study.replications = v.get<int>();
    else if (k == "alpha") c.study.alpha = v.get<double>();
    else if (k == "outer") c.validation.outer = v.get<int>();
    else if (k == "censor_fraction") censor_fraction = v.get<double>();
    else throw ConfigError("unknown config field '" + k + "'");
  }

  if (c.command == "validate") {
    if (!j.contains("schedule")) c.schedule = {2000, 1000, 1};
    if (!j.contains("prior")) c.prior = PriorConfig::validation();
  }
  if (c.command == "simulate") {
    auto& s = c.study;
    const auto st = structure.value_or(StructureTemplate::desk());
    if (conditions.empty()) {
      s.conditions = standard_conditions(st);
    } else {
      s.conditions.clear();
      for (const auto& label : conditions) s.conditions.push_back(parse_condition(label, st));
    }
    if (censor_fraction)
      for (auto& cond : s.conditions) cond.censor_fraction = *censor_fraction;
    s.variants = c.variants;
    s.schedule = c.schedule;
    s.fit_prior = c.prior;
    if (generating) s.generating_prior = *generating;
    s.threads = c.threads;
  }
  if (c.command == "validate") {
    auto& v = c.validation;
    v.generating_prior = generating;
    v.prior = c.prior;
    v.schedule = c.schedule;
    v.level = c.level;
    v.threads = c.threads;
    if (structure) v.structure = *structure;
    if (censor_fraction) v.censor_fraction = *censor_fraction;
  }
  return c;
}

/// Effective configuration with every default filled in. Loading it back
/// with config_from_json reproduces the run (output location excepted).
inline json config_to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  if (c.seed) j["seed"] = *c.seed;
  j["threads"] = c.threads;
  if (c.command == "fit" || c.command == "cv") {
    j["data"] = c.data.string();
    j["schedule"] = detail::schedule_to_json(c.schedule);
    j["prior"] = hierslab::detail::prior_to_json(c.prior);
    j["standardize"] = c.standardize;
  }
  if (c.command == "fit") {
    j["variant"] = to_string(c.variant);
    j["chains"] = c.chains;
    j["level"] = c.level;
  }
  if (c.command == "cv") {
    j["variants"] = detail::variants_to_json(c.variants);
    j["folds"] = c.folds;
  }
  if (c.command == "extract") {
    j["data"] = c.data.string();
    j["manifest"] = c.manifest.string();
    j["total_variance"] = c.total_variance;
    j["threshold"] = c.threshold;
    j["max_components"] = c.max_components;
    j["standardize"] = c.standardize;
  }
  if (c.command == "summarize") {
    json ps = json::array();
    for (const auto& p : c.posteriors) ps.push_back(p.string());
    j["posteriors"] = ps;
    j["level"] = c.level;
  }
  if (c.command == "simulate") {
    const auto& s = c.study;
    json conds = json::array();
    for (const auto& cond : s.conditions) conds.push_back(cond.label());
    j["conditions"] = conds;
    j["structure"] = detail::structure_to_json(s.conditions.front().structure);
    j["censor_fraction"] = s.conditions.front().censor_fraction;
    j["variants"] = detail::variants_to_json(s.variants);
    j["replications"] = s.replications;
    j["schedule"] = detail::schedule_to_json(s.schedule);
    j["prior"] = hierslab::detail::prior_to_json(s.fit_prior);
    j["generating_prior"] = hierslab::detail::prior_to_json(s.generating_prior);
    j["alpha"] = s.alpha;
  }
  if (c.command == "validate") {
    const auto& v = c.validation;
    j["outer"] = v.outer;
    j["schedule"] = detail::schedule_to_json(v.schedule);
    j["prior"] = hierslab::detail::prior_to_json(v.prior);
    if (v.generating_prior) j["generating_prior"] = hierslab::detail::prior_to_json(*v.generating_prior);
    j["level"] = v.level;
    j["censor_fraction"] = v.censor_fraction;
    j["structure"] = detail::structure_to_json(v.structure);
  }
  return j;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << "\n";
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

}  // namespace hierslab::cli
