// Batch front end: extract, fit, cv, simulate, validate, summarize.
//
// Exit codes: 0 success, 1 runtime or sampler failure, 2 configuration or
// usage error, 3 invalid input data, 4 outputs written but some study cells
// failed.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace hierslab;
using namespace hierslab::cli;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;
constexpr int kExitCellFailure = 4;

void note(const std::string& msg) { std::cerr << msg << "\n"; }

GroupedDataset load_input(const RunConfig& c, const fs::path& out) {
  if (c.data.empty()) throw ConfigError("'data' (input CSV) is required");
  auto loaded = load_dataset(c.data.string());
  if (loaded.dropped_rows) note("warning: dropped " + std::to_string(loaded.dropped_rows) + " rows with missing or non-positive time/event");
  if (c.standardize == "none") return std::move(loaded.dataset);
  auto [ds, rec] = standardize(loaded.dataset, parse_scope(c.standardize));
  rec.save((out / "standardization.txt").string());
  return std::move(ds);
}

void write_summaries(const fs::path& out, const PosteriorSummary& s, const ModelLayout& lay) {
  write_summary_csv((out / "summary.csv").string(), s);
  write_selected_csv((out / "selected.csv").string(), s);
  write_inclusion_matrix_csv((out / "inclusion_matrix.csv").string(), s, lay);
}

int cmd_fit(const RunConfig& c) {
  if (c.chains < 1) throw ConfigError("chains must be at least 1");
  const auto ds = load_input(c, c.out);
  std::vector<PosteriorSamples> chains(static_cast<std::size_t>(c.chains));
  std::mutex log_mutex;
  parallel_for(chains.size(), c.threads, [&](std::size_t k) {
    RunOptions opts;
    opts.progress = [&, k](long t) {
      std::lock_guard lock(log_mutex);
      note("fit chain " + std::to_string(k + 1) + ": iteration " + std::to_string(t) + "/" +
           std::to_string(c.schedule.total));
    };
    const auto seed = c.chains == 1 ? *c.seed : derive_seed(*c.seed, {k});
    chains[k] = gibbs_run(ds, c.variant, c.prior, c.schedule, seed, opts);
  });
  if (chains.size() == 1) {
    save_posterior(c.out / "posterior", chains[0]);
    write_summaries(c.out, summarize(chains[0], c.level), chains[0].layout);
  } else {
    const auto [each, pooled] = summarize_chains(chains, c.level);
    for (std::size_t k = 0; k < chains.size(); ++k) {
      save_posterior(c.out / ("posterior_" + std::to_string(k + 1)), chains[k]);
      write_summary_csv((c.out / ("summary_chain_" + std::to_string(k + 1) + ".csv")).string(), each[k]);
    }
    write_summaries(c.out, pooled, chains[0].layout);
  }
  note("fit: " + std::to_string(chains[0].draws.size()) + " draws per chain written to " + c.out.string());
  return 0;
}

int cmd_summarize(const RunConfig& c) {
  if (c.posteriors.empty()) throw ConfigError("summarize needs at least one posterior directory");
  std::vector<PosteriorSamples> chains;
  for (const auto& p : c.posteriors) chains.push_back(load_posterior(p));
  if (chains.size() == 1) {
    write_summaries(c.out, summarize(chains[0], c.level), chains[0].layout);
  } else {
    const auto [each, pooled] = summarize_chains(chains, c.level);
    for (std::size_t k = 0; k < each.size(); ++k)
      write_summary_csv((c.out / ("summary_chain_" + std::to_string(k + 1) + ".csv")).string(), each[k]);
    write_summaries(c.out, pooled, chains[0].layout);
  }
  return 0;
}

int cmd_cv(const RunConfig& c) {
  const auto ds = load_input(c, c.out);
  const auto folds = make_folds(ds, c.folds, *c.seed);
  csv::Table assignment;
  assignment.header = {"subject", "group", "fold"};
  std::size_t i = 0;
  for (const auto& g : ds.groups)
    for (std::size_t j = 0; j < g.size(); ++j, ++i)
      assignment.rows.push_back({g.subject_ids.empty() ? g.group_id + ":" + std::to_string(j + 1) : g.subject_ids[j],
                                 g.group_id, std::to_string(folds.assignment[i] + 1)});
  csv::write_file((c.out / "folds.csv").string(), assignment);

  note("cv: " + std::to_string(c.variants.size() * static_cast<std::size_t>(c.folds)) + " chains");
  const auto res = cross_validate(ds, c.variants, folds, c.prior, c.schedule, *c.seed, c.threads);
  csv::Table t;
  t.header = {"variant", "fold", "log_ppl"};
  for (std::size_t v = 0; v < res.variants.size(); ++v)
    for (int k = 0; k < res.fold_count; ++k)
      t.rows.push_back({to_string(res.variants[v]), std::to_string(k + 1),
                        csv::format(res.log_ppl[v][static_cast<std::size_t>(k)], 10)});
  for (std::size_t v = 0; v < res.variants.size(); ++v)
    t.rows.push_back({to_string(res.variants[v]), "mean", csv::format(res.mean(v), 10)});
  csv::write_file((c.out / "cv.csv").string(), t);
  return 0;
}

int cmd_extract(const RunConfig& c) {
  if (c.manifest.empty()) throw ConfigError("'manifest' is required");
  if (c.data.empty()) throw ConfigError("'data' (clinical CSV) is required");
  const auto manifest = load_manifest(c.manifest.string());
  auto loaded = load_dataset(c.data.string());
  if (manifest.empty()) note("warning: manifest lists no modules; design carries only the input covariates");
  else if (!(c.total_variance > 0.0)) throw ConfigError("'total_variance' must be a positive number");

  std::vector<ComponentScores> candidates;
  for (const auto& e : manifest) {
    auto m = load_module_csv(e.path, e.module_id);
    m.groups = e.groups;
    auto comps = svd_scores(m, c.max_components, c.total_variance);
    candidates.insert(candidates.end(), comps.begin(), comps.end());
  }
  const std::size_t candidate_count = candidates.size();
  const auto selected = manifest.empty() ? std::vector<ComponentScores>{}
                                         : filter_components(std::move(candidates), c.total_variance, c.threshold);
  auto assembled = assemble_design(selected, loaded.dataset);
  if (assembled.unmatched_subjects)
    note("warning: " + std::to_string(assembled.unmatched_subjects) + " scored subjects are not in the dataset");

  GroupedDataset design = std::move(assembled.dataset);
  if (c.standardize != "none" && design.covariate_count() > 0) {
    auto [ds, rec] = standardize(design, parse_scope(c.standardize));
    rec.save((c.out / "standardization.txt").string());
    design = std::move(ds);
  }
  write_component_scores((c.out / "component_scores.csv").string(), selected, loaded.dataset);
  write_dataset((c.out / "design.csv").string(), design);

  json prov;
  prov["threshold"] = c.threshold;
  prov["total_variance"] = c.total_variance;
  prov["modules"] = manifest.size();
  prov["candidate_components"] = candidate_count;
  json names = json::array();
  for (const auto& s : selected) names.push_back(s.name());
  prov["retained_components"] = names;
  prov["covariates"] = design.covariate_registry;
  prov["groups"] = design.groups.size();
  prov["subjects"] = design.total_subjects();
  prov["dropped_rows"] = loaded.dropped_rows;
  prov["unmatched_subjects"] = assembled.unmatched_subjects;
  write_json_file(c.out / "extract_provenance.json", prov);
  return 0;
}

int cmd_simulate(const RunConfig& c) {
  auto cfg = c.study;
  cfg.seed = *c.seed;
  const auto res = run_study(cfg, [](std::size_t done, std::size_t total) {
    note("simulate: " + std::to_string(done) + "/" + std::to_string(total) + " fits");
  });
  write_study(c.out, res);
  if (res.censor_warnings) note("warning: " + std::to_string(res.censor_warnings) + " datasets missed the censoring band");
  if (res.failures()) {
    note("error: " + std::to_string(res.failures()) + " study cells failed; see significance_report.txt");
    return kExitCellFailure;
  }
  return 0;
}

int cmd_validate(const RunConfig& c) {
  auto cfg = c.validation;
  cfg.seed = *c.seed;
  const auto res = validation_study(cfg, [](std::size_t done, std::size_t total) {
    if (done % 10 == 0 || done == total)
      note("validate: " + std::to_string(done) + "/" + std::to_string(total) + " outer iterations");
  });
  write_validation(c.out, res);
  if (res.failures) {
    note("error: " + std::to_string(res.failures) + " outer iterations failed");
    return kExitCellFailure;
  }
  return 0;
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::optional<long> total, burnin, thin;
  std::optional<int> threads;
  std::string out;
  std::vector<std::string> positional;
};

RunConfig build_config(const std::string& command, const Flags& f) {
  json j = json::object();
  fs::path base = fs::current_path();
  if (!f.config.empty()) {
    j = read_json_file(f.config);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    base = fs::absolute(f.config).parent_path();
  }
  if (j.contains("command") && j["command"] != command)
    throw ConfigError("config is for '" + j["command"].get<std::string>() + "', not '" + command + "'");
  j["command"] = command;
  j.erase("out");
  if (f.seed) j["seed"] = *f.seed;
  if (!f.variant.empty()) j["variant"] = f.variant;
  if (f.threads) j["threads"] = *f.threads;
  if (f.total || f.burnin || f.thin) {
    json& s = j["schedule"];
    if (s.is_null()) s = json::object();
    if (f.total) s["total"] = *f.total;
    if (f.burnin) s["burn_in"] = *f.burnin;
    if (f.thin) s["thin"] = *f.thin;
  }
  if (command == "summarize" && !f.positional.empty()) {
    json ps = json::array();
    for (const auto& p : f.positional) ps.push_back(fs::absolute(p).string());
    j["posteriors"] = ps;
  }
  if (command == "extract" && !j.contains("standardize")) j["standardize"] = "pooled";

  auto cfg = config_from_json(j, base);
  if (!cfg.seed && command != "summarize") throw ConfigError("a seed is required (--seed or \"seed\" in the config)");
  if (f.out.empty()) throw ConfigError("an output directory is required (--out)");
  cfg.out = fs::weakly_canonical(fs::absolute(f.out));
  if (command == "fit" || command == "cv") cfg.schedule.validate();
  if (command == "simulate") cfg.study.validate();
  if (command == "validate") cfg.validation.validate();
  return cfg;
}

int run(const std::string& command, const Flags& f) {
  const auto cfg = build_config(command, f);
  fs::create_directories(cfg.out);
  write_json_file(cfg.out / "config.json", config_to_json(cfg));
  if (command == "extract") return cmd_extract(cfg);
  if (command == "fit") return cmd_fit(cfg);
  if (command == "cv") return cmd_cv(cfg);
  if (command == "simulate") return cmd_simulate(cfg);
  if (command == "validate") return cmd_validate(cfg);
  return cmd_summarize(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical spike-and-slab survival regression on grouped data"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"extract", "SVD component scores from low-rank modules, filtered and assembled into a design"},
      {"fit", "Run the Gibbs sampler and write posterior draws and summaries"},
      {"cv", "K-fold cross-validated log posterior predictive likelihood across model variants"},
      {"simulate", "Replicated model-comparison simulation study"},
      {"validate", "Credible-interval coverage and selection-accuracy validation"},
      {"summarize", "Summaries from saved posterior directories"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Master seed");
    sub->add_option("--variant", flags.variant, "Model variant");
    sub->add_option("--total", flags.total, "Total iterations");
    sub->add_option("--burnin", flags.burnin, "Burn-in iterations");
    sub->add_option("--thin", flags.thin, "Thinning interval");
    sub->add_option("--threads", flags.threads, "Worker threads (default: $HIERSLAB_THREADS or all cores)");
    sub->add_option("--out", flags.out, "Output directory");
    if (name == "summarize") sub->add_option("posteriors", flags.positional, "Posterior directories");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, flags);
  } catch (const ConfigError& e) {
    note("config error: " + std::string(e.what()));
    return kExitConfig;
  } catch (const ParseError& e) {
    note("input error: " + std::string(e.what()) + " (row " + std::to_string(e.row()) + ")");
    return kExitInput;
  } catch (const ValidationError& e) {
    note("input error: " + std::string(e.what()));
    return kExitInput;
  } catch (const SamplerError& e) {
    note("sampler error at iteration " + std::to_string(e.iteration()) + ": " + e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    note("error: " + std::string(e.what()));
    return kExitRuntime;
  }
}
