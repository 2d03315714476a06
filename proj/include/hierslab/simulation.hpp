#pragma once

// Data-generating conditions, the replicated model-comparison study with
// paired t-tests, and the coverage / selection-accuracy validation runs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "hierslab/chain_state.hpp"
#include "hierslab/csv.hpp"
#include "hierslab/data_model.hpp"
#include "hierslab/evaluation.hpp"
#include "hierslab/gibbs.hpp"
#include "hierslab/parallel.hpp"
#include "hierslab/rng.hpp"
#include "hierslab/summary.hpp"

namespace hierslab {

/// Which groups and covariates exist, and how many subjects each group has.
struct StructureTemplate {
  struct GroupSpec {
    std::string id;
    int size = 150;
    std::vector<int> covariates;  ///< indices into covariate_ids
  };
  std::vector<std::string> covariate_ids;
  std::vector<GroupSpec> groups;
  /// When max_size > 0 every dataset draws each group's size uniformly from
  /// {min_size, ..., max_size}, ignoring GroupSpec::size.
  int min_size = 0;
  int max_size = 0;

  void validate() const {
    if (groups.empty()) throw ConfigError("structure has no groups");
    if (max_size > 0 && (min_size < 2 || min_size > max_size)) throw ConfigError("bad group size range");
    std::vector<int> used(covariate_ids.size(), 0);
    for (const auto& g : groups) {
      if (max_size == 0 && g.size < 2) throw ConfigError("group '" + g.id + "' needs at least 2 subjects");
      for (int c : g.covariates) {
        if (c < 0 || static_cast<std::size_t>(c) >= covariate_ids.size())
          throw ConfigError("group '" + g.id + "' references an unknown covariate");
        ++used[static_cast<std::size_t>(c)];
      }
    }
    for (std::size_t c = 0; c < used.size(); ++c)
      if (!used[c]) throw ConfigError("covariate '" + covariate_ids[c] + "' is available in no group");
  }

  /// Desk-scale overlap: 12 covariates, of which 4 are in every group, 5 in
  /// overlapping subsets of groups and 3 in a single group each.
  static StructureTemplate desk(int group_count = 10, int size = 150) {
    if (group_count < 4) throw ConfigError("desk template needs at least 4 groups");
    StructureTemplate t;
    for (int c = 1; c <= 12; ++c) t.covariate_ids.push_back("X" + std::to_string(c));
    const int G = group_count;
    for (int g = 0; g < G; ++g) {
      GroupSpec s;
      char id[32];
      std::snprintf(id, sizeof id, "G%02d", g + 1);
      s.id = id;
      s.size = size;
      s.covariates = {0, 1, 2, 3};
      if (g < G / 2) s.covariates.push_back(4);                   // first half
      if (g >= G / 2) s.covariates.push_back(5);                  // second half
      if (g >= G / 4 && g < (3 * G) / 4) s.covariates.push_back(6);  // middle half
      if (g % 2 == 0) s.covariates.push_back(7);                  // alternate groups
      if (g % 3 != 2) s.covariates.push_back(8);                  // two of every three
      if (g == 0) s.covariates.push_back(9);
      if (g == G / 2) s.covariates.push_back(10);
      if (g == G - 1) s.covariates.push_back(11);
      t.groups.push_back(std::move(s));
    }
    return t;
  }

  /// The 12-cluster, 3-covariate layout of the validation runs; group sizes
  /// are drawn from 50..500 per dataset.
  static StructureTemplate validation() {
    StructureTemplate t;
    t.covariate_ids = {"X1", "X2", "X3"};
    const std::vector<std::vector<int>> sets = {{0, 2}, {0, 1, 2}, {1}, {0, 1}, {2},    {0, 2},
                                                {1},    {0},       {0, 1}, {0, 1, 2}, {0}, {1}};
    for (std::size_t g = 0; g < sets.size(); ++g) {
      char id[32];
      std::snprintf(id, sizeof id, "G%02zu", g + 1);
      t.groups.push_back({id, 0, sets[g]});
    }
    t.min_size = 50;
    t.max_size = 500;
    return t;
  }
};

enum class InclusionPattern {
  all_or_none,   ///< per covariate: in for every group with prob p, else out for all
  independent,   ///< per (group, covariate): in with prob p
  all_included,
  none_included,
  from_prior     ///< pi_l from its Beta prior, then gamma ~ Bernoulli(pi_l)
};

struct GenCondition {
  InclusionPattern kind = InclusionPattern::all_or_none;
  double p = 0.5;
  double censor_fraction = 0.5;
  StructureTemplate structure = StructureTemplate::desk();

  std::string label() const {
    auto with_p = [&](const char* name) { return std::string(name) + "(" + csv::format(p, 3) + ")"; };
    switch (kind) {
      case InclusionPattern::all_or_none: return with_p("all_or_none");
      case InclusionPattern::independent: return with_p("independent");
      case InclusionPattern::all_included: return "all_included";
      case InclusionPattern::none_included: return "none_included";
      case InclusionPattern::from_prior: return "from_prior";
    }
    return "?";
  }

  void validate() const {
    structure.validate();
    if ((kind == InclusionPattern::all_or_none || kind == InclusionPattern::independent) && !(p > 0.0 && p < 1.0))
      throw ConfigError("inclusion probability must lie in (0, 1)");
    if (!(censor_fraction >= 0.0 && censor_fraction < 1.0)) throw ConfigError("censor_fraction must lie in [0, 1)");
  }
};

/// "all_or_none(0.5)", "independent(0.1)", "all_included", "none_included", "from_prior".
inline GenCondition parse_condition(const std::string& label, StructureTemplate structure = StructureTemplate::desk()) {
  GenCondition c;
  c.structure = std::move(structure);
  auto param = [&](const std::string& prefix) -> std::optional<double> {
    if (label.rfind(prefix + "(", 0) != 0 || label.back() != ')') return std::nullopt;
    return csv::to_double(label.substr(prefix.size() + 1, label.size() - prefix.size() - 2));
  };
  if (auto p = param("all_or_none")) {
    c.kind = InclusionPattern::all_or_none;
    c.p = *p;
  } else if (auto q = param("independent")) {
    c.kind = InclusionPattern::independent;
    c.p = *q;
  } else if (label == "all_included") {
    c.kind = InclusionPattern::all_included;
  } else if (label == "none_included") {
    c.kind = InclusionPattern::none_included;
  } else if (label == "from_prior") {
    c.kind = InclusionPattern::from_prior;
  } else {
    throw ConfigError("unknown condition '" + label + "'");
  }
  c.validate();
  return c;
}

/// The six conditions of the model-comparison study.
inline std::vector<GenCondition> standard_conditions(const StructureTemplate& structure = StructureTemplate::desk()) {
  std::vector<GenCondition> out;
  for (const char* label : {"all_or_none(0.5)", "all_or_none(0.1)", "independent(0.5)", "independent(0.1)",
                            "all_included", "none_included"})
    out.push_back(parse_condition(label, structure));
  return out;
}

/// Generating parameters plus a training set and an independent test set
/// drawn with the same parameters.
struct SimulatedData {
  ModelLayout layout;  ///< covariates = the structure's covariate ids
  ChainState truth;    ///< latent_log_times left empty
  GroupedDataset train;
  GroupedDataset test;
  bool censor_warning = false;  ///< realized censoring missed the target band twice

  /// True gamma for every (group, covariate) pair.
  InclusionMap true_inclusion() const {
    InclusionMap out;
    for (std::size_t g = 0; g < layout.group_count(); ++g)
      for (std::size_t k = 0; k < layout.slots[g].size(); ++k)
        out[{layout.group_ids[g], layout.covariates[static_cast<std::size_t>(layout.slots[g][k])]}] = truth.gamma[g][k];
    return out;
  }
};

namespace detail {

/// Shift (in outcome sds) of the censor-time distribution so that a censor
/// draw from N(mu + shift*sigma, sigma^2) falls below an independent outcome
/// draw from N(mu, sigma^2) with probability `fraction`.
inline double censor_shift(double fraction) {
  if (fraction == 0.5) return 0.0;
  if (fraction <= 0.0) return std::numeric_limits<double>::infinity();
  static const boost::math::normal std_normal;
  return -std::numbers::sqrt2 * boost::math::quantile(std_normal, fraction);
}

inline std::size_t censored_count(const GroupedDataset& ds) {
  std::size_t n = 0;
  for (const auto& g : ds.groups)
    for (const auto& o : g.outcomes) n += !o.event;
  return n;
}

}  // namespace detail

/// Draws true parameters for `cond` (slab moments and sigma2 from `prior`,
/// indicators per the condition), then training and test data: standard
/// normal predictors, log-times from N(X beta, sigma2), right-censored by
/// censor times from the same outcome distribution shifted to hit the
/// requested fraction.
inline SimulatedData generate_truth(const GenCondition& cond, const PriorConfig& prior, Rng& rng) {
  cond.validate();
  const auto& st = cond.structure;
  const std::size_t L = st.covariate_ids.size();
  SimulatedData out;
  out.layout.covariates = st.covariate_ids;

  auto& truth = out.truth;
  truth.beta_tilde.resize(static_cast<Eigen::Index>(L) + 1);
  truth.lambda2.resize(static_cast<Eigen::Index>(L) + 1);
  truth.pi.resize(static_cast<Eigen::Index>(L));
  truth.beta_tilde(0) = rng.normal(0.0, std::sqrt(prior.tau2_intercept));
  truth.lambda2(0) = rng.inv_gamma(prior.lambda0_shape, prior.lambda0_rate);
  for (std::size_t l = 0; l < L; ++l) {
    const auto s = static_cast<Eigen::Index>(l) + 1;
    truth.beta_tilde(s) = rng.normal(0.0, std::sqrt(prior.tau2_coef));
    truth.lambda2(s) = rng.inv_gamma(prior.lambda_shape, prior.lambda_rate);
  }
  std::vector<std::uint8_t> all_or_none(L, 0);
  for (std::size_t l = 0; l < L; ++l) {
    double& pi = truth.pi(static_cast<Eigen::Index>(l));
    switch (cond.kind) {
      case InclusionPattern::all_or_none:
        pi = cond.p;
        all_or_none[l] = rng.bernoulli(cond.p);
        break;
      case InclusionPattern::independent: pi = cond.p; break;
      case InclusionPattern::all_included: pi = 1.0; break;
      case InclusionPattern::none_included: pi = 0.0; break;
      case InclusionPattern::from_prior: pi = rng.beta(prior.pi_alpha, prior.pi_beta); break;
    }
  }
  truth.sigma2 = rng.inv_gamma(prior.sigma2_shape, prior.sigma2_rate);

  std::vector<int> sizes;
  for (const auto& g : st.groups) sizes.push_back(st.max_size > 0 ? rng.uniform_int(st.min_size, st.max_size) : g.size);

  for (std::size_t g = 0; g < st.groups.size(); ++g) {
    const auto& spec = st.groups[g];
    std::vector<int> slots = spec.covariates;
    std::sort(slots.begin(), slots.end());
    Eigen::VectorXd beta(static_cast<Eigen::Index>(slots.size()) + 1);
    std::vector<std::uint8_t> gamma(slots.size());
    beta(0) = rng.normal(truth.beta_tilde(0), std::sqrt(truth.lambda2(0)));
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const auto l = static_cast<std::size_t>(slots[k]);
      switch (cond.kind) {
        case InclusionPattern::all_or_none: gamma[k] = all_or_none[l]; break;
        case InclusionPattern::independent: gamma[k] = rng.bernoulli(cond.p); break;
        case InclusionPattern::all_included: gamma[k] = 1; break;
        case InclusionPattern::none_included: gamma[k] = 0; break;
        case InclusionPattern::from_prior: gamma[k] = rng.bernoulli(truth.pi(static_cast<Eigen::Index>(l))); break;
      }
      const auto s = static_cast<Eigen::Index>(l) + 1;
      beta(static_cast<Eigen::Index>(k) + 1) = gamma[k] ? rng.normal(truth.beta_tilde(s), std::sqrt(truth.lambda2(s)))
                                                        : rng.normal(0.0, std::sqrt(prior.spike_variance));
    }
    truth.beta.push_back(std::move(beta));
    truth.gamma.push_back(std::move(gamma));
    truth.latent_log_times.emplace_back();
    out.layout.group_ids.push_back(spec.id);
    out.layout.slots.push_back(std::move(slots));
    out.layout.censored_rows.emplace_back();
  }

  const double sd = std::sqrt(truth.sigma2);
  const double shift = detail::censor_shift(cond.censor_fraction);

  // Latent outcomes are kept so a missed censoring band can be redrawn
  // without touching predictors or event times.
  struct Latent {
    std::vector<Eigen::VectorXd> log_times, means;
  };
  auto make_set = [&](GroupedDataset& ds, Latent& latent) {
    ds.covariate_registry = st.covariate_ids;
    for (std::size_t g = 0; g < st.groups.size(); ++g) {
      const auto n = static_cast<Eigen::Index>(sizes[g]);
      const auto& slots = out.layout.slots[g];
      Group grp;
      grp.group_id = st.groups[g].id;
      grp.design.resize(n, static_cast<Eigen::Index>(slots.size()));
      for (Eigen::Index c = 0; c < grp.design.cols(); ++c)
        for (Eigen::Index j = 0; j < n; ++j) grp.design(j, c) = rng.normal();
      for (int s : slots) grp.covariate_ids.push_back(st.covariate_ids[static_cast<std::size_t>(s)]);
      const auto& beta = truth.beta[g];
      Eigen::VectorXd mu = grp.design * beta.tail(beta.size() - 1);
      mu.array() += beta(0);
      Eigen::VectorXd y(n);
      for (Eigen::Index j = 0; j < n; ++j) y(j) = rng.normal(mu(j), sd);
      grp.outcomes.resize(static_cast<std::size_t>(n));
      for (Eigen::Index j = 0; j < n; ++j) {
        grp.outcomes[static_cast<std::size_t>(j)] = {y(j), true};
        grp.subject_ids.push_back(grp.group_id + ":" + std::to_string(j + 1));
      }
      latent.log_times.push_back(std::move(y));
      latent.means.push_back(std::move(mu));
      ds.groups.push_back(std::move(grp));
    }
  };
  auto censor = [&](GroupedDataset& ds, const Latent& latent) {
    if (cond.censor_fraction == 0.0) return;
    for (std::size_t g = 0; g < ds.groups.size(); ++g) {
      auto& grp = ds.groups[g];
      for (std::size_t j = 0; j < grp.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double y = latent.log_times[g](jj);
        const double c = rng.normal(latent.means[g](jj) + shift * sd, sd);
        grp.outcomes[j] = y > c ? SurvivalOutcome{c, false} : SurvivalOutcome{y, true};
      }
    }
  };
  auto off_target = [&](const GroupedDataset& ds) {
    const double realized = static_cast<double>(detail::censored_count(ds)) / static_cast<double>(ds.total_subjects());
    return std::abs(realized - cond.censor_fraction) > 0.15;
  };

  Latent train_latent, test_latent;
  make_set(out.train, train_latent);
  make_set(out.test, test_latent);
  censor(out.train, train_latent);
  censor(out.test, test_latent);
  if (cond.censor_fraction > 0.0) {
    if (off_target(out.train)) {
      censor(out.train, train_latent);
      out.censor_warning |= off_target(out.train);
    }
    if (off_target(out.test)) {
      censor(out.test, test_latent);
      out.censor_warning |= off_target(out.test);
    }
  }
  out.train.validate();
  out.test.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Paired t-test

struct TTestResult {
  double p_value = 1.0;
  bool significant = false;
};

/// Two-sided paired t-test on a - b. Zero-variance differences give p = 0
/// (nonzero mean) or p = 1 (zero mean).
inline TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b, double alpha = 0.01) {
  if (a.size() != b.size() || a.size() < 2) throw ConfigError("paired_t_test needs two equal-length samples of size >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double m = math::mean(d);
  const double var = math::variance(d);
  TTestResult out;
  if (!(var > 0.0)) {
    out.p_value = m == 0.0 ? 1.0 : 0.0;
  } else {
    const double n = static_cast<double>(d.size());
    const double t = m / std::sqrt(var / n);
    const boost::math::students_t dist(n - 1.0);
    out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  }
  out.significant = out.p_value < alpha;
  return out;
}

/// Pairwise p-values between variants and the set tied with the best mean.
struct Significance {
  std::vector<std::vector<double>> p_values;  ///< symmetric, unit diagonal
  std::vector<bool> best;
};

/// `values[v][r]`; NaN marks a failed replication and drops that pair.
inline Significance compare_variants(const std::vector<std::vector<double>>& values, bool lower_is_better,
                                     double alpha) {
  const std::size_t V = values.size();
  Significance s;
  s.p_values.assign(V, std::vector<double>(V, 1.0));
  s.best.assign(V, false);
  auto finite_mean = [](const std::vector<double>& xs) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double x : xs)
      if (std::isfinite(x)) sum += x, ++n;
    return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  };
  for (std::size_t a = 0; a < V; ++a) {
    for (std::size_t b = a + 1; b < V; ++b) {
      std::vector<double> xa, xb;
      for (std::size_t r = 0; r < values[a].size(); ++r)
        if (std::isfinite(values[a][r]) && std::isfinite(values[b][r])) xa.push_back(values[a][r]), xb.push_back(values[b][r]);
      const double p = xa.size() >= 2 ? paired_t_test(xa, xb, alpha).p_value : std::numeric_limits<double>::quiet_NaN();
      s.p_values[a][b] = s.p_values[b][a] = p;
    }
  }
  std::optional<std::size_t> best;
  for (std::size_t v = 0; v < V; ++v) {
    const double m = finite_mean(values[v]);
    if (std::isnan(m)) continue;
    if (!best || (lower_is_better ? m < finite_mean(values[*best]) : m > finite_mean(values[*best]))) best = v;
  }
  if (best) {
    for (std::size_t v = 0; v < V; ++v)
      s.best[v] = v == *best || !(s.p_values[v][*best] < alpha);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Model-comparison study

struct StudyConfig {
  std::vector<GenCondition> conditions = standard_conditions();
  std::vector<ModelVariant> variants{kAllVariants.begin(), kAllVariants.end()};
  int replications = 10;
  Schedule schedule{10000, 5000, 10};
  std::uint64_t seed = 1;
  PriorConfig fit_prior{};                                 ///< model fitted to every dataset
  PriorConfig generating_prior = PriorConfig::validation();  ///< source of the true parameters
  double alpha = 0.01;
  int threads = 0;

  void validate() const {
    if (conditions.empty()) throw ConfigError("study needs at least one condition");
    if (variants.empty()) throw ConfigError("study needs at least one variant");
    if (replications < 2) throw ConfigError("study needs at least 2 replications for paired t-tests");
    schedule.validate();
    fit_prior.validate();
    generating_prior.validate();
    for (const auto& c : conditions) c.validate();
  }
};

struct StudyResult {
  std::vector<std::string> conditions;
  std::vector<ModelVariant> variants;
  int replications = 0;
  std::vector<std::vector<std::vector<double>>> ssd;   ///< [condition][variant][rep], NaN = failed
  std::vector<std::vector<std::vector<double>>> lppl;  ///< same indexing
  std::vector<std::vector<std::vector<std::string>>> errors;
  std::vector<Significance> ssd_significance;   ///< per condition, lower is better
  std::vector<Significance> lppl_significance;  ///< per condition, higher is better
  int censor_warnings = 0;

  static double finite_mean(const std::vector<double>& xs) {
    double s = 0.0;
    std::size_t n = 0;
    for (double x : xs)
      if (std::isfinite(x)) s += x, ++n;
    return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  }
  double mean_ssd(std::size_t c, std::size_t v) const { return finite_mean(ssd[c][v]); }
  double mean_lppl(std::size_t c, std::size_t v) const { return finite_mean(lppl[c][v]); }

  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& c : errors)
      for (const auto& v : c)
        for (const auto& e : v) n += !e.empty();
    return n;
  }

  std::ptrdiff_t variant_index(ModelVariant v) const {
    const auto it = std::find(variants.begin(), variants.end(), v);
    return it == variants.end() ? -1 : it - variants.begin();
  }
};

using StudyProgress = std::function<void(std::size_t done, std::size_t total)>;

/// Every (condition, replication) dataset is generated once per variant from
/// the same derived seed, so all variants see identical data (paired design).
inline StudyResult run_study(const StudyConfig& cfg, const StudyProgress& progress = {}) {
  cfg.validate();
  const std::size_t C = cfg.conditions.size(), V = cfg.variants.size(), R = static_cast<std::size_t>(cfg.replications);
  StudyResult res;
  for (const auto& c : cfg.conditions) res.conditions.push_back(c.label());
  res.variants = cfg.variants;
  res.replications = cfg.replications;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  res.ssd.assign(C, std::vector<std::vector<double>>(V, std::vector<double>(R, nan)));
  res.lppl = res.ssd;
  res.errors.assign(C, std::vector<std::vector<std::string>>(V, std::vector<std::string>(R)));
  std::vector<std::uint8_t> warned(C * R, 0);

  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(C * R * V, cfg.threads, [&](std::size_t task) {
    const std::size_t c = task / (R * V), r = (task / V) % R, v = task % V;
    try {
      Rng data_rng(derive_seed(cfg.seed, {c, r}));
      const auto data = generate_truth(cfg.conditions[c], cfg.generating_prior, data_rng);
      if (v == 0) warned[c * R + r] = data.censor_warning;
      RunOptions opts;
      opts.keep_latent = false;
      const auto ps = gibbs_run(data.train, cfg.variants[v], cfg.fit_prior, cfg.schedule,
                                derive_seed(cfg.seed, {c, r, 1000 + static_cast<std::uint64_t>(cfg.variants[v])}), opts);
      const auto summary = summarize(ps);
      res.ssd[c][v][r] = mean_ssd(data.true_inclusion(), inclusion_estimates(summary, data.train));
      res.lppl[c][v][r] = log_ppl(data.test, ps).log_ppl;
    } catch (const std::exception& e) {
      res.ssd[c][v][r] = res.lppl[c][v][r] = nan;
      res.errors[c][v][r] = e.what();
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(++done, C * R * V);
    }
  });
  for (auto w : warned) res.censor_warnings += w;
  for (std::size_t c = 0; c < C; ++c) {
    res.ssd_significance.push_back(compare_variants(res.ssd[c], true, cfg.alpha));
    res.lppl_significance.push_back(compare_variants(res.lppl[c], false, cfg.alpha));
  }
  return res;
}

/// Writes ssd_table.csv and lppl_table.csv (conditions x variants means),
/// replications.csv (one row per cell), ssd_pvalues.csv / lppl_pvalues.csv
/// and significance_report.txt into `dir`.
inline void write_study(const std::filesystem::path& dir, const StudyResult& res) {
  std::filesystem::create_directories(dir);
  auto wide = [&](const std::string& file, bool ssd) {
    csv::Table t;
    t.header = {"condition"};
    for (auto v : res.variants) t.header.push_back(to_string(v));
    for (std::size_t c = 0; c < res.conditions.size(); ++c) {
      csv::Row row{res.conditions[c]};
      for (std::size_t v = 0; v < res.variants.size(); ++v)
        row.push_back(ssd ? csv::format(res.mean_ssd(c, v)) : csv::format(res.mean_lppl(c, v), 10));
      t.rows.push_back(std::move(row));
    }
    csv::write_file((dir / file).string(), t);
  };
  wide("ssd_table.csv", true);
  wide("lppl_table.csv", false);

  csv::Table reps;
  reps.header = {"condition", "variant", "replication", "mean_ssd", "log_ppl", "failed"};
  for (std::size_t c = 0; c < res.conditions.size(); ++c)
    for (std::size_t v = 0; v < res.variants.size(); ++v)
      for (int r = 0; r < res.replications; ++r) {
        const auto rr = static_cast<std::size_t>(r);
        reps.rows.push_back({res.conditions[c], to_string(res.variants[v]), std::to_string(r + 1),
                             csv::format(res.ssd[c][v][rr]), csv::format(res.lppl[c][v][rr], 10),
                             res.errors[c][v][rr].empty() ? "0" : "1"});
      }
  csv::write_file((dir / "replications.csv").string(), reps);

  auto pvals = [&](const std::string& file, const std::vector<Significance>& sig) {
    csv::Table t;
    t.header = {"condition", "variant_a", "variant_b", "p_value"};
    for (std::size_t c = 0; c < res.conditions.size(); ++c)
      for (std::size_t a = 0; a < res.variants.size(); ++a)
        for (std::size_t b = 0; b < res.variants.size(); ++b)
          t.rows.push_back({res.conditions[c], to_string(res.variants[a]), to_string(res.variants[b]),
                            csv::format(sig[c].p_values[a][b])});
    csv::write_file((dir / file).string(), t);
  };
  pvals("ssd_pvalues.csv", res.ssd_significance);
  pvals("lppl_pvalues.csv", res.lppl_significance);

  std::ofstream rep(dir / "significance_report.txt", std::ios::binary);
  rep << "replications: " << res.replications << "\nfailed cells: " << res.failures()
      << "\ncensoring warnings: " << res.censor_warnings << "\n";
  for (std::size_t c = 0; c < res.conditions.size(); ++c) {
    rep << "\n[" << res.conditions[c] << "]\n";
    for (int metric = 0; metric < 2; ++metric) {
      const auto& sig = metric == 0 ? res.ssd_significance[c] : res.lppl_significance[c];
      rep << (metric == 0 ? "  mean SSD (lower is better):" : "  log-PPL (higher is better):");
      for (std::size_t v = 0; v < res.variants.size(); ++v) {
        const double m = metric == 0 ? res.mean_ssd(c, v) : res.mean_lppl(c, v);
        rep << "\n    " << (sig.best[v] ? "* " : "  ") << to_string(res.variants[v]) << " "
            << csv::format(m, metric == 0 ? 6 : 10);
      }
      rep << "\n";
    }
  }
  rep << "\n* = best, or not significantly different from the best at the configured level\n";
  for (std::size_t c = 0; c < res.conditions.size(); ++c)
    for (std::size_t v = 0; v < res.variants.size(); ++v)
      for (int r = 0; r < res.replications; ++r)
        if (!res.errors[c][v][static_cast<std::size_t>(r)].empty())
          rep << "FAILED " << res.conditions[c] << " " << to_string(res.variants[v]) << " rep " << r + 1 << ": "
              << res.errors[c][v][static_cast<std::size_t>(r)] << "\n";
}

// ---------------------------------------------------------------------------
// Validation runs: credible-interval coverage and selection accuracy

struct ValidationConfig {
  int outer = 1000;
  Schedule schedule{2000, 1000, 1};
  std::uint64_t seed = 1;
  double level = 0.95;
  double censor_fraction = 0.5;
  PriorConfig prior = PriorConfig::validation();
  /// Source of the true parameters when it should differ from `prior`.
  std::optional<PriorConfig> generating_prior;
  StructureTemplate structure = StructureTemplate::validation();
  int threads = 0;

  void validate() const {
    if (outer < 1) throw ConfigError("validation needs at least one outer iteration");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("credible level must lie in (0, 1)");
    schedule.validate();
    prior.validate();
    structure.validate();
  }
};

struct Tally {
  int hits = 0;
  int trials = 0;  ///< 0 marks a blank cell
  double rate() const { return trials ? static_cast<double>(hits) / trials : std::numeric_limits<double>::quiet_NaN(); }
};

struct ValidationResult {
  int outer = 0;
  int failures = 0;
  std::vector<std::string> columns;        ///< "Intercept" then covariate ids
  std::vector<std::string> coverage_rows;  ///< beta_tilde, lambda2, pi, beta_<group>..., sigma2
  std::vector<std::vector<Tally>> coverage;
  std::vector<std::string> accuracy_rows;  ///< group ids
  std::vector<std::vector<Tally>> accuracy;  ///< [group][covariate]

  Tally overall_accuracy() const {
    Tally t;
    for (const auto& row : accuracy)
      for (const auto& c : row) t.hits += c.hits, t.trials += c.trials;
    return t;
  }
};

/// Repeats: draw truth from the prior, simulate censored data, fit the
/// hierarchical model, and tally whether each credible interval covers its
/// true value and whether thresholded inclusion (> 0.5) matches the true
/// indicator.
inline ValidationResult validation_study(const ValidationConfig& cfg, const StudyProgress& progress = {}) {
  cfg.validate();
  const auto& st = cfg.structure;
  const std::size_t L = st.covariate_ids.size(), G = st.groups.size();
  ValidationResult res;
  res.outer = cfg.outer;
  res.columns.push_back("Intercept");
  res.columns.insert(res.columns.end(), st.covariate_ids.begin(), st.covariate_ids.end());
  res.coverage_rows = {"beta_tilde", "lambda2", "pi"};
  for (const auto& g : st.groups) res.coverage_rows.push_back("beta_" + g.id);
  res.coverage_rows.push_back("sigma2");
  for (const auto& g : st.groups) res.accuracy_rows.push_back(g.id);

  // per outer iteration: coverage hits (row-major, -1 = blank) and accuracy hits
  const std::size_t R = res.coverage_rows.size(), Cc = L + 1;
  std::vector<std::vector<std::int8_t>> cov_hits(static_cast<std::size_t>(cfg.outer));
  std::vector<std::vector<std::int8_t>> acc_hits(static_cast<std::size_t>(cfg.outer));
  std::vector<std::uint8_t> failed(static_cast<std::size_t>(cfg.outer), 0);

  GenCondition cond;
  cond.kind = InclusionPattern::from_prior;
  cond.censor_fraction = cfg.censor_fraction;
  cond.structure = st;
  const PriorConfig gen_prior = cfg.generating_prior.value_or(cfg.prior);

  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(static_cast<std::size_t>(cfg.outer), cfg.threads, [&](std::size_t it) {
    std::vector<std::int8_t> cov(R * Cc, -1), acc(G * L, -1);
    try {
      Rng rng(derive_seed(cfg.seed, {it}));
      const auto data = generate_truth(cond, gen_prior, rng);
      RunOptions opts;
      opts.keep_latent = false;
      const auto ps = gibbs_run(data.train, ModelVariant::hierarchical, cfg.prior, cfg.schedule,
                                derive_seed(cfg.seed, {it, 0xC0DE}), opts);
      const auto s = summarize(ps, cfg.level);
      const auto& truth = data.truth;
      for (std::size_t slot = 0; slot <= L; ++slot) {
        const auto& h = s.hypers.at(slot);
        if (slot > 0 && h.covariate_id != st.covariate_ids[slot - 1]) throw Error("fitted covariate order differs");
        cov[0 * Cc + slot] = h.beta_tilde.contains(truth.beta_tilde(static_cast<Eigen::Index>(slot)));
        cov[1 * Cc + slot] = h.lambda2.contains(truth.lambda2(static_cast<Eigen::Index>(slot)));
        if (slot > 0) cov[2 * Cc + slot] = h.pi.contains(truth.pi(static_cast<Eigen::Index>(slot - 1)));
      }
      for (std::size_t g = 0; g < G; ++g) {
        const auto& gid = data.layout.group_ids[g];
        const auto& slots = data.layout.slots[g];
        for (std::size_t k = 0; k <= slots.size(); ++k) {
          const std::size_t col = k == 0 ? 0 : static_cast<std::size_t>(slots[k - 1]) + 1;
          const auto* c = s.find(gid, k == 0 ? kInterceptName : st.covariate_ids[col - 1]);
          if (!c) throw Error("missing coefficient summary");
          cov[(3 + g) * Cc + col] = c->effect.contains(truth.beta[g](static_cast<Eigen::Index>(k)));
          if (k > 0) {
            const bool included = c->inclusion_probability > 0.5;
            acc[g * L + col - 1] = included == (truth.gamma[g][k - 1] != 0);
          }
        }
      }
      cov[(R - 1) * Cc] = s.sigma2.contains(truth.sigma2);
    } catch (const std::exception&) {
      failed[it] = 1;
    }
    cov_hits[it] = std::move(cov);
    acc_hits[it] = std::move(acc);
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(++done, static_cast<std::size_t>(cfg.outer));
    }
  });

  res.coverage.assign(R, std::vector<Tally>(Cc));
  res.accuracy.assign(G, std::vector<Tally>(L));
  for (std::size_t it = 0; it < cov_hits.size(); ++it) {
    if (failed[it]) {
      ++res.failures;
      continue;
    }
    for (std::size_t i = 0; i < R * Cc; ++i)
      if (cov_hits[it][i] >= 0) {
        auto& t = res.coverage[i / Cc][i % Cc];
        t.hits += cov_hits[it][i];
        ++t.trials;
      }
    for (std::size_t i = 0; i < G * L; ++i)
      if (acc_hits[it][i] >= 0) {
        auto& t = res.accuracy[i / L][i % L];
        t.hits += acc_hits[it][i];
        ++t.trials;
      }
  }
  return res;
}

inline ValidationResult coverage_study(const ValidationConfig& cfg, const StudyProgress& progress = {}) {
  return validation_study(cfg, progress);
}

inline ValidationResult selection_accuracy_study(const ValidationConfig& cfg, const StudyProgress& progress = {}) {
  return validation_study(cfg, progress);
}

/// coverage.csv (parameter x {Intercept, covariates}) and
/// selection_accuracy.csv (group x covariates); blank cells where the
/// parameter does not exist.
inline void write_validation(const std::filesystem::path& dir, const ValidationResult& res) {
  std::filesystem::create_directories(dir);
  auto rate = [](const Tally& t) { return t.trials ? csv::format(t.rate(), 3) : std::string{}; };
  csv::Table cov;
  cov.header = {"parameter"};
  cov.header.insert(cov.header.end(), res.columns.begin(), res.columns.end());
  for (std::size_t r = 0; r < res.coverage_rows.size(); ++r) {
    csv::Row row{res.coverage_rows[r]};
    for (const auto& t : res.coverage[r]) row.push_back(rate(t));
    cov.rows.push_back(std::move(row));
  }
  csv::write_file((dir / "coverage.csv").string(), cov);

  csv::Table acc;
  acc.header = {"group"};
  acc.header.insert(acc.header.end(), res.columns.begin() + 1, res.columns.end());
  for (std::size_t g = 0; g < res.accuracy_rows.size(); ++g) {
    csv::Row row{res.accuracy_rows[g]};
    for (const auto& t : res.accuracy[g]) row.push_back(rate(t));
    acc.rows.push_back(std::move(row));
  }
  csv::write_file((dir / "selection_accuracy.csv").string(), acc);

  std::ofstream rep(dir / "validation_report.txt", std::ios::binary);
  const auto overall = res.overall_accuracy();
  rep << "outer iterations: " << res.outer << "\nfailed iterations: " << res.failures
      << "\noverall selection accuracy: " << csv::format(overall.rate()) << " (" << overall.hits << "/"
      << overall.trials << ")\n";
}

}  // namespace hierslab
