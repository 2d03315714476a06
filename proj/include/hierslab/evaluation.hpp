#pragma once

// Out-of-sample log posterior predictive likelihood, K-fold cross
// validation over model variants, and the mean squared deviation of
// inclusion probabilities from true indicators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "hierslab/chain_state.hpp"
#include "hierslab/data_model.hpp"
#include "hierslab/gibbs.hpp"
#include "hierslab/math.hpp"
#include "hierslab/parallel.hpp"
#include "hierslab/rng.hpp"
#include "hierslab/summary.hpp"

namespace hierslab {

struct PredictiveScore {
  double log_ppl = 0.0;
  std::vector<double> per_draw;  ///< log P(Y_test | Theta_t)
  std::size_t n_test = 0;
};

/// log P(test | Theta_t) for one draw: events contribute the log-normal
/// density of the event *time* (including the -log t Jacobian), censored
/// subjects log Pr(T > c).
inline double test_log_likelihood(const GroupedDataset& test, const ModelLayout& lay, const ChainState& draw) {
  const bool intercept_only = lay.covariates.empty();
  const double sd = std::sqrt(draw.sigma2);
  double total = 0.0;
  for (const auto& g : test.groups) {
    const auto gi = lay.group_index(g.group_id);
    if (gi < 0) throw ValidationError("test group '" + g.group_id + "' was not in the training data");
    const auto& beta = draw.beta[static_cast<std::size_t>(gi)];
    Eigen::VectorXd mu = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.size()), beta(0));
    if (!intercept_only) {
      for (std::size_t c = 0; c < g.covariate_ids.size(); ++c) {
        const auto k = lay.coefficient_of(static_cast<std::size_t>(gi), g.covariate_ids[c]);
        if (k < 0)
          throw ValidationError("covariate '" + g.covariate_ids[c] + "' of test group '" + g.group_id +
                                "' has no fitted coefficient");
        mu += beta(k) * g.design.col(static_cast<Eigen::Index>(c));
      }
    }
    for (std::size_t j = 0; j < g.size(); ++j) {
      const auto& o = g.outcomes[j];
      const double m = mu(static_cast<Eigen::Index>(j));
      if (o.event)
        total += math::normal_log_pdf(o.log_time, m, draw.sigma2) - o.log_time;
      else
        total += math::std_normal_log_sf((o.log_time - m) / sd);
    }
  }
  return total;
}

/// Monte Carlo estimate of log of the posterior predictive likelihood: the
/// log of the average (not the average log) of per-draw test likelihoods.
inline PredictiveScore log_ppl(const GroupedDataset& test, const PosteriorSamples& ps) {
  if (ps.draws.empty()) throw Error("log_ppl: no posterior draws");
  PredictiveScore out;
  out.n_test = test.total_subjects();
  out.per_draw.reserve(ps.draws.size());
  for (const auto& d : ps.draws) out.per_draw.push_back(test_log_likelihood(test, ps.layout, d));
  out.log_ppl = math::log_sum_exp(out.per_draw) - std::log(static_cast<double>(ps.draws.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Cross validation

/// Fold of every subject, in dataset order (group by group).
struct FoldSplit {
  int fold_count = 5;
  std::vector<int> assignment;
};

/// Random within group, balanced across folds: each group's subjects are
/// shuffled and dealt round-robin starting at a random fold.
inline FoldSplit make_folds(const GroupedDataset& ds, int fold_count, std::uint64_t seed) {
  if (fold_count < 2) throw ConfigError("fold_count must be at least 2");
  FoldSplit out;
  out.fold_count = fold_count;
  Rng rng(derive_seed(seed, {0xF01D}));
  for (const auto& g : ds.groups) {
    std::vector<std::size_t> order(g.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng.engine());
    const int offset = rng.uniform_int(0, fold_count - 1);
    std::vector<int> fold(g.size());
    for (std::size_t j = 0; j < order.size(); ++j)
      fold[order[j]] = static_cast<int>((static_cast<std::size_t>(offset) + j) % static_cast<std::size_t>(fold_count));
    out.assignment.insert(out.assignment.end(), fold.begin(), fold.end());
  }
  return out;
}

/// (training, test) datasets for fold k. Test groups without held-out
/// subjects are omitted; a group with no training subjects is an error.
inline std::pair<GroupedDataset, GroupedDataset> split_fold(const GroupedDataset& ds, const FoldSplit& folds, int k) {
  if (folds.assignment.size() != ds.total_subjects()) throw ValidationError("fold assignment does not cover the dataset");
  GroupedDataset train, test;
  train.covariate_registry = test.covariate_registry = ds.covariate_registry;
  std::size_t offset = 0;
  for (const auto& g : ds.groups) {
    std::vector<Eigen::Index> tr, te;
    for (std::size_t j = 0; j < g.size(); ++j)
      (folds.assignment[offset + j] == k ? te : tr).push_back(static_cast<Eigen::Index>(j));
    offset += g.size();
    if (tr.empty())
      throw ValidationError("fold " + std::to_string(k) + " leaves group '" + g.group_id +
                            "' without training subjects; re-stratify with fewer folds");
    auto take = [&](const std::vector<Eigen::Index>& rows) {
      Group out;
      out.group_id = g.group_id;
      out.covariate_ids = g.covariate_ids;
      out.design = g.design(rows, Eigen::all);
      for (auto r : rows) {
        out.outcomes.push_back(g.outcomes[static_cast<std::size_t>(r)]);
        if (!g.subject_ids.empty()) out.subject_ids.push_back(g.subject_ids[static_cast<std::size_t>(r)]);
      }
      return out;
    };
    train.groups.push_back(take(tr));
    if (!te.empty()) test.groups.push_back(take(te));
  }
  return {std::move(train), std::move(test)};
}

struct CvResult {
  std::vector<ModelVariant> variants;
  int fold_count = 0;
  std::vector<std::vector<double>> log_ppl;  ///< [variant][fold]

  double mean(std::size_t v) const { return math::mean(log_ppl[v]); }
};

/// Fits every variant on every training fold (same folds for all variants)
/// and scores the held-out fold. Chain seeds depend on (seed, variant, fold)
/// only, so results do not depend on thread count or on which other
/// variants are requested.
inline CvResult cross_validate(const GroupedDataset& ds, const std::vector<ModelVariant>& variants,
                               const FoldSplit& folds, const PriorConfig& prior, const Schedule& schedule,
                               std::uint64_t seed, int threads = 0) {
  schedule.validate();
  CvResult out;
  out.variants = variants;
  out.fold_count = folds.fold_count;
  out.log_ppl.assign(variants.size(), std::vector<double>(static_cast<std::size_t>(folds.fold_count)));
  std::vector<std::pair<GroupedDataset, GroupedDataset>> splits;
  for (int k = 0; k < folds.fold_count; ++k) splits.push_back(split_fold(ds, folds, k));

  const std::size_t K = static_cast<std::size_t>(folds.fold_count);
  parallel_for(variants.size() * K, threads, [&](std::size_t task) {
    const std::size_t v = task / K, k = task % K;
    const auto chain_seed = derive_seed(seed, {static_cast<std::uint64_t>(variants[v]), k});
    RunOptions opts;
    opts.keep_latent = false;
    const auto ps = gibbs_run(splits[k].first, variants[v], prior, schedule, chain_seed, opts);
    out.log_ppl[v][k] = log_ppl(splits[k].second, ps).log_ppl;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Selection accuracy

using InclusionKey = std::pair<std::string, std::string>;  ///< (group, covariate)
using InclusionMap = std::map<InclusionKey, double>;

/// Mean over all (group, covariate) pairs of (truth - estimate)^2.
inline double mean_ssd(const InclusionMap& truth, const InclusionMap& estimate) {
  std::vector<std::string> diff;
  for (const auto& [k, _] : truth)
    if (!estimate.count(k)) diff.push_back(k.first + "/" + k.second);
  for (const auto& [k, _] : estimate)
    if (!truth.count(k)) diff.push_back(k.first + "/" + k.second);
  if (!diff.empty()) {
    std::string msg = "mean_ssd: key sets differ:";
    for (const auto& d : diff) msg += " " + d;
    throw ValidationError(msg);
  }
  if (truth.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [k, t] : truth) {
    const double d = t - estimate.at(k);
    s += d * d;
  }
  return s / static_cast<double>(truth.size());
}

/// Posterior inclusion probability for every (group, covariate) pair of
/// `ds`; zero for the intercept-only model, which excludes everything.
inline InclusionMap inclusion_estimates(const PosteriorSummary& s, const GroupedDataset& ds) {
  InclusionMap out;
  for (const auto& g : ds.groups) {
    for (const auto& c : g.covariate_ids) {
      if (s.variant == ModelVariant::null_intercept_only) {
        out[{g.group_id, c}] = 0.0;
        continue;
      }
      const auto* coef = s.find(g.group_id, c);
      if (!coef) throw ValidationError("no posterior for " + g.group_id + "/" + c);
      out[{g.group_id, c}] = coef->inclusion_probability;
    }
  }
  return out;
}

}  // namespace hierslab
