#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hierslab/chain_state.hpp"
#include "hierslab/math.hpp"

namespace hierslab {

inline const std::string kInterceptName = "(Intercept)";

/// Posterior mean and equal-tailed credible interval.
struct Interval {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();

  bool contains(double x) const { return lower <= x && x <= upper; }
};

inline Interval summarize_draws(std::vector<double> draws, double level) {
  Interval out;
  if (draws.empty()) return out;
  out.mean = math::mean(draws);
  std::sort(draws.begin(), draws.end());
  const double tail = 0.5 * (1.0 - level);
  out.lower = math::quantile_sorted(draws, tail);
  out.upper = math::quantile_sorted(draws, 1.0 - tail);
  return out;
}

struct CoefficientSummary {
  std::string group_id;
  std::string covariate_id;  ///< kInterceptName for the intercept
  double inclusion_probability = std::numeric_limits<double>::quiet_NaN();  ///< NaN for intercepts
  Interval effect;

  bool is_intercept() const { return covariate_id == kInterceptName; }
};

struct HyperSummary {
  std::string covariate_id;  ///< kInterceptName for the intercept slab
  Interval beta_tilde;
  Interval lambda2;
  Interval pi;  ///< NaN unless the variant samples or fixes pi
};

struct PosteriorSummary {
  ModelVariant variant = ModelVariant::hierarchical;
  double level = 0.95;
  std::size_t draws = 0;
  std::vector<CoefficientSummary> coefficients;  ///< group-major, intercept first
  std::vector<HyperSummary> hypers;              ///< intercept first
  Interval sigma2;

  /// Coefficients with inclusion probability strictly above 0.5, by
  /// descending inclusion probability (stable on ties).
  std::vector<CoefficientSummary> selected(double threshold = 0.5) const {
    std::vector<CoefficientSummary> out;
    for (const auto& c : coefficients)
      if (!c.is_intercept() && c.inclusion_probability > threshold) out.push_back(c);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return a.inclusion_probability > b.inclusion_probability;
    });
    return out;
  }

  const CoefficientSummary* find(const std::string& group, const std::string& covariate) const {
    for (const auto& c : coefficients)
      if (c.group_id == group && c.covariate_id == covariate) return &c;
    return nullptr;
  }
};

/// Reduces a chain to inclusion probabilities, posterior means and
/// equal-tailed `level` credible intervals (type-7 quantiles).
inline PosteriorSummary summarize(const PosteriorSamples& ps, double level = 0.95) {
  if (ps.draws.empty()) throw Error("summarize: no posterior draws");
  const auto& lay = ps.layout;
  const std::size_t T = ps.draws.size();
  PosteriorSummary out;
  out.variant = ps.meta.variant;
  out.level = level;
  out.draws = T;

  std::vector<double> buf(T);
  for (std::size_t g = 0; g < lay.group_count(); ++g) {
    const std::size_t p = lay.slots[g].size() + 1;
    for (std::size_t k = 0; k < p; ++k) {
      CoefficientSummary c;
      c.group_id = lay.group_ids[g];
      c.covariate_id = k == 0 ? kInterceptName : lay.covariates[static_cast<std::size_t>(lay.slots[g][k - 1])];
      for (std::size_t t = 0; t < T; ++t) buf[t] = ps.draws[t].beta[g](static_cast<Eigen::Index>(k));
      c.effect = summarize_draws(buf, level);
      if (k > 0) {
        double on = 0.0;
        for (std::size_t t = 0; t < T; ++t) on += ps.draws[t].gamma[g][k - 1];
        c.inclusion_probability = on / static_cast<double>(T);
      }
      out.coefficients.push_back(std::move(c));
    }
  }

  const bool pi_meaningful = samples_gamma(ps.meta.variant);
  for (std::size_t s = 0; s <= lay.covariate_count(); ++s) {
    HyperSummary h;
    h.covariate_id = s == 0 ? kInterceptName : lay.covariates[s - 1];
    for (std::size_t t = 0; t < T; ++t) buf[t] = ps.draws[t].beta_tilde(static_cast<Eigen::Index>(s));
    h.beta_tilde = summarize_draws(buf, level);
    for (std::size_t t = 0; t < T; ++t) buf[t] = ps.draws[t].lambda2(static_cast<Eigen::Index>(s));
    h.lambda2 = summarize_draws(buf, level);
    if (s > 0 && pi_meaningful) {
      for (std::size_t t = 0; t < T; ++t) buf[t] = ps.draws[t].pi(static_cast<Eigen::Index>(s - 1));
      h.pi = summarize_draws(buf, level);
    }
    out.hypers.push_back(std::move(h));
  }
  for (std::size_t t = 0; t < T; ++t) buf[t] = ps.draws[t].sigma2;
  out.sigma2 = summarize_draws(buf, level);
  return out;
}

/// Summaries of several chains of the same model side by side with the
/// summary of their pooled draws.
inline std::pair<std::vector<PosteriorSummary>, PosteriorSummary> summarize_chains(
    const std::vector<PosteriorSamples>& chains, double level = 0.95) {
  if (chains.empty()) throw Error("summarize_chains: no chains");
  std::vector<PosteriorSummary> each;
  PosteriorSamples pooled;
  pooled.layout = chains.front().layout;
  pooled.meta = chains.front().meta;
  for (const auto& c : chains) {
    if (c.layout.group_ids != pooled.layout.group_ids || c.layout.covariates != pooled.layout.covariates)
      throw Error("summarize_chains: chains have different layouts");
    each.push_back(summarize(c, level));
    pooled.draws.insert(pooled.draws.end(), c.draws.begin(), c.draws.end());
  }
  return {std::move(each), summarize(pooled, level)};
}

}  // namespace hierslab
