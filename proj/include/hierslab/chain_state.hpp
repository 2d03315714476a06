#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hierslab/prior.hpp"

namespace hierslab {

/// Coefficient layout shared by every draw of a chain.
struct ModelLayout {
  std::vector<std::string> group_ids;
  std::vector<std::string> covariates;        ///< model covariates (empty for the intercept-only model)
  std::vector<std::vector<int>> slots;        ///< per group: covariate index of coefficient k+1
  std::vector<std::vector<int>> censored_rows;///< per group: rows whose latent log-time is imputed

  std::size_t group_count() const { return group_ids.size(); }
  std::size_t covariate_count() const { return covariates.size(); }

  std::ptrdiff_t group_index(const std::string& id) const {
    for (std::size_t g = 0; g < group_ids.size(); ++g)
      if (group_ids[g] == id) return static_cast<std::ptrdiff_t>(g);
    return -1;
  }

  /// Position of `covariate` among group g's coefficients (1-based, 0 = intercept), or -1.
  std::ptrdiff_t coefficient_of(std::size_t g, const std::string& covariate) const {
    for (std::size_t k = 0; k < slots[g].size(); ++k)
      if (covariates[static_cast<std::size_t>(slots[g][k])] == covariate) return static_cast<std::ptrdiff_t>(k + 1);
    return -1;
  }
};

/// Full parameter state after one Gibbs sweep.
///
/// Hyperparameter vectors use slot 0 for the intercept and slot l+1 for
/// covariate l; `pi` is indexed by covariate directly.
struct ChainState {
  std::vector<Eigen::VectorXd> beta;              ///< per group: intercept then S_i
  Eigen::VectorXd beta_tilde;                     ///< 1 + L
  Eigen::VectorXd lambda2;                        ///< 1 + L
  std::vector<std::vector<std::uint8_t>> gamma;   ///< per group, aligned with beta[g](1..)
  Eigen::VectorXd pi;                             ///< L (all equal under the shared model)
  double sigma2 = 1.0;
  std::vector<Eigen::VectorXd> latent_log_times;  ///< per group, aligned with censored_rows

  bool all_finite() const {
    for (const auto& b : beta)
      if (!b.allFinite()) return false;
    for (const auto& y : latent_log_times)
      if (!y.allFinite()) return false;
    return beta_tilde.allFinite() && lambda2.allFinite() && pi.allFinite() && std::isfinite(sigma2) &&
           sigma2 > 0.0 && (lambda2.size() == 0 || lambda2.minCoeff() > 0.0);
  }
};

struct RunMeta {
  std::uint64_t seed = 0;
  Schedule schedule;
  ModelVariant variant = ModelVariant::hierarchical;
  PriorConfig prior;
};

/// Thinned post-burn-in draws of one chain.
struct PosteriorSamples {
  ModelLayout layout;
  std::vector<ChainState> draws;
  RunMeta meta;
  bool has_latent = true;  ///< false when latent log-times were not retained
};

}  // namespace hierslab
