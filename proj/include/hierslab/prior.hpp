#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "hierslab/csv.hpp"
#include "hierslab/error.hpp"

namespace hierslab {

/// Hyperparameters of the hierarchical spike-and-slab survival model.
/// Defaults are the data-application values.
struct PriorConfig {
  double spike_variance = 1.0 / 10000.0;  ///< z^2
  double tau2_intercept = 100.0;          ///< beta_tilde_0 ~ N(0, tau2_intercept)
  double tau2_coef = 1.0;                 ///< beta_tilde_l ~ N(0, tau2_coef)
  double lambda0_shape = 1.0;             ///< lambda2_0 ~ IG(shape, rate)
  double lambda0_rate = 1.0;
  double lambda_shape = 5.0;              ///< lambda2_l ~ IG(shape, rate)
  double lambda_rate = 1.0;
  double sigma2_shape = 0.01;             ///< sigma2 ~ IG(shape, rate)
  double sigma2_rate = 0.01;
  double pi_alpha = 1.0;                  ///< pi_l ~ Beta(alpha, beta)
  double pi_beta = 1.0;

  /// Priors of the coverage / selection-accuracy validation runs: identical
  /// except sigma2 ~ IG(1, 1).
  static PriorConfig validation() {
    PriorConfig p;
    p.sigma2_shape = 1.0;
    p.sigma2_rate = 1.0;
    return p;
  }

  std::array<double, 11> values() const {
    return {spike_variance, tau2_intercept, tau2_coef,    lambda0_shape, lambda0_rate, lambda_shape,
            lambda_rate,    sigma2_shape,   sigma2_rate,  pi_alpha,      pi_beta};
  }

  static constexpr std::array<std::string_view, 11> names() {
    return {"spike_variance", "tau2_intercept", "tau2_coef",   "lambda0_shape", "lambda0_rate", "lambda_shape",
            "lambda_rate",    "sigma2_shape",   "sigma2_rate", "pi_alpha",      "pi_beta"};
  }

  double* field(std::string_view name) {
    std::array<double*, 11> ptrs{&spike_variance, &tau2_intercept, &tau2_coef,   &lambda0_shape,
                                 &lambda0_rate,   &lambda_shape,   &lambda_rate, &sigma2_shape,
                                 &sigma2_rate,    &pi_alpha,       &pi_beta};
    const auto n = names();
    for (std::size_t i = 0; i < n.size(); ++i)
      if (n[i] == name) return ptrs[i];
    return nullptr;
  }

  void validate() const {
    const auto v = values();
    const auto n = names();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!(v[i] > 0.0)) throw ConfigError("prior parameter " + std::string(n[i]) + " must be positive");
    if (!(spike_variance < tau2_coef)) throw ConfigError("spike variance must be far below tau2_coef");
  }

  /// FNV-1a over the exact decimal rendering of every field.
  std::string hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (double v : values()) {
      for (char c : csv::format_exact(v) + ";") {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
      }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

/// The five model structures compared against each other.
enum class ModelVariant {
  hierarchical,        ///< per-covariate pi_l, the proposed model
  shared_pi,           ///< one pi shared by every covariate
  fixed_half,          ///< pi held at 0.5
  full_no_ss,          ///< every gamma pinned to 1
  null_intercept_only  ///< random intercepts only
};

inline constexpr std::array<ModelVariant, 5> kAllVariants{ModelVariant::hierarchical, ModelVariant::shared_pi,
                                                          ModelVariant::fixed_half, ModelVariant::full_no_ss,
                                                          ModelVariant::null_intercept_only};

inline std::string to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::hierarchical: return "hierarchical";
    case ModelVariant::shared_pi: return "shared_pi";
    case ModelVariant::fixed_half: return "fixed_half";
    case ModelVariant::full_no_ss: return "full_no_ss";
    case ModelVariant::null_intercept_only: return "null_intercept_only";
  }
  return "?";
}

inline ModelVariant parse_variant(std::string_view s) {
  if (s == "hierarchical") return ModelVariant::hierarchical;
  if (s == "shared_pi" || s == "shared") return ModelVariant::shared_pi;
  if (s == "fixed_half" || s == "fixed") return ModelVariant::fixed_half;
  if (s == "full_no_ss" || s == "full") return ModelVariant::full_no_ss;
  if (s == "null_intercept_only" || s == "null") return ModelVariant::null_intercept_only;
  throw ConfigError("unknown model variant '" + std::string(s) + "'");
}

inline bool has_covariates(ModelVariant v) { return v != ModelVariant::null_intercept_only; }
inline bool samples_gamma(ModelVariant v) { return has_covariates(v) && v != ModelVariant::full_no_ss; }

/// Iteration plan. Iterations are 1-based; iteration t is stored when
/// t > burn_in and (t - burn_in) % thin == 0.
struct Schedule {
  long total = 10000;
  long burn_in = 5000;
  long thin = 10;

  void validate() const {
    if (total < 1 || burn_in < 0 || thin < 1 || total <= burn_in)
      throw ConfigError("invalid schedule: need total > burn_in >= 0 and thin >= 1");
  }

  long stored_draws() const { return (total - burn_in) / thin; }
  bool keeps(long t) const { return t > burn_in && (t - burn_in) % thin == 0; }
};

}  // namespace hierslab
