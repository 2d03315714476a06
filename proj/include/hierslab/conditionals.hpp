#pragma once

// Full conditional draws of the hierarchical spike-and-slab survival model.
// Each function is one closed-form update; the sweep that chains them lives
// in gibbs.hpp.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "hierslab/error.hpp"
#include "hierslab/math.hpp"
#include "hierslab/rng.hpp"

namespace hierslab {

/// pi_l | gamma ~ Beta(alpha + sum(gamma), beta + T - sum(gamma)).
inline double sample_pi(std::span<const std::uint8_t> gamma, double alpha, double beta, Rng& rng) {
  std::size_t on = 0;
  for (auto g : gamma) on += g;
  const double off = static_cast<double>(gamma.size() - on);
  return rng.beta(alpha + static_cast<double>(on), beta + off);
}

/// Pr(gamma = 1 | beta, beta_tilde, lambda2, pi): slab vs spike density
/// ratio, evaluated in log space.
inline double inclusion_probability(double beta, double beta_tilde, double lambda2, double pi, double z2) {
  if (pi >= 1.0) return 1.0;
  if (pi <= 0.0) return 0.0;
  const double slab = std::log(pi) + math::normal_log_pdf(beta, beta_tilde, lambda2);
  const double spike = std::log1p(-pi) + math::normal_log_pdf(beta, 0.0, z2);
  // logistic(slab - spike) without overflow
  const double d = slab - spike;
  return d >= 0.0 ? 1.0 / (1.0 + std::exp(-d)) : std::exp(d) / (1.0 + std::exp(d));
}

inline bool sample_gamma(double beta, double beta_tilde, double lambda2, double pi, double z2, Rng& rng) {
  return rng.bernoulli(inclusion_probability(beta, beta_tilde, lambda2, pi, z2));
}

/// Gaussian with precision `precision` and mean precision^{-1} * shift.
struct GaussianFromPrecision {
  Eigen::VectorXd mean;
  Eigen::LLT<Eigen::MatrixXd> factor;

  Eigen::MatrixXd covariance() const {
    const auto n = mean.size();
    return factor.solve(Eigen::MatrixXd::Identity(n, n));
  }

  Eigen::VectorXd draw(Rng& rng) const {
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
    // precision = L L^T, so L^{-T} z has covariance precision^{-1}
    return mean + factor.matrixU().solve(z);
  }
};

/// Cholesky of the posterior precision; on failure adds 1e-10 to the
/// diagonal, up to three times.
inline GaussianFromPrecision gaussian_from_precision(Eigen::MatrixXd precision, const Eigen::VectorXd& shift) {
  GaussianFromPrecision out;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    if (attempt > 0) precision.diagonal().array() += 1e-10;
    out.factor.compute(precision);
    if (out.factor.info() == Eigen::Success) {
      out.mean = out.factor.solve(shift);
      return out;
    }
  }
  throw Error("coefficient posterior precision is not positive definite");
}

/// Conditional of one group's coefficient vector (intercept first).
///
/// `xtx` and `xty` are X^T X and X^T y for the group's design with an
/// intercept column. prior_mean / prior_var are the per-coefficient spike or
/// slab moments: (beta_tilde_0, lambda2_0) for the intercept, (beta_tilde_l,
/// lambda2_l) when gamma = 1 and (0, z^2) when gamma = 0.
inline GaussianFromPrecision beta_group_conditional(const Eigen::MatrixXd& xtx, const Eigen::VectorXd& xty,
                                                    const Eigen::VectorXd& prior_mean,
                                                    const Eigen::VectorXd& prior_var, double sigma2) {
  Eigen::MatrixXd precision = xtx / sigma2;
  precision.diagonal() += prior_var.cwiseInverse();
  const Eigen::VectorXd shift = xty / sigma2 + prior_mean.cwiseQuotient(prior_var);
  return gaussian_from_precision(std::move(precision), shift);
}

/// Convenience form taking the raw design. `beta_tilde` and `lambda2` are
/// aligned with the columns of `x` (index 0 = intercept); gamma covers
/// columns 1.. only.
inline Eigen::VectorXd sample_beta_group(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                         std::span<const std::uint8_t> gamma, const Eigen::VectorXd& beta_tilde,
                                         const Eigen::VectorXd& lambda2, double sigma2, double z2, Rng& rng) {
  const auto p = x.cols();
  if (static_cast<Eigen::Index>(gamma.size()) + 1 != p || beta_tilde.size() != p || lambda2.size() != p)
    throw Error("sample_beta_group: dimension mismatch");
  Eigen::VectorXd mean(p), var(p);
  mean(0) = beta_tilde(0);
  var(0) = lambda2(0);
  for (Eigen::Index k = 1; k < p; ++k) {
    const bool slab = gamma[static_cast<std::size_t>(k - 1)] != 0;
    mean(k) = slab ? beta_tilde(k) : 0.0;
    var(k) = slab ? lambda2(k) : z2;
  }
  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::VectorXd xty = x.transpose() * y;
  return beta_group_conditional(xtx, xty, mean, var, sigma2).draw(rng);
}

/// beta_tilde_l | slab members ~ N(K tau2 mean / (lambda2 + K tau2),
/// lambda2 tau2 / (lambda2 + K tau2)); the prior N(0, tau2) when K = 0.
inline double sample_beta_tilde(std::span<const double> slab_betas, double lambda2, double tau2, Rng& rng) {
  const double k = static_cast<double>(slab_betas.size());
  double sum = 0.0;
  for (double b : slab_betas) sum += b;
  const double denom = lambda2 + k * tau2;
  const double mean = tau2 * sum / denom;  // K tau2 bar(beta) / denom
  const double var = lambda2 * tau2 / denom;
  return rng.normal(mean, std::sqrt(var));
}

/// lambda2_l | slab members ~ IG(K/2 + shape, rate + W/2), W the sum of
/// squared deviations from beta_tilde.
inline double sample_lambda2(std::span<const double> slab_betas, double beta_tilde, double shape, double rate,
                             Rng& rng) {
  double w = 0.0;
  for (double b : slab_betas) w += (b - beta_tilde) * (b - beta_tilde);
  return rng.inv_gamma(0.5 * static_cast<double>(slab_betas.size()) + shape, rate + 0.5 * w);
}

/// sigma2 | residuals ~ IG(N/2 + shape, RSS/2 + rate).
inline double sample_sigma2(double rss, std::size_t n, double shape, double rate, Rng& rng) {
  return rng.inv_gamma(0.5 * static_cast<double>(n) + shape, 0.5 * rss + rate);
}

inline double sample_sigma2(std::span<const double> residuals, double shape, double rate, Rng& rng) {
  double rss = 0.0;
  for (double r : residuals) rss += r * r;
  return sample_sigma2(rss, residuals.size(), shape, rate, rng);
}

/// Latent log-time of a censored subject: Normal(mean, sd^2) restricted to
/// (log_censor_time, inf). The result is always strictly above the bound.
inline double impute_censored(double mean, double sd, double log_censor_time, Rng& rng) {
  if (log_censor_time == -std::numeric_limits<double>::infinity()) return rng.normal(mean, sd);
  const double z = std_truncated_normal_above((log_censor_time - mean) / sd, rng);
  const double y = mean + sd * z;
  return y > log_censor_time ? y : std::nextafter(log_censor_time, std::numeric_limits<double>::infinity());
}

}  // namespace hierslab
