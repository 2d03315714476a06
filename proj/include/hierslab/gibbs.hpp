#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hierslab/chain_state.hpp"
#include "hierslab/conditionals.hpp"
#include "hierslab/data_model.hpp"
#include "hierslab/prior.hpp"
#include "hierslab/rng.hpp"

namespace hierslab {

/// Gibbs sampler for one chain over a fixed dataset.
///
/// A sweep updates, in order: censored latent log-times, each group's
/// coefficient vector, the inclusion indicators, the inclusion
/// probabilities, the slab mean/variance per covariate and for the
/// intercept, and finally sigma2.
class GibbsSampler {
 public:
  GibbsSampler(const GroupedDataset& ds, ModelVariant variant, PriorConfig prior)
      : variant_(variant), prior_(prior) {
    prior_.validate();
    ds.validate();
    if (ds.groups.empty()) throw ValidationError("dataset has no groups");
    if (has_covariates(variant_)) layout_.covariates = ds.covariate_registry;
    members_.resize(layout_.covariates.size());

    for (const auto& g : ds.groups) {
      GroupData gd;
      const auto n = static_cast<Eigen::Index>(g.size());
      std::vector<int> slots;
      if (has_covariates(variant_)) {
        for (const auto& c : g.covariate_ids) slots.push_back(static_cast<int>(ds.covariate_index(c)));
      }
      gd.x.resize(n, static_cast<Eigen::Index>(slots.size()) + 1);
      gd.x.col(0).setOnes();
      for (std::size_t k = 0; k < slots.size(); ++k)
        gd.x.col(static_cast<Eigen::Index>(k) + 1) = g.design.col(static_cast<Eigen::Index>(k));
      gd.xtx = gd.x.transpose() * gd.x;
      gd.y.resize(n);
      std::vector<int> censored;
      for (Eigen::Index j = 0; j < n; ++j) {
        gd.y(j) = g.outcomes[static_cast<std::size_t>(j)].log_time;
        if (!g.outcomes[static_cast<std::size_t>(j)].event) censored.push_back(static_cast<int>(j));
      }
      gd.censored = censored;
      gd.log_censor.resize(static_cast<Eigen::Index>(censored.size()));
      for (std::size_t c = 0; c < censored.size(); ++c) gd.log_censor(static_cast<Eigen::Index>(c)) = gd.y(censored[c]);
      const std::size_t gi = groups_.size();
      for (std::size_t k = 0; k < slots.size(); ++k)
        members_[static_cast<std::size_t>(slots[k])].push_back({gi, k});
      layout_.group_ids.push_back(g.group_id);
      layout_.slots.push_back(std::move(slots));
      layout_.censored_rows.push_back(std::move(censored));
      n_total_ += g.size();
      groups_.push_back(std::move(gd));
    }
    state_ = initial_state();
  }

  const ModelLayout& layout() const { return layout_; }
  const ChainState& state() const { return state_; }
  ModelVariant variant() const { return variant_; }
  const PriorConfig& prior() const { return prior_; }

  /// Number of truncated-normal imputations performed so far.
  std::uint64_t imputations() const { return imputations_; }

  /// beta = 0, beta_tilde = 0, lambda2 at its prior mean (mode when the mean
  /// does not exist), gamma = 1, pi = 0.5, sigma2 = 1, latent log-times 0.1
  /// above their censor times.
  ChainState initial_state() const {
    const std::size_t L = layout_.covariate_count();
    ChainState s;
    auto prior_center = [](double shape, double rate) { return shape > 1.0 ? rate / (shape - 1.0) : rate / (shape + 1.0); };
    s.beta_tilde = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L) + 1);
    s.lambda2 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(L) + 1,
                                          prior_center(prior_.lambda_shape, prior_.lambda_rate));
    s.lambda2(0) = prior_center(prior_.lambda0_shape, prior_.lambda0_rate);
    s.pi = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(L), 0.5);
    s.sigma2 = 1.0;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      s.beta.push_back(Eigen::VectorXd::Zero(groups_[g].x.cols()));
      s.gamma.emplace_back(layout_.slots[g].size(), std::uint8_t{1});
      s.latent_log_times.push_back(groups_[g].log_censor.array() + 0.1);
    }
    return s;
  }

  /// Replaces the current state. Shapes must match the layout and every
  /// latent log-time must exceed its censor time.
  void set_state(ChainState s) {
    if (s.beta.size() != groups_.size() || s.gamma.size() != groups_.size() ||
        s.latent_log_times.size() != groups_.size() ||
        s.beta_tilde.size() != static_cast<Eigen::Index>(layout_.covariate_count()) + 1 ||
        s.lambda2.size() != s.beta_tilde.size() || s.pi.size() != static_cast<Eigen::Index>(layout_.covariate_count()))
      throw Error("set_state: shape mismatch");
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      if (s.beta[g].size() != groups_[g].x.cols() || s.gamma[g].size() != layout_.slots[g].size() ||
          s.latent_log_times[g].size() != groups_[g].log_censor.size())
        throw Error("set_state: group shape mismatch");
      if ((s.latent_log_times[g].array() <= groups_[g].log_censor.array()).any())
        throw Error("set_state: latent log-time not above its censor time");
    }
    if (variant_ == ModelVariant::full_no_ss)
      for (auto& row : s.gamma) std::fill(row.begin(), row.end(), std::uint8_t{1});
    state_ = std::move(s);
  }

  void sweep(Rng& rng) {
    impute_latent(rng);
    update_coefficients(rng);
    update_indicators(rng);
    update_inclusion_probabilities(rng);
    update_slabs(rng);
    update_sigma2(rng);
  }

 private:
  struct GroupData {
    Eigen::MatrixXd x;  ///< intercept column then S_i
    Eigen::MatrixXd xtx;
    Eigen::VectorXd y;  ///< observed log-times (log censor time for censored rows)
    std::vector<int> censored;
    Eigen::VectorXd log_censor;
    Eigen::VectorXd complete;  ///< y with latent values substituted
  };
  struct Member {
    std::size_t group;
    std::size_t position;  ///< index into gamma[group]; coefficient position + 1
  };

  void impute_latent(Rng& rng) {
    const double sd = std::sqrt(state_.sigma2);
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      auto& gd = groups_[g];
      auto& latent = state_.latent_log_times[g];
      for (std::size_t c = 0; c < gd.censored.size(); ++c) {
        const double mean = gd.x.row(gd.censored[c]).dot(state_.beta[g]);
        latent(static_cast<Eigen::Index>(c)) = impute_censored(mean, sd, gd.log_censor(static_cast<Eigen::Index>(c)), rng);
      }
      imputations_ += gd.censored.size();
    }
  }

  void update_coefficients(Rng& rng) {
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      auto& gd = groups_[g];
      gd.complete = gd.y;
      for (std::size_t c = 0; c < gd.censored.size(); ++c)
        gd.complete(gd.censored[c]) = state_.latent_log_times[g](static_cast<Eigen::Index>(c));
      const Eigen::VectorXd xty = gd.x.transpose() * gd.complete;
      const auto p = gd.x.cols();
      Eigen::VectorXd mean(p), var(p);
      mean(0) = state_.beta_tilde(0);
      var(0) = state_.lambda2(0);
      for (Eigen::Index k = 1; k < p; ++k) {
        const int slot = layout_.slots[g][static_cast<std::size_t>(k - 1)];
        if (state_.gamma[g][static_cast<std::size_t>(k - 1)]) {
          mean(k) = state_.beta_tilde(slot + 1);
          var(k) = state_.lambda2(slot + 1);
        } else {
          mean(k) = 0.0;
          var(k) = prior_.spike_variance;
        }
      }
      state_.beta[g] = beta_group_conditional(gd.xtx, xty, mean, var, state_.sigma2).draw(rng);
    }
  }

  void update_indicators(Rng& rng) {
    if (!samples_gamma(variant_)) return;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      for (std::size_t k = 0; k < layout_.slots[g].size(); ++k) {
        const int slot = layout_.slots[g][k];
        state_.gamma[g][k] = sample_gamma(state_.beta[g](static_cast<Eigen::Index>(k) + 1), state_.beta_tilde(slot + 1),
                                          state_.lambda2(slot + 1), state_.pi(slot), prior_.spike_variance, rng);
      }
    }
  }

  void update_inclusion_probabilities(Rng& rng) {
    switch (variant_) {
      case ModelVariant::hierarchical:
        for (std::size_t l = 0; l < members_.size(); ++l) {
          scratch_gamma_.clear();
          for (const auto& m : members_[l]) scratch_gamma_.push_back(state_.gamma[m.group][m.position]);
          state_.pi(static_cast<Eigen::Index>(l)) = sample_pi(scratch_gamma_, prior_.pi_alpha, prior_.pi_beta, rng);
        }
        break;
      case ModelVariant::shared_pi: {
        scratch_gamma_.clear();
        for (const auto& row : state_.gamma) scratch_gamma_.insert(scratch_gamma_.end(), row.begin(), row.end());
        if (!scratch_gamma_.empty())
          state_.pi.setConstant(sample_pi(scratch_gamma_, prior_.pi_alpha, prior_.pi_beta, rng));
        break;
      }
      case ModelVariant::fixed_half:
        state_.pi.setConstant(0.5);
        break;
      case ModelVariant::full_no_ss:
      case ModelVariant::null_intercept_only:
        break;
    }
  }

  void update_slabs(Rng& rng) {
    scratch_betas_.clear();
    for (const auto& b : state_.beta) scratch_betas_.push_back(b(0));
    state_.beta_tilde(0) = sample_beta_tilde(scratch_betas_, state_.lambda2(0), prior_.tau2_intercept, rng);
    state_.lambda2(0) = sample_lambda2(scratch_betas_, state_.beta_tilde(0), prior_.lambda0_shape, prior_.lambda0_rate, rng);
    for (std::size_t l = 0; l < members_.size(); ++l) {
      scratch_betas_.clear();
      for (const auto& m : members_[l])
        if (state_.gamma[m.group][m.position])
          scratch_betas_.push_back(state_.beta[m.group](static_cast<Eigen::Index>(m.position) + 1));
      const auto s = static_cast<Eigen::Index>(l) + 1;
      state_.beta_tilde(s) = sample_beta_tilde(scratch_betas_, state_.lambda2(s), prior_.tau2_coef, rng);
      state_.lambda2(s) = sample_lambda2(scratch_betas_, state_.beta_tilde(s), prior_.lambda_shape, prior_.lambda_rate, rng);
    }
  }

  void update_sigma2(Rng& rng) {
    double rss = 0.0;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      auto& gd = groups_[g];
      rss += (gd.complete - gd.x * state_.beta[g]).squaredNorm();
    }
    state_.sigma2 = sample_sigma2(rss, n_total_, prior_.sigma2_shape, prior_.sigma2_rate, rng);
  }

  ModelVariant variant_;
  PriorConfig prior_;
  ModelLayout layout_;
  std::vector<GroupData> groups_;
  std::vector<std::vector<Member>> members_;  ///< per covariate: (group, position) pairs with l in S_i
  std::size_t n_total_ = 0;
  ChainState state_;
  std::uint64_t imputations_ = 0;
  std::vector<std::uint8_t> scratch_gamma_;
  std::vector<double> scratch_betas_;
};

struct RunOptions {
  bool keep_latent = true;
  /// Called every `progress_every` iterations with the iteration index.
  std::function<void(long)> progress;
  long progress_every = 1000;
};

/// Runs one chain and returns its thinned post-burn-in draws. Reproducible
/// given (dataset, variant, prior, schedule, seed).
inline PosteriorSamples gibbs_run(const GroupedDataset& ds, ModelVariant variant, const PriorConfig& prior,
                                  const Schedule& schedule, std::uint64_t seed, const RunOptions& options = {}) {
  schedule.validate();
  GibbsSampler sampler(ds, variant, prior);
  Rng rng(seed);
  PosteriorSamples out;
  out.layout = sampler.layout();
  out.meta = {seed, schedule, variant, prior};
  out.has_latent = options.keep_latent;
  out.draws.reserve(static_cast<std::size_t>(schedule.stored_draws()));
  for (long t = 1; t <= schedule.total; ++t) {
    try {
      sampler.sweep(rng);
    } catch (const SamplerError&) {
      throw;
    } catch (const Error& e) {
      throw SamplerError(e.what(), t);
    }
    if (!sampler.state().all_finite()) throw SamplerError("non-finite chain state", t);
    if (schedule.keeps(t)) {
      out.draws.push_back(sampler.state());
      if (!options.keep_latent) out.draws.back().latent_log_times.clear();
    }
    if (options.progress && options.progress_every > 0 && t % options.progress_every == 0) options.progress(t);
  }
  return out;
}

}  // namespace hierslab
