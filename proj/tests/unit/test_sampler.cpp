#include <filesystem>

#include <gtest/gtest.h>

#include "hierslab/gibbs.hpp"
#include "hierslab/posterior_io.hpp"
#include "hierslab/simulation.hpp"
#include "hierslab/summary.hpp"

using namespace hierslab;

namespace {

SimulatedData small_data(double censor = 0.5, std::uint64_t seed = 1, const char* cond = "all_or_none(0.5)") {
  Rng rng(seed);
  auto c = parse_condition(cond, StructureTemplate::desk(4, 60));
  c.censor_fraction = censor;
  return generate_truth(c, PriorConfig::validation(), rng);
}

bool same_draws(const PosteriorSamples& a, const PosteriorSamples& b) {
  if (a.draws.size() != b.draws.size()) return false;
  for (std::size_t t = 0; t < a.draws.size(); ++t) {
    const auto& x = a.draws[t];
    const auto& y = b.draws[t];
    if (x.sigma2 != y.sigma2 || x.beta_tilde != y.beta_tilde || x.lambda2 != y.lambda2 || x.pi != y.pi ||
        x.gamma != y.gamma)
      return false;
    for (std::size_t g = 0; g < x.beta.size(); ++g)
      if (x.beta[g] != y.beta[g] || x.latent_log_times[g] != y.latent_log_times[g]) return false;
  }
  return true;
}

}  // namespace

TEST(Schedule, DrawCountAndValidation) {
  EXPECT_EQ((Schedule{1000, 500, 10}.stored_draws()), 50);
  EXPECT_EQ((Schedule{1005, 500, 10}.stored_draws()), 50);
  EXPECT_THROW((Schedule{100, 100, 1}.validate()), ConfigError);
  EXPECT_THROW((Schedule{100, 10, 0}.validate()), ConfigError);
  const auto d = small_data();
  const auto ps = gibbs_run(d.train, ModelVariant::hierarchical, PriorConfig{}, Schedule{1000, 500, 10}, 3);
  EXPECT_EQ(ps.draws.size(), 50u);
}

TEST(PriorConfig, DefaultsAndValidation) {
  const PriorConfig p;
  EXPECT_DOUBLE_EQ(p.spike_variance, 1e-4);
  EXPECT_DOUBLE_EQ(p.tau2_intercept, 100.0);
  EXPECT_DOUBLE_EQ(p.lambda_shape, 5.0);
  EXPECT_DOUBLE_EQ(p.sigma2_shape, 0.01);
  EXPECT_DOUBLE_EQ(PriorConfig::validation().sigma2_rate, 1.0);
  PriorConfig bad;
  bad.lambda_rate = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_NE(p.hash(), PriorConfig::validation().hash());
  for (auto v : kAllVariants) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("horseshoe"), ConfigError);
}

TEST(Gibbs, DeterministicGivenSeed) {
  const auto d = small_data();
  const Schedule s{300, 100, 2};
  const auto a = gibbs_run(d.train, ModelVariant::hierarchical, PriorConfig{}, s, 42);
  const auto b = gibbs_run(d.train, ModelVariant::hierarchical, PriorConfig{}, s, 42);
  const auto c = gibbs_run(d.train, ModelVariant::hierarchical, PriorConfig{}, s, 43);
  EXPECT_TRUE(same_draws(a, b));
  EXPECT_FALSE(same_draws(a, c));
}

TEST(Gibbs, LatentTimesExceedCensorTimesInEveryDraw) {
  const auto d = small_data(0.7, 5);
  const auto ps = gibbs_run(d.train, ModelVariant::hierarchical, PriorConfig{}, Schedule{200, 50, 1}, 1);
  for (const auto& draw : ps.draws) {
    for (std::size_t g = 0; g < d.train.groups.size(); ++g) {
      const auto& rows = ps.layout.censored_rows[g];
      ASSERT_EQ(static_cast<std::size_t>(draw.latent_log_times[g].size()), rows.size());
      for (std::size_t c = 0; c < rows.size(); ++c)
        ASSERT_GT(draw.latent_log_times[g](static_cast<Eigen::Index>(c)),
                  d.train.groups[g].outcomes[static_cast<std::size_t>(rows[c])].log_time);
    }
  }
}

TEST(Gibbs, NoCensoringNeverImputes) {
  const auto d = small_data(0.0, 6);
  for (const auto& g : d.train.groups)
    for (const auto& o : g.outcomes) ASSERT_TRUE(o.event);
  GibbsSampler s(d.train, ModelVariant::hierarchical, PriorConfig{});
  Rng rng(1);
  for (int i = 0; i < 50; ++i) s.sweep(rng);
  EXPECT_EQ(s.imputations(), 0u);
}

TEST(Gibbs, NullVariantHasInterceptsOnly) {
  const auto d = small_data();
  const auto ps = gibbs_run(d.train, ModelVariant::null_intercept_only, PriorConfig{}, Schedule{200, 100, 1}, 2);
  for (const auto& draw : ps.draws) {
    for (std::size_t g = 0; g < draw.beta.size(); ++g) {
      EXPECT_EQ(draw.beta[g].size(), 1);
      EXPECT_TRUE(draw.gamma[g].empty());
    }
    EXPECT_EQ(draw.pi.size(), 0);
  }
  const auto s = summarize(ps);
  for (const auto& c : s.coefficients) EXPECT_TRUE(c.is_intercept());
  EXPECT_EQ(s.hypers.size(), 1u);
  EXPECT_TRUE(std::isfinite(s.sigma2.mean));
}

TEST(Gibbs, FullVariantPinsInclusionAtOne) {
  const auto d = small_data();
  const auto ps = gibbs_run(d.train, ModelVariant::full_no_ss, PriorConfig{}, Schedule{200, 100, 1}, 2);
  const auto s = summarize(ps);
  for (const auto& c : s.coefficients)
    if (!c.is_intercept()) EXPECT_EQ(c.inclusion_probability, 1.0);
  for (std::size_t l = 1; l < s.hypers.size(); ++l) EXPECT_TRUE(std::isnan(s.hypers[l].pi.mean));
  InclusionMap ones;
  for (const auto& g : d.train.groups)
    for (const auto& c : g.covariate_ids) ones[{g.group_id, c}] = 1.0;
  EXPECT_EQ(mean_ssd(ones, inclusion_estimates(s, d.train)), 0.0);
}

TEST(Gibbs, FixedAndSharedInclusionProbabilities) {
  const auto d = small_data();
  const auto fixed = gibbs_run(d.train, ModelVariant::fixed_half, PriorConfig{}, Schedule{100, 50, 1}, 2);
  for (const auto& draw : fixed.draws) EXPECT_TRUE((draw.pi.array() == 0.5).all());
  const auto shared = gibbs_run(d.train, ModelVariant::shared_pi, PriorConfig{}, Schedule{100, 50, 1}, 2);
  for (const auto& draw : shared.draws) {
    EXPECT_TRUE((draw.pi.array() == draw.pi(0)).all());
    EXPECT_GT(draw.pi(0), 0.0);
    EXPECT_LT(draw.pi(0), 1.0);
  }
}

TEST(Gibbs, SpikeSuppressionUnderFixedHalf) {
  // zero true effects for every covariate, n = 250 per group
  Rng rng(8);
  const auto d = generate_truth(parse_condition("none_included", StructureTemplate::desk(4, 250)),
                                PriorConfig::validation(), rng);
  const auto ps = gibbs_run(d.train, ModelVariant::fixed_half, PriorConfig{}, Schedule{2000, 1000, 2}, 9);
  const auto s = summarize(ps);
  int checked = 0;
  for (const auto& c : s.coefficients) {
    if (c.is_intercept() || c.inclusion_probability >= 0.1) continue;
    EXPECT_LT(std::abs(c.effect.mean), 3.0 * std::sqrt(PriorConfig{}.spike_variance)) << c.group_id << "/" << c.covariate_id;
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(Gibbs, RecoversStrongEffects) {
  // one group, two covariates: effect 1.5 on X1, none on X2, no censoring
  Rng rng(21);
  GroupedDataset ds;
  Group g;
  g.group_id = "A";
  g.covariate_ids = {"X1", "X2"};
  g.design.resize(400, 2);
  for (Eigen::Index j = 0; j < 400; ++j) {
    g.design(j, 0) = rng.normal();
    g.design(j, 1) = rng.normal();
    g.outcomes.push_back({2.0 + 1.5 * g.design(j, 0) + rng.normal(0.0, 0.5), true});
  }
  ds.groups.push_back(g);
  ds.covariate_registry = {"X1", "X2"};
  const auto s = summarize(gibbs_run(ds, ModelVariant::hierarchical, PriorConfig{}, Schedule{3000, 1000, 2}, 4));
  const auto* x1 = s.find("A", "X1");
  const auto* x2 = s.find("A", "X2");
  EXPECT_GT(x1->inclusion_probability, 0.99);
  EXPECT_TRUE(x1->effect.contains(1.5));
  EXPECT_LT(x2->inclusion_probability, 0.5);
  EXPECT_TRUE(s.find("A", kInterceptName)->effect.contains(2.0));
  EXPECT_TRUE(s.sigma2.contains(0.25));
}

TEST(Gibbs, SetStateChecksShapesAndLatentBounds) {
  const auto d = small_data();
  GibbsSampler s(d.train, ModelVariant::hierarchical, PriorConfig{});
  auto st = s.initial_state();
  EXPECT_NO_THROW(s.set_state(st));
  auto bad = st;
  bad.beta.pop_back();
  EXPECT_THROW(s.set_state(bad), Error);
  bad = st;
  for (auto& v : bad.latent_log_times)
    if (v.size()) {
      v(0) -= 1.0;
      break;
    }
  EXPECT_THROW(s.set_state(bad), Error);
}

TEST(Gibbs, InitialState) {
  const auto d = small_data();
  GibbsSampler s(d.train, ModelVariant::hierarchical, PriorConfig{});
  const auto st = s.initial_state();
  EXPECT_DOUBLE_EQ(st.lambda2(1), 0.25);  // IG(5,1) mean
  EXPECT_DOUBLE_EQ(st.lambda2(0), 0.5);   // IG(1,1) has no mean: mode
  EXPECT_DOUBLE_EQ(st.sigma2, 1.0);
  EXPECT_TRUE((st.pi.array() == 0.5).all());
  for (const auto& row : st.gamma)
    for (auto gm : row) EXPECT_EQ(gm, 1);
}

TEST(Summary, InclusionMeanDegenerateIntervalAndStrictThreshold) {
  PosteriorSamples ps;
  ps.layout.group_ids = {"A"};
  ps.layout.covariates = {"X1", "X2"};
  ps.layout.slots = {{0, 1}};
  ps.layout.censored_rows = {{}};
  ps.meta.variant = ModelVariant::hierarchical;
  const std::vector<std::uint8_t> g1{1, 1, 0, 1}, g2{1, 0, 1, 0};
  for (int t = 0; t < 4; ++t) {
    ChainState s;
    s.beta = {Eigen::Vector3d(0.5, 2.0, -1.0 + t)};
    s.gamma = {{g1[static_cast<std::size_t>(t)], g2[static_cast<std::size_t>(t)]}};
    s.beta_tilde = Eigen::Vector3d::Zero();
    s.lambda2 = Eigen::Vector3d::Ones();
    s.pi = Eigen::Vector2d::Constant(0.5);
    s.latent_log_times = {Eigen::VectorXd()};
    ps.draws.push_back(s);
  }
  const auto s = summarize(ps);
  EXPECT_DOUBLE_EQ(s.find("A", "X1")->inclusion_probability, 0.75);
  EXPECT_DOUBLE_EQ(s.find("A", "X2")->inclusion_probability, 0.5);
  const auto& x1 = s.find("A", "X1")->effect;
  EXPECT_EQ(x1.mean, 2.0);
  EXPECT_EQ(x1.lower, 2.0);
  EXPECT_EQ(x1.upper, 2.0);
  const auto sel = s.selected();
  ASSERT_EQ(sel.size(), 1u);
  EXPECT_EQ(sel[0].covariate_id, "X1");
  EXPECT_TRUE(std::isnan(s.find("A", kInterceptName)->inclusion_probability));
}

TEST(PosteriorIo, SaveLoadRoundTripIsExact) {
  const auto d = small_data(0.5, 3);
  const auto ps = gibbs_run(d.train, ModelVariant::shared_pi, PriorConfig{}, Schedule{60, 20, 4}, 8);
  const auto dir = std::filesystem::temp_directory_path() / "hierslab_post_io";
  std::filesystem::remove_all(dir);
  save_posterior(dir, ps);
  const auto back = load_posterior(dir);
  EXPECT_TRUE(same_draws(ps, back));
  EXPECT_EQ(back.meta.seed, 8u);
  EXPECT_EQ(back.meta.variant, ModelVariant::shared_pi);
  EXPECT_EQ(back.meta.prior.hash(), ps.meta.prior.hash());
  EXPECT_EQ(back.layout.group_ids, ps.layout.group_ids);
  EXPECT_EQ(back.layout.slots, ps.layout.slots);
}

TEST(PosteriorIo, InclusionMatrixHasBlanksForUnavailable) {
  const auto d = small_data();
  const auto ps = gibbs_run(d.train, ModelVariant::hierarchical, PriorConfig{}, Schedule{60, 20, 1}, 1);
  const auto dir = std::filesystem::temp_directory_path() / "hierslab_incl";
  std::filesystem::create_directories(dir);
  write_inclusion_matrix_csv((dir / "m.csv").string(), summarize(ps), ps.layout);
  const auto t = csv::read_file((dir / "m.csv").string());
  ASSERT_EQ(t.rows.size(), ps.layout.covariates.size());
  ASSERT_EQ(t.header.size(), ps.layout.group_ids.size() + 1);
  std::size_t blanks = 0, expected = 0;
  for (const auto& row : t.rows)
    for (std::size_t c = 1; c < row.size(); ++c) blanks += row[c].empty();
  for (std::size_t g = 0; g < ps.layout.group_count(); ++g) expected += ps.layout.covariate_count() - ps.layout.slots[g].size();
  EXPECT_EQ(blanks, expected);
}
