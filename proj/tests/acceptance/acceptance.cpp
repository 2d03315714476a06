// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 1 5 9      run a subset
//
// Artifacts (tables, CLI outputs) go to ./acceptance_artifacts.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hierslab/hierslab.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace hierslab;

namespace {

// Tolerances
constexpr double kKsMinP = 0.001;               // criteria 1, 2
constexpr int kConditionalDraws = 10000;        // criterion 1
constexpr int kGirCycles = 10000;               // criterion 2
constexpr int kOuterIterations = 500;           // criteria 3, 4
constexpr double kCoverageTarget = 0.95;
constexpr double kCoverageTol = 0.04;           // criterion 3
constexpr double kAccuracyTarget = 0.90;
constexpr double kAccuracyTol = 0.05;           // criterion 4 overall
constexpr double kCellAccuracyLow = 0.80;       // criterion 4 per cell
constexpr double kCellAccuracyHigh = 0.97;
constexpr int kStudyReplications = 10;          // criterion 5
constexpr double kStudyAlpha = 0.01;
constexpr double kFullNoneMin = 0.98;
constexpr double kNullNoneMax = 0.02;
constexpr double kFullAllMax = 0.01;
constexpr double kReconstructionTol = 1e-8;     // criterion 7
constexpr double kOrthogonalityTol = 1e-6;
constexpr double kMcSe = 3.0;                   // criterion 8
constexpr int kTruncDraws = 100000;

const fs::path kArtifacts = "acceptance_artifacts";

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string fmt(double v, int digits = 4) { return csv::format(v, digits); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Conjugate conditionals against their closed forms

Outcome criterion_1() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  std::vector<double> xs(kConditionalDraws);
  auto ks = [&](const std::string& name, const std::function<double(double)>& cdf) {
    const auto r = oracle::ks_test(xs, cdf);
    out.check(r.p_value > kKsMinP, name + ": KS D=" + fmt(r.statistic) + " p=" + fmt(r.p_value));
  };

  // pi: 7 of 10 indicators on, Beta(2, 3) prior -> Beta(9, 6)
  const std::vector<std::uint8_t> gamma{1, 1, 0, 1, 1, 1, 0, 1, 0, 1};
  for (auto& x : xs) x = sample_pi(gamma, 2.0, 3.0, rng);
  ks("sample_pi Beta(9,6)", oracle::beta_cdf(9.0, 6.0));

  // beta_tilde: K = 3 slab members, lambda2 = 0.4, tau2 = 1
  const std::vector<double> slab{0.3, 0.9, 0.5};
  {
    const double k = 3.0, bbar = (0.3 + 0.9 + 0.5) / 3.0, l2 = 0.4, t2 = 1.0;
    for (auto& x : xs) x = sample_beta_tilde(slab, l2, t2, rng);
    ks("sample_beta_tilde", oracle::normal_cdf(k * t2 * bbar / (l2 + k * t2), l2 * t2 / (l2 + k * t2)));
  }
  // lambda2: W = sum (b - 0.5)^2 = 0.04 + 0.16 + 0 = 0.2 -> IG(3/2 + 5, 1 + 0.1)
  for (auto& x : xs) x = sample_lambda2(slab, 0.5, 5.0, 1.0, rng);
  ks("sample_lambda2 IG(6.5,1.1)", oracle::inv_gamma_cdf(6.5, 1.1));

  // sigma2: 6 residuals, RSS = 3.5 -> IG(3 + 0.01, 1.75 + 0.01)
  const std::vector<double> res{1.0, -1.0, 0.5, -0.5, 1.0, 0.5};
  for (auto& x : xs) x = sample_sigma2(std::span<const double>(res), 0.01, 0.01, rng);
  ks("sample_sigma2 IG(3.01,1.885)", oracle::inv_gamma_cdf(3.01, 1.885));

  const double secs = seconds_since(t0);
  out.check(secs < 10.0, "runtime " + fmt(secs, 3) + " s < 10 s");
  return out;
}

// ---------------------------------------------------------------------------
// 2. Getting it right: prior -> data -> one sweep keeps the prior marginals

Outcome criterion_2() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const PriorConfig prior = PriorConfig::validation();
  GenCondition cond;
  cond.kind = InclusionPattern::from_prior;
  cond.structure = StructureTemplate::validation();
  const std::size_t L = cond.structure.covariate_ids.size();

  std::vector<std::vector<double>> bt(L + 1), l2(L + 1), pi(L);
  std::vector<double> s2;
  for (int cycle = 0; cycle < kGirCycles; ++cycle) {
    Rng rng(derive_seed(202, {static_cast<std::uint64_t>(cycle)}));
    const auto data = generate_truth(cond, prior, rng);
    GibbsSampler sampler(data.train, ModelVariant::hierarchical, prior);
    ChainState st = data.truth;
    st.latent_log_times.clear();
    for (std::size_t g = 0; g < data.train.groups.size(); ++g) {
      const auto& rows = sampler.layout().censored_rows[g];
      Eigen::VectorXd lat(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t c = 0; c < rows.size(); ++c)
        lat(static_cast<Eigen::Index>(c)) = data.train.groups[g].outcomes[static_cast<std::size_t>(rows[c])].log_time + 1.0;
      st.latent_log_times.push_back(std::move(lat));
    }
    // the sweep's first step redraws the latent times from their exact
    // conditional given the true parameters, completing a prior-predictive draw
    sampler.set_state(std::move(st));
    sampler.sweep(rng);
    const auto& s = sampler.state();
    for (std::size_t l = 0; l <= L; ++l) {
      bt[l].push_back(s.beta_tilde(static_cast<Eigen::Index>(l)));
      l2[l].push_back(s.lambda2(static_cast<Eigen::Index>(l)));
      if (l < L) pi[l].push_back(s.pi(static_cast<Eigen::Index>(l)));
    }
    s2.push_back(s.sigma2);
  }
  for (std::size_t l = 0; l <= L; ++l) {
    const std::string tag = l == 0 ? "intercept" : cond.structure.covariate_ids[l - 1];
    auto r = oracle::ks_test(bt[l], oracle::normal_cdf(0.0, l == 0 ? prior.tau2_intercept : prior.tau2_coef));
    out.check(r.p_value > kKsMinP, "beta_tilde[" + tag + "] p=" + fmt(r.p_value));
    r = oracle::ks_test(l2[l], l == 0 ? oracle::inv_gamma_cdf(prior.lambda0_shape, prior.lambda0_rate)
                                      : oracle::inv_gamma_cdf(prior.lambda_shape, prior.lambda_rate));
    out.check(r.p_value > kKsMinP, "lambda2[" + tag + "] p=" + fmt(r.p_value));
  }
  const auto r = oracle::ks_test(s2, oracle::inv_gamma_cdf(prior.sigma2_shape, prior.sigma2_rate));
  out.check(r.p_value > kKsMinP, "sigma2 p=" + fmt(r.p_value));
  for (std::size_t l = 0; l < L; ++l) {
    const auto rp = oracle::ks_test(pi[l], oracle::beta_cdf(prior.pi_alpha, prior.pi_beta));
    out.notes.push_back("info pi[" + cond.structure.covariate_ids[l] + "] p=" + fmt(rp.p_value));
  }
  const double secs = seconds_since(t0);
  out.check(secs < 600.0, "runtime " + fmt(secs, 3) + " s < 600 s");
  return out;
}

// ---------------------------------------------------------------------------
// 3 and 4. Coverage and selection accuracy from one validation run

Outcome criteria_3_4(bool want3, bool want4, Outcome& acc_out) {
  Outcome cov_out;
  const auto t0 = std::chrono::steady_clock::now();
  ValidationConfig cfg;
  cfg.outer = kOuterIterations;
  cfg.seed = 303;
  const auto res = validation_study(cfg);
  write_validation(kArtifacts / "validation", res);
  const double secs = seconds_since(t0);

  cov_out.check(res.failures == 0, "failed outer iterations: " + std::to_string(res.failures));
  double lo = 1.0, hi = 0.0;
  for (std::size_t r = 0; r < res.coverage.size(); ++r) {
    for (std::size_t c = 0; c < res.coverage[r].size(); ++c) {
      const auto& t = res.coverage[r][c];
      if (!t.trials) continue;
      lo = std::min(lo, t.rate());
      hi = std::max(hi, t.rate());
      if (std::abs(t.rate() - kCoverageTarget) > kCoverageTol)
        cov_out.check(false, res.coverage_rows[r] + "/" + res.columns[c] + " coverage " + fmt(t.rate(), 3));
    }
  }
  cov_out.check(lo >= kCoverageTarget - kCoverageTol && hi <= kCoverageTarget + kCoverageTol,
                "coverage range [" + fmt(lo, 3) + ", " + fmt(hi, 3) + "] within 0.95 +/- 0.04");
  cov_out.check(secs < 3600.0, "runtime " + fmt(secs, 4) + " s < 3600 s");

  const auto overall = res.overall_accuracy();
  acc_out.check(std::abs(overall.rate() - kAccuracyTarget) <= kAccuracyTol,
                "overall accuracy " + fmt(overall.rate(), 3) + " within 0.90 +/- 0.05");
  double alo = 1.0, ahi = 0.0;
  for (std::size_t g = 0; g < res.accuracy.size(); ++g)
    for (std::size_t c = 0; c < res.accuracy[g].size(); ++c) {
      const auto& t = res.accuracy[g][c];
      if (!t.trials) continue;
      alo = std::min(alo, t.rate());
      ahi = std::max(ahi, t.rate());
      if (t.rate() < kCellAccuracyLow || t.rate() > kCellAccuracyHigh)
        acc_out.check(false, res.accuracy_rows[g] + "/" + res.columns[c + 1] + " accuracy " + fmt(t.rate(), 3));
    }
  acc_out.check(alo >= kCellAccuracyLow && ahi <= kCellAccuracyHigh,
                "cell accuracy range [" + fmt(alo, 3) + ", " + fmt(ahi, 3) + "] within [0.80, 0.97]");
  (void)want3;
  (void)want4;
  return cov_out;
}

// ---------------------------------------------------------------------------
// 5. Model-comparison study ordering at desk scale

Outcome criterion_5() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  StudyConfig cfg;
  cfg.conditions = standard_conditions(StructureTemplate::desk(10, 150));
  cfg.replications = kStudyReplications;
  cfg.schedule = {10000, 5000, 10};
  cfg.seed = 505;
  cfg.alpha = kStudyAlpha;
  const auto res = run_study(cfg);
  write_study(kArtifacts / "study", res);
  out.check(res.failures() == 0, "failed cells: " + std::to_string(res.failures()));

  const auto H = static_cast<std::size_t>(res.variant_index(ModelVariant::hierarchical));
  const auto F = static_cast<std::size_t>(res.variant_index(ModelVariant::fixed_half));
  const auto Full = static_cast<std::size_t>(res.variant_index(ModelVariant::full_no_ss));
  const auto Null = static_cast<std::size_t>(res.variant_index(ModelVariant::null_intercept_only));
  auto cond = [&](const std::string& label) {
    return static_cast<std::size_t>(std::find(res.conditions.begin(), res.conditions.end(), label) - res.conditions.begin());
  };

  for (const char* label : {"all_or_none(0.5)", "all_or_none(0.1)"}) {
    const auto c = cond(label);
    bool lowest = true;
    for (std::size_t v = 0; v < res.variants.size(); ++v)
      if (v != H && !(res.mean_ssd(c, H) < res.mean_ssd(c, v))) lowest = false;
    std::string row;
    for (std::size_t v = 0; v < res.variants.size(); ++v)
      row += " " + to_string(res.variants[v]) + "=" + fmt(res.mean_ssd(c, v));
    out.check(lowest, std::string("(a) ") + label + " hierarchical strictly lowest SSD:" + row);
    const double p = res.ssd_significance[c].p_values[H][F];
    out.check(p < kStudyAlpha, std::string("(a) ") + label + " hierarchical vs fixed_half p=" + fmt(p));
  }
  {
    const auto c = cond("none_included");
    out.check(res.mean_ssd(c, Full) >= kFullNoneMin, "(b) none_included full_no_ss SSD " + fmt(res.mean_ssd(c, Full)) + " >= 0.98");
    out.check(res.mean_ssd(c, Null) <= kNullNoneMax, "(b) none_included null SSD " + fmt(res.mean_ssd(c, Null)) + " <= 0.02");
  }
  {
    const auto c = cond("all_included");
    out.check(res.mean_ssd(c, Full) <= kFullAllMax, "(c) all_included full_no_ss SSD " + fmt(res.mean_ssd(c, Full)) + " <= 0.01");
  }
  {
    const auto c = cond("all_or_none(0.5)");
    bool worst = true;
    std::string row;
    for (std::size_t v = 0; v < res.variants.size(); ++v) {
      row += " " + to_string(res.variants[v]) + "=" + fmt(res.mean_lppl(c, v), 8);
      if (v != Null && !(res.mean_lppl(c, Null) < res.mean_lppl(c, v))) worst = false;
    }
    out.check(worst, "(d) all_or_none(0.5) null strictly worst log-PPL:" + row);
  }
  const double secs = seconds_since(t0);
  out.check(secs < 4 * 3600.0, "runtime " + fmt(secs, 4) + " s < 4 h");
  return out;
}

// ---------------------------------------------------------------------------
// 6. Cross-validation ranking on strong sparse effects

Outcome criterion_6() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  PriorConfig strong = PriorConfig::validation();
  strong.tau2_coef = 4.0;  // slab means ~ N(0, 2^2): typical included effect > 1 sd of X
  Rng rng(606);
  const auto data = generate_truth(parse_condition("all_or_none(0.5)", StructureTemplate::desk(10, 150)), strong, rng);
  const auto folds = make_folds(data.train, 5, 606);
  const std::vector<ModelVariant> vs{ModelVariant::hierarchical, ModelVariant::null_intercept_only, ModelVariant::full_no_ss};
  const auto cv = cross_validate(data.train, vs, folds, PriorConfig{}, Schedule{10000, 5000, 10}, 606);
  csv::Table t;
  t.header = {"variant", "fold", "log_ppl"};
  for (std::size_t v = 0; v < vs.size(); ++v) {
    for (int k = 0; k < cv.fold_count; ++k)
      t.rows.push_back({to_string(vs[v]), std::to_string(k + 1), csv::format(cv.log_ppl[v][static_cast<std::size_t>(k)], 10)});
    t.rows.push_back({to_string(vs[v]), "mean", csv::format(cv.mean(v), 10)});
  }
  fs::create_directories(kArtifacts);
  csv::write_file((kArtifacts / "cv_strong_effects.csv").string(), t);
  const double h = cv.mean(0), n = cv.mean(1), f = cv.mean(2);
  out.check(h > n, "hierarchical " + fmt(h, 10) + " > null " + fmt(n, 10));
  out.check(h > f, "hierarchical " + fmt(h, 10) + " > full_no_ss " + fmt(f, 10));
  const double secs = seconds_since(t0);
  out.check(secs < 1800.0, "runtime " + fmt(secs, 4) + " s < 1800 s");
  return out;
}

// ---------------------------------------------------------------------------
// 7. Component pipeline

Eigen::MatrixXd orthonormal_columns(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

LowRankModule module_with_spectrum(int id, Eigen::Index rows, Eigen::Index cols, const std::vector<double>& sigma,
                                   Rng& rng) {
  const auto r = static_cast<Eigen::Index>(sigma.size());
  const Eigen::MatrixXd u = orthonormal_columns(rows, r, rng), v = orthonormal_columns(cols, r, rng);
  Eigen::VectorXd s(r);
  for (Eigen::Index k = 0; k < r; ++k) s(k) = sigma[static_cast<std::size_t>(k)];
  LowRankModule m;
  m.module_id = id;
  m.data_block = u * s.asDiagonal() * v.transpose();
  for (Eigen::Index j = 0; j < cols; ++j) m.sample_ids.push_back("s" + std::to_string(j));
  return m;
}

Outcome criterion_7() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(707);

  double worst_rec = 0.0, worst_orth = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    LowRankModule m;
    m.module_id = rep + 1;
    const Eigen::Index rows = 20 + rep, cols = 35 + 2 * rep;
    Eigen::MatrixXd a(rows, 3), b(3, cols);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
    m.data_block = a * b;
    for (Eigen::Index j = 0; j < cols; ++j) m.sample_ids.push_back("s" + std::to_string(j));
    const auto comps = svd_scores(m, 3);
    // scores are sigma_k v_k, so u_k sigma_k v_k^T = (A v_k) v_k^T
    Eigen::MatrixXd rec = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& c : comps) {
      const Eigen::VectorXd v = c.scores / c.singular_value;
      rec += (m.data_block * v) * v.transpose();
    }
    worst_rec = std::max(worst_rec, (rec - m.data_block).norm() / m.data_block.norm());
    for (std::size_t j = 0; j < comps.size(); ++j)
      for (std::size_t k = j + 1; k < comps.size(); ++k)
        worst_orth = std::max(worst_orth, std::abs(comps[j].scores.dot(comps[k].scores)) /
                                              (comps[j].scores.norm() * comps[k].scores.norm()));
  }
  out.check(worst_rec < kReconstructionTol, "max relative reconstruction error " + fmt(worst_rec, 3));
  out.check(worst_orth < kOrthogonalityTol, "max normalized score cross-product " + fmt(worst_orth, 3));

  // 5-module fixture; total variance 100 makes ratio = sigma^2 / 100
  const double total = 100.0;
  auto sig = [&](std::vector<double> ratios) {
    for (auto& r : ratios) r = std::sqrt(r * total);
    return ratios;
  };
  const std::vector<std::vector<double>> ratios{
      {0.030, 0.012, 0.004}, {0.002}, {0.5, 0.0105, 0.0095}, {0.02, 0.015}, {0.009, 0.008}};
  std::vector<ComponentScores> all;
  for (std::size_t m = 0; m < ratios.size(); ++m) {
    const auto mod = module_with_spectrum(static_cast<int>(m) + 1, 12, 16, sig(ratios[m]), rng);
    auto c = svd_scores(mod, static_cast<int>(ratios[m].size()), total);
    for (std::size_t k = 0; k < c.size(); ++k)
      if (std::abs(c[k].variance_ratio - ratios[m][k]) > 1e-12) out.check(false, "ratio of " + c[k].name());
    all.insert(all.end(), c.begin(), c.end());
  }
  std::vector<std::string> kept;
  for (const auto& c : filter_components(all, total, 0.01)) kept.push_back(c.name());
  const std::vector<std::string> expected{"1.1", "1.2", "2.1", "3.1", "3.2", "4.1", "4.2", "5.1"};
  std::string got;
  for (const auto& k : kept) got += " " + k;
  out.check(kept == expected, "filter keeps first components plus ratio > 0.01:" + got);

  const double secs = seconds_since(t0);
  out.check(secs < 5.0, "runtime " + fmt(secs, 3) + " s < 5 s");
  return out;
}

// ---------------------------------------------------------------------------
// 8. Metric examples and truncated-normal moments

Outcome criterion_8() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();

  InclusionMap truth{{{"A", "X1"}, 1.0}, {{"A", "X2"}, 0.0}};
  out.check(mean_ssd(truth, truth) == 0.0, "mean_ssd perfect selection = 0");
  out.check(mean_ssd(truth, {{{"A", "X1"}, 0.0}, {{"A", "X2"}, 1.0}}) == 1.0, "mean_ssd maximal error = 1");
  out.check(std::abs(mean_ssd(truth, {{{"A", "X1"}, 0.9}, {{"A", "X2"}, 0.2}}) - 0.025) < 1e-15, "mean_ssd (1,0) vs (0.9,0.2) = 0.025");
  bool threw = false;
  try {
    mean_ssd(truth, {{{"A", "X1"}, 0.5}});
  } catch (const ValidationError&) {
    threw = true;
  }
  out.check(threw, "mean_ssd key mismatch raises");

  PosteriorSamples ps;
  ps.layout.group_ids = {"A"};
  ps.layout.covariates = {};
  ps.layout.slots = {{}};
  ps.layout.censored_rows = {{}};
  ChainState s;
  s.beta = {Eigen::VectorXd::Zero(1)};
  s.gamma = {{}};
  s.beta_tilde = Eigen::VectorXd::Zero(1);
  s.lambda2 = Eigen::VectorXd::Ones(1);
  s.sigma2 = 1.0;
  ps.draws = {s};
  auto one = [](double log_time, bool event) {
    GroupedDataset ds;
    Group g;
    g.group_id = "A";
    g.design.resize(1, 0);
    g.outcomes = {{log_time, event}};
    ds.groups.push_back(g);
    return ds;
  };
  out.check(log_ppl(GroupedDataset{}, ps).log_ppl == 0.0, "log_ppl empty test set = 0");
  out.check(std::abs(log_ppl(one(-1e6, false), ps).log_ppl) < 1e-300, "log_ppl censored far below mean = 0");
  const double ev = log_ppl(one(0.0, true), ps).log_ppl;
  out.check(std::abs(ev - oracle::lognormal_log_density_numeric(1.0, 0.0, 1.0)) < 1e-6 && std::abs(ev + 0.9189385332) < 1e-9,
            "log_ppl event at t=1, mu=0, sigma2=1: " + fmt(ev, 10) + " (time-density convention)");

  std::mt19937_64 eng(808);
  for (double a : {-std::numeric_limits<double>::infinity(), 0.0, 3.0, 6.0}) {
    Rng rng(derive_seed(808, {static_cast<std::uint64_t>(std::isinf(a) ? 99 : a)}));
    std::vector<double> ours(kTruncDraws), ref(kTruncDraws);
    for (auto& x : ours) x = impute_censored(0.0, 1.0, a, rng);
    for (auto& x : ref) x = std::isinf(a) ? std::normal_distribution<double>()(eng) : oracle::truncated_normal_rejection(a, eng);
    const double n = kTruncDraws;
    const double m1 = math::mean(ours), m2 = math::mean(ref);
    const double v1 = math::variance(ours), v2 = math::variance(ref);
    const double se_mean = std::sqrt(v1 / n + v2 / n);
    // s.e. of a sample variance ~ sqrt((mu4 - sigma^4) / n); mu4 estimated from the data
    auto m4 = [](const std::vector<double>& xs, double m) {
      double s4 = 0.0;
      for (double x : xs) s4 += std::pow(x - m, 4);
      return s4 / static_cast<double>(xs.size());
    };
    const double se_var = std::sqrt((m4(ours, m1) - v1 * v1) / n + (m4(ref, m2) - v2 * v2) / n);
    const std::string tag = std::isinf(a) ? "-inf" : fmt(a, 2);
    out.check(std::abs(m1 - m2) <= kMcSe * se_mean, "truncation " + tag + ": mean " + fmt(m1, 6) + " vs oracle " + fmt(m2, 6));
    out.check(std::abs(v1 - v2) <= kMcSe * se_var, "truncation " + tag + ": variance " + fmt(v1, 6) + " vs oracle " + fmt(v2, 6));
  }
  const double secs = seconds_since(t0);
  out.check(secs < 30.0, "runtime " + fmt(secs, 3) + " s < 30 s");
  return out;
}

// ---------------------------------------------------------------------------
// 9. Byte-identical CLI re-runs

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HIERSLAB_CLI) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return out;
}

Outcome criterion_9() {
  Outcome out;
  const auto root = fs::absolute(kArtifacts / "determinism");
  fs::remove_all(root);
  fs::create_directories(root);
  Rng rng(909);
  const auto data = generate_truth(parse_condition("all_or_none(0.5)", StructureTemplate::desk(10, 150)),
                                   PriorConfig::validation(), rng);
  write_dataset((root / "data.csv").string(), data.train, 10);
  std::ofstream(root / "fit.json") << R"({"data": "data.csv", "variant": "hierarchical", "schedule": {"total": 2000, "burn_in": 1000, "thin": 5}, "threads": 2})";
  std::ofstream(root / "cv.json") << R"({"data": "data.csv", "folds": 5, "schedule": {"total": 1000, "burn_in": 500, "thin": 5}, "threads": 2})";
  std::ofstream(root / "simulate.json") << R"({"replications": 2, "schedule": {"total": 500, "burn_in": 250, "thin": 5}, "threads": 2, "structure": {"template": "desk", "groups": 10, "size": 150}})";

  for (const std::string cmd : {"fit", "cv", "simulate"}) {
    const auto cfg = (root / (cmd + ".json")).string();
    const int a = run_cli(cmd + " --seed 9 --config " + cfg + " --out " + (root / (cmd + "_a")).string());
    const int b = run_cli(cmd + " --seed 9 --config " + cfg + " --out " + (root / (cmd + "_b")).string());
    if (a != 0 || b != 0) {
      out.check(false, cmd + " exit codes " + std::to_string(a) + ", " + std::to_string(b));
      continue;
    }
    const auto ta = read_tree(root / (cmd + "_a"));
    const auto tb = read_tree(root / (cmd + "_b"));
    std::size_t bytes = 0;
    for (const auto& [k, v] : ta) bytes += v.size();
    out.check(ta == tb, cmd + ": " + std::to_string(ta.size()) + " files, " + std::to_string(bytes) + " bytes identical");
  }
  return out;
}

void report(int id, const Outcome& o) {
  std::printf("criterion %d: %s\n", id, o.pass ? "PASS" : "FAIL");
  for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  fs::create_directories(kArtifacts);

  bool all = true;
  auto run = [&](int id, const std::function<Outcome()>& f) {
    if (!wanted.count(id)) return;
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    report(id, o);
    all &= o.pass;
  };
  run(1, criterion_1);
  run(2, criterion_2);
  if (wanted.count(3) || wanted.count(4)) {
    Outcome acc;
    Outcome cov;
    try {
      cov = criteria_3_4(wanted.count(3), wanted.count(4), acc);
    } catch (const std::exception& e) {
      cov.check(false, std::string("exception: ") + e.what());
      acc.check(false, std::string("exception: ") + e.what());
    }
    if (wanted.count(3)) report(3, cov), all &= cov.pass;
    if (wanted.count(4)) report(4, acc), all &= acc.pass;
  }
  run(5, criterion_5);
  run(6, criterion_6);
  run(7, criterion_7);
  run(8, criterion_8);
  run(9, criterion_9);
  return all ? 0 : 1;
}
