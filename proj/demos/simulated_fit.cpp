// Simulate grouped survival data with a known inclusion pattern, fit the
// hierarchical model, and compare posterior inclusion with the truth.

#include <cstdio>

#include "hierslab/hierslab.hpp"

int main() {
  using namespace hierslab;
  const auto cond = parse_condition("all_or_none(0.5)", StructureTemplate::desk(6, 200));
  Rng rng(20240611);
  const auto data = generate_truth(cond, PriorConfig::validation(), rng);

  const auto ps = gibbs_run(data.train, ModelVariant::hierarchical, PriorConfig{}, Schedule{4000, 2000, 4}, 11);
  const auto summary = summarize(ps);
  const auto truth = data.true_inclusion();

  std::printf("%-6s %-4s %6s %5s %9s %9s\n", "group", "cov", "PIP", "true", "mean", "95% CI");
  for (const auto& c : summary.coefficients) {
    if (c.is_intercept()) continue;
    std::printf("%-6s %-4s %6.3f %5.0f %9.3f [%.3f, %.3f]\n", c.group_id.c_str(), c.covariate_id.c_str(),
                c.inclusion_probability, truth.at({c.group_id, c.covariate_id}), c.effect.mean, c.effect.lower,
                c.effect.upper);
  }
  std::printf("mean SSD %.4f, test log-PPL %.3f\n", mean_ssd(truth, inclusion_estimates(summary, data.train)),
              log_ppl(data.test, ps).log_ppl);
}
