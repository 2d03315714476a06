// Two synthetic low-rank modules over three groups: SVD scores, the
// first-component / variance-ratio filter, and the assembled design.

#include <cstdio>

#include "hierslab/hierslab.hpp"

int main() {
  using namespace hierslab;
  Rng rng(5);
  GroupedDataset ds;
  for (const char* id : {"A", "B", "C"}) {
    Group g;
    g.group_id = id;
    for (int j = 0; j < 20; ++j) {
      g.subject_ids.push_back(std::string(id) + std::to_string(j));
      g.outcomes.push_back(SurvivalOutcome::from_time(1.0 + rng.exponential(1.0), rng.bernoulli(0.6)));
    }
    g.design.resize(20, 0);
    ds.groups.push_back(std::move(g));
  }

  auto module = [&](int id, const std::vector<std::string>& groups, int rank) {
    LowRankModule m;
    m.module_id = id;
    for (const auto& g : ds.groups)
      if (std::find(groups.begin(), groups.end(), g.group_id) != groups.end())
        m.sample_ids.insert(m.sample_ids.end(), g.subject_ids.begin(), g.subject_ids.end());
    const auto n = static_cast<Eigen::Index>(m.sample_ids.size());
    Eigen::MatrixXd u(30, rank), v(rank, n);
    for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
    m.data_block = u * v;
    return m;
  };
  const std::vector<LowRankModule> modules{module(1, {"A", "B", "C"}, 3), module(2, {"A", "C"}, 2)};

  double total = 0.0;
  for (const auto& m : modules) total += squared_frobenius(m.data_block);
  total *= 4.0;  // the modules explain a quarter of the (pretend) full data

  std::vector<ComponentScores> all;
  for (const auto& m : modules) {
    auto c = svd_scores(m, 0, total);
    all.insert(all.end(), c.begin(), c.end());
  }
  for (const auto& c : all) std::printf("component %s: sigma %.3f ratio %.4f\n", c.name().c_str(), c.singular_value, c.variance_ratio);

  const auto kept = filter_components(all, total, 0.05);
  const auto design = assemble_design(kept, ds).dataset;
  for (const auto& g : design.groups) {
    std::printf("group %s:", g.group_id.c_str());
    for (const auto& c : g.covariate_ids) std::printf(" %s", c.c_str());
    std::printf("\n");
  }
}
