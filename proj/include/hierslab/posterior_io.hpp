#pragma once

// On-disk form of a chain (a directory of per-family CSVs plus meta.json)
// and the summary tables derived from it.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierslab/chain_state.hpp"
#include "hierslab/csv.hpp"
#include "hierslab/summary.hpp"

namespace hierslab {

namespace detail {

inline std::string pair_name(const std::string& group, const std::string& covariate) {
  return group + "|" + covariate;
}

inline nlohmann::json prior_to_json(const PriorConfig& p) {
  nlohmann::json j;
  const auto names = PriorConfig::names();
  const auto values = p.values();
  for (std::size_t i = 0; i < names.size(); ++i) j[std::string(names[i])] = values[i];
  return j;
}

inline PriorConfig prior_from_json(const nlohmann::json& j, PriorConfig base = {}) {
  for (const auto& [key, value] : j.items()) {
    double* f = base.field(key);
    if (!f) throw ConfigError("unknown prior parameter '" + key + "'");
    *f = value.get<double>();
  }
  return base;
}

inline std::vector<double> read_numbers(const csv::Row& row, std::size_t from, const std::string& file, std::size_t r) {
  std::vector<double> out;
  for (std::size_t c = from; c < row.size(); ++c) {
    const auto v = csv::to_double(row[c]);
    if (!v) throw ParseError(file + ": non-numeric value", r + 1);
    out.push_back(*v);
  }
  return out;
}

}  // namespace detail

/// Writes meta.json, beta.csv, gamma.csv, beta_tilde.csv, lambda2.csv,
/// pi.csv, sigma2.csv and latent.csv (one row per stored draw). Draw values
/// use 17 significant digits so a reloaded chain is bit-identical.
inline void save_posterior(const std::filesystem::path& dir, const PosteriorSamples& ps) {
  std::filesystem::create_directories(dir);
  const auto& lay = ps.layout;

  nlohmann::json meta;
  meta["seed"] = ps.meta.seed;
  meta["schedule"] = {{"total", ps.meta.schedule.total},
                      {"burn_in", ps.meta.schedule.burn_in},
                      {"thin", ps.meta.schedule.thin}};
  meta["variant"] = to_string(ps.meta.variant);
  meta["prior"] = detail::prior_to_json(ps.meta.prior);
  meta["prior_hash"] = ps.meta.prior.hash();
  meta["draws"] = ps.draws.size();
  meta["covariates"] = lay.covariates;
  meta["has_latent"] = ps.has_latent;
  nlohmann::json groups = nlohmann::json::array();
  for (std::size_t g = 0; g < lay.group_count(); ++g)
    groups.push_back({{"id", lay.group_ids[g]}, {"slots", lay.slots[g]}, {"censored_rows", lay.censored_rows[g]}});
  meta["groups"] = groups;
  {
    std::ofstream out(dir / "meta.json", std::ios::binary);
    out << meta.dump(2) << '\n';
  }

  auto table_for = [&](auto&& header_fn, auto&& row_fn, const std::string& file) {
    csv::Table t;
    t.header = {"draw"};
    header_fn(t.header);
    for (std::size_t d = 0; d < ps.draws.size(); ++d) {
      csv::Row row{std::to_string(d + 1)};
      row_fn(ps.draws[d], row);
      t.rows.push_back(std::move(row));
    }
    csv::write_file((dir / file).string(), t);
  };
  auto num = [](double v) { return csv::format_exact(v); };

  table_for(
      [&](csv::Row& h) {
        for (std::size_t g = 0; g < lay.group_count(); ++g) {
          h.push_back(detail::pair_name(lay.group_ids[g], kInterceptName));
          for (int s : lay.slots[g]) h.push_back(detail::pair_name(lay.group_ids[g], lay.covariates[static_cast<std::size_t>(s)]));
        }
      },
      [&](const ChainState& st, csv::Row& r) {
        for (const auto& b : st.beta)
          for (Eigen::Index k = 0; k < b.size(); ++k) r.push_back(num(b(k)));
      },
      "beta.csv");
  table_for(
      [&](csv::Row& h) {
        for (std::size_t g = 0; g < lay.group_count(); ++g)
          for (int s : lay.slots[g]) h.push_back(detail::pair_name(lay.group_ids[g], lay.covariates[static_cast<std::size_t>(s)]));
      },
      [&](const ChainState& st, csv::Row& r) {
        for (const auto& row : st.gamma)
          for (auto v : row) r.push_back(v ? "1" : "0");
      },
      "gamma.csv");
  auto slot_header = [&](csv::Row& h) {
    h.push_back(kInterceptName);
    h.insert(h.end(), lay.covariates.begin(), lay.covariates.end());
  };
  table_for(slot_header,
            [&](const ChainState& st, csv::Row& r) {
              for (Eigen::Index k = 0; k < st.beta_tilde.size(); ++k) r.push_back(num(st.beta_tilde(k)));
            },
            "beta_tilde.csv");
  table_for(slot_header,
            [&](const ChainState& st, csv::Row& r) {
              for (Eigen::Index k = 0; k < st.lambda2.size(); ++k) r.push_back(num(st.lambda2(k)));
            },
            "lambda2.csv");
  table_for([&](csv::Row& h) { h.insert(h.end(), lay.covariates.begin(), lay.covariates.end()); },
            [&](const ChainState& st, csv::Row& r) {
              for (Eigen::Index k = 0; k < st.pi.size(); ++k) r.push_back(num(st.pi(k)));
            },
            "pi.csv");
  table_for([&](csv::Row& h) { h.push_back("sigma2"); },
            [&](const ChainState& st, csv::Row& r) { r.push_back(num(st.sigma2)); }, "sigma2.csv");
  if (ps.has_latent) {
    table_for(
        [&](csv::Row& h) {
          for (std::size_t g = 0; g < lay.group_count(); ++g)
            for (int row : lay.censored_rows[g]) h.push_back(detail::pair_name(lay.group_ids[g], std::to_string(row + 1)));
        },
        [&](const ChainState& st, csv::Row& r) {
          for (const auto& y : st.latent_log_times)
            for (Eigen::Index k = 0; k < y.size(); ++k) r.push_back(num(y(k)));
        },
        "latent.csv");
  }
}

inline PosteriorSamples load_posterior(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw ParseError("cannot open '" + (dir / "meta.json").string() + "'", 0);
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("meta.json: ") + e.what(), 0);
  }
  PosteriorSamples ps;
  ps.meta.seed = meta.at("seed").get<std::uint64_t>();
  ps.meta.schedule = {meta.at("schedule").at("total").get<long>(), meta.at("schedule").at("burn_in").get<long>(),
                      meta.at("schedule").at("thin").get<long>()};
  ps.meta.variant = parse_variant(meta.at("variant").get<std::string>());
  ps.meta.prior = detail::prior_from_json(meta.at("prior"));
  ps.has_latent = meta.value("has_latent", true);
  auto& lay = ps.layout;
  lay.covariates = meta.at("covariates").get<std::vector<std::string>>();
  for (const auto& g : meta.at("groups")) {
    lay.group_ids.push_back(g.at("id").get<std::string>());
    lay.slots.push_back(g.at("slots").get<std::vector<int>>());
    lay.censored_rows.push_back(g.at("censored_rows").get<std::vector<int>>());
  }
  const auto n_draws = meta.at("draws").get<std::size_t>();
  const std::size_t L = lay.covariate_count();

  auto load = [&](const std::string& file, std::size_t width) {
    const auto t = csv::read_file((dir / file).string());
    if (t.rows.size() != n_draws) throw ParseError(file + ": draw count does not match meta.json", 0);
    if (t.header.size() != width + 1) throw ParseError(file + ": unexpected column count", 0);
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < t.rows.size(); ++r) rows.push_back(detail::read_numbers(t.rows[r], 1, file, r));
    return rows;
  };
  std::size_t n_beta = 0, n_gamma = 0, n_latent = 0;
  for (std::size_t g = 0; g < lay.group_count(); ++g) {
    n_beta += lay.slots[g].size() + 1;
    n_gamma += lay.slots[g].size();
    n_latent += lay.censored_rows[g].size();
  }
  const auto beta = load("beta.csv", n_beta);
  const auto gamma = load("gamma.csv", n_gamma);
  const auto beta_tilde = load("beta_tilde.csv", L + 1);
  const auto lambda2 = load("lambda2.csv", L + 1);
  const auto pi = load("pi.csv", L);
  const auto sigma2 = load("sigma2.csv", 1);
  std::vector<std::vector<double>> latent;
  if (ps.has_latent) latent = load("latent.csv", n_latent);

  for (std::size_t d = 0; d < n_draws; ++d) {
    ChainState st;
    std::size_t bi = 0, gi = 0, li = 0;
    for (std::size_t g = 0; g < lay.group_count(); ++g) {
      const std::size_t p = lay.slots[g].size() + 1;
      st.beta.emplace_back(static_cast<Eigen::Index>(p));
      for (std::size_t k = 0; k < p; ++k) st.beta.back()(static_cast<Eigen::Index>(k)) = beta[d][bi++];
      st.gamma.emplace_back();
      for (std::size_t k = 0; k + 1 < p; ++k) st.gamma.back().push_back(gamma[d][gi++] != 0.0 ? 1 : 0);
      const std::size_t c = lay.censored_rows[g].size();
      st.latent_log_times.emplace_back(static_cast<Eigen::Index>(ps.has_latent ? c : 0));
      if (ps.has_latent)
        for (std::size_t k = 0; k < c; ++k) st.latent_log_times.back()(static_cast<Eigen::Index>(k)) = latent[d][li++];
    }
    st.beta_tilde = Eigen::Map<const Eigen::VectorXd>(beta_tilde[d].data(), static_cast<Eigen::Index>(L + 1));
    st.lambda2 = Eigen::Map<const Eigen::VectorXd>(lambda2[d].data(), static_cast<Eigen::Index>(L + 1));
    st.pi = Eigen::Map<const Eigen::VectorXd>(pi[d].data(), static_cast<Eigen::Index>(L));
    st.sigma2 = sigma2[d][0];
    ps.draws.push_back(std::move(st));
  }
  return ps;
}

/// Long-format summary: one row per coefficient, hyperparameter and sigma2.
inline void write_summary_csv(const std::string& path, const PosteriorSummary& s) {
  csv::Table t;
  t.header = {"parameter", "covariate", "group", "mean", "ci_lower", "ci_upper", "inclusion_probability"};
  auto add = [&](const std::string& param, const std::string& cov, const std::string& group, const Interval& iv,
                 double pip) {
    t.rows.push_back({param, cov, group, csv::format(iv.mean), csv::format(iv.lower), csv::format(iv.upper),
                      std::isnan(pip) ? std::string{} : csv::format(pip)});
  };
  const double none = std::numeric_limits<double>::quiet_NaN();
  for (const auto& c : s.coefficients) add("beta", c.covariate_id, c.group_id, c.effect, c.inclusion_probability);
  for (const auto& h : s.hypers) {
    add("beta_tilde", h.covariate_id, "", h.beta_tilde, none);
    add("lambda2", h.covariate_id, "", h.lambda2, none);
    if (!std::isnan(h.pi.mean)) add("pi", h.covariate_id, "", h.pi, none);
  }
  add("sigma2", "", "", s.sigma2, none);
  csv::write_file(path, t);
}

/// Selected (group, covariate) pairs by descending inclusion probability,
/// with effect mean and credible interval.
inline void write_selected_csv(const std::string& path, const PosteriorSummary& s) {
  csv::Table t;
  t.header = {"rank", "component", "group", "mean_effect", "ci_lower", "ci_upper", "inclusion_probability"};
  std::size_t rank = 0;
  for (const auto& c : s.selected())
    t.rows.push_back({std::to_string(++rank), c.covariate_id, c.group_id, csv::format(c.effect.mean),
                      csv::format(c.effect.lower), csv::format(c.effect.upper), csv::format(c.inclusion_probability)});
  csv::write_file(path, t);
}

/// Covariates x groups matrix of inclusion probabilities; blank where the
/// covariate is unavailable for the group.
inline void write_inclusion_matrix_csv(const std::string& path, const PosteriorSummary& s, const ModelLayout& lay) {
  csv::Table t;
  t.header = {"covariate"};
  t.header.insert(t.header.end(), lay.group_ids.begin(), lay.group_ids.end());
  for (const auto& cov : lay.covariates) {
    csv::Row row{cov};
    for (const auto& g : lay.group_ids) {
      const auto* c = s.find(g, cov);
      row.push_back(c ? csv::format(c->inclusion_probability) : std::string{});
    }
    t.rows.push_back(std::move(row));
  }
  csv::write_file(path, t);
}

}  // namespace hierslab
