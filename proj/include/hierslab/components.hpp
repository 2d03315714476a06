#pragma once

// Turns pre-factorized low-rank modules into predictor columns: SVD scores
// (singular value times right singular vector), the first-component /
// variance-ratio selection rule, and assembly into a GroupedDataset.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "hierslab/csv.hpp"
#include "hierslab/data_model.hpp"
#include "hierslab/error.hpp"

namespace hierslab {

/// A features x samples low-rank block.
struct LowRankModule {
  int module_id = 0;
  Eigen::MatrixXd data_block;
  std::vector<std::string> sample_ids;  ///< one per column
  std::vector<std::string> groups;      ///< declared group coverage (informational)

  void validate() const {
    if (static_cast<std::size_t>(data_block.cols()) != sample_ids.size())
      throw ValidationError("module " + std::to_string(module_id) + ": column count != sample id count");
    if (!data_block.allFinite())
      throw ValidationError("module " + std::to_string(module_id) + ": non-finite entries");
  }
};

struct ComponentScores {
  int module_id = 0;
  int component_index = 1;  ///< 1-based rank within the module
  std::vector<std::string> sample_ids;
  Eigen::VectorXd scores;   ///< sigma_k * v_k, aligned with sample_ids
  double singular_value = 0.0;
  double variance_ratio = 0.0;

  /// Predictor name "module.index", e.g. "16.1".
  std::string name() const { return std::to_string(module_id) + "." + std::to_string(component_index); }
};

inline double squared_frobenius(const Eigen::MatrixXd& m) { return m.squaredNorm(); }

/// Component scores of one module, ordered by descending singular value.
///
/// `max_components == 0` selects min(rows, cols, 20). `total_variance <= 0`
/// uses the module's own squared Frobenius norm as the ratio denominator.
inline std::vector<ComponentScores> svd_scores(const LowRankModule& m, int max_components = 0,
                                               double total_variance = 0.0) {
  m.validate();
  const auto rows = m.data_block.rows();
  const auto cols = m.data_block.cols();
  if (rows == 0 || cols == 0)
    throw ValidationError("module " + std::to_string(m.module_id) + ": empty data block");
  const double frob2 = squared_frobenius(m.data_block);
  if (frob2 == 0.0) throw ValidationError("module " + std::to_string(m.module_id) + ": degenerate module");
  const int rank_cap = static_cast<int>(std::min(rows, cols));
  if (max_components == 0) max_components = std::min(rank_cap, 20);
  if (max_components < 1 || max_components > rank_cap)
    throw ConfigError("max_components must lie in [1, " + std::to_string(rank_cap) + "]");
  const double denom = total_variance > 0.0 ? total_variance : frob2;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(m.data_block, Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  const auto& v = svd.matrixV();

  std::vector<ComponentScores> out;
  for (int k = 0; k < max_components; ++k) {
    Eigen::VectorXd vk = v.col(k);
    Eigen::Index arg = 0;
    vk.cwiseAbs().maxCoeff(&arg);
    if (vk(arg) < 0.0) vk = -vk;
    ComponentScores c;
    c.module_id = m.module_id;
    c.component_index = k + 1;
    c.sample_ids = m.sample_ids;
    c.singular_value = sigma(k);
    c.scores = sigma(k) * vk;
    c.variance_ratio = sigma(k) * sigma(k) / denom;
    out.push_back(std::move(c));
  }
  return out;
}

/// Keeps every module's first component plus any component whose squared
/// singular value exceeds `threshold` of the total variance. Ratios are
/// recomputed against `total_variance`; output is sorted by (module, index).
inline std::vector<ComponentScores> filter_components(std::vector<ComponentScores> all, double total_variance,
                                                      double threshold = 0.01) {
  if (!(total_variance > 0.0)) throw ConfigError("total_variance must be positive");
  std::vector<ComponentScores> kept;
  for (auto& c : all) {
    c.variance_ratio = c.singular_value * c.singular_value / total_variance;
    if (c.component_index == 1 || c.variance_ratio > threshold) kept.push_back(std::move(c));
  }
  std::stable_sort(kept.begin(), kept.end(), [](const ComponentScores& a, const ComponentScores& b) {
    return a.module_id != b.module_id ? a.module_id < b.module_id : a.component_index < b.component_index;
  });
  return kept;
}

struct AssembledDesign {
  GroupedDataset dataset;
  std::size_t unmatched_subjects = 0;  ///< scored subjects absent from the dataset
};

/// Adds each selected component as a covariate. A component enters S_i iff
/// every subject of group i has a score.
inline AssembledDesign assemble_design(const std::vector<ComponentScores>& selected, const GroupedDataset& ds) {
  AssembledDesign out{ds, 0};
  std::set<std::string> known;
  for (const auto& g : ds.groups) known.insert(g.subject_ids.begin(), g.subject_ids.end());

  for (const auto& comp : selected) {
    const std::string name = comp.name();
    if (ds.covariate_index(name) >= 0) throw ValidationError("covariate '" + name + "' already present");
    std::unordered_map<std::string, double> lookup;
    for (std::size_t s = 0; s < comp.sample_ids.size(); ++s) {
      lookup.emplace(comp.sample_ids[s], comp.scores(static_cast<Eigen::Index>(s)));
      if (!known.count(comp.sample_ids[s])) ++out.unmatched_subjects;
    }
    bool used = false;
    for (auto& g : out.dataset.groups) {
      if (g.subject_ids.empty()) continue;
      Eigen::VectorXd column(static_cast<Eigen::Index>(g.size()));
      bool complete = true;
      for (std::size_t j = 0; j < g.size() && complete; ++j) {
        const auto it = lookup.find(g.subject_ids[j]);
        if (it == lookup.end()) complete = false;
        else column(static_cast<Eigen::Index>(j)) = it->second;
      }
      if (!complete) continue;
      g.design.conservativeResize(Eigen::NoChange, g.design.cols() + 1);
      g.design.col(g.design.cols() - 1) = column;
      g.covariate_ids.push_back(name);
      used = true;
    }
    if (used) out.dataset.covariate_registry.push_back(name);
  }
  out.dataset.validate();
  return out;
}

// ---------------------------------------------------------------------------
// File formats

/// One module CSV: header row of sample ids, one row per feature. A leading
/// label column is allowed when its header cell is empty or "feature".
inline LowRankModule load_module_csv(const std::string& path, int module_id) {
  const auto table = csv::read_file(path);
  std::size_t first = 0;
  if (!table.header.empty() && (csv::trim(table.header[0]).empty() || table.header[0] == "feature")) first = 1;
  LowRankModule m;
  m.module_id = module_id;
  for (std::size_t c = first; c < table.header.size(); ++c) m.sample_ids.push_back(csv::trim(table.header[c]));
  m.data_block.resize(static_cast<Eigen::Index>(table.rows.size()),
                      static_cast<Eigen::Index>(m.sample_ids.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = first; c < table.header.size(); ++c) {
      const auto v = csv::to_double(table.rows[r][c]);
      if (!v) throw ParseError(path + ": non-numeric entry '" + table.rows[r][c] + "'", r + 1);
      m.data_block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - first)) = *v;
    }
  }
  m.validate();
  return m;
}

struct ManifestEntry {
  int module_id = 0;
  std::string path;
  std::vector<std::string> groups;
};

/// Manifest CSV with columns `module_id,path[,groups]`; groups are
/// ';'-separated. Relative paths resolve against the manifest's directory.
inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
  const auto table = csv::read_file(path);
  const auto id_col = table.column("module_id");
  const auto path_col = table.column("path");
  const auto groups_col = table.column("groups");
  if (!id_col || !path_col) throw ParseError("manifest needs 'module_id' and 'path' columns", 0);
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> out;
  std::set<int> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto id = csv::to_double(row[*id_col]);
    if (!id || *id != std::floor(*id)) throw ParseError("manifest: bad module_id", r + 1);
    ManifestEntry e;
    e.module_id = static_cast<int>(*id);
    if (!seen.insert(e.module_id).second) throw ParseError("manifest: duplicate module_id", r + 1);
    std::filesystem::path p = csv::trim(row[*path_col]);
    e.path = (p.is_relative() ? base / p : p).string();
    if (groups_col) {
      std::string list = row[*groups_col];
      std::size_t start = 0;
      while (start <= list.size()) {
        const auto end = list.find(';', start);
        const std::string g = csv::trim(list.substr(start, end == std::string::npos ? std::string::npos : end - start));
        if (!g.empty()) e.groups.push_back(g);
        if (end == std::string::npos) break;
        start = end + 1;
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

/// subjects x components CSV, blank where a subject has no score.
inline void write_component_scores(const std::string& path, const std::vector<ComponentScores>& comps,
                                   const GroupedDataset& ds) {
  csv::Table t;
  t.header = {"subject", "group"};
  std::vector<std::unordered_map<std::string, double>> lookup;
  for (const auto& c : comps) {
    t.header.push_back(c.name());
    auto& m = lookup.emplace_back();
    for (std::size_t s = 0; s < c.sample_ids.size(); ++s) m.emplace(c.sample_ids[s], c.scores(static_cast<Eigen::Index>(s)));
  }
  for (const auto& g : ds.groups) {
    for (const auto& subject : g.subject_ids) {
      csv::Row row{subject, g.group_id};
      for (const auto& m : lookup) {
        const auto it = m.find(subject);
        row.push_back(it == m.end() ? std::string{} : csv::format(it->second));
      }
      t.rows.push_back(std::move(row));
    }
  }
  csv::write_file(path, t);
}

}  // namespace hierslab
