#pragma once

// Grouped, right-censored survival data with per-group covariate
// availability, plus CSV ingestion and standardization.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hierslab/csv.hpp"
#include "hierslab/error.hpp"

namespace hierslab {

/// One subject's (possibly right-censored) outcome. Stored on the log scale:
/// the model is linear in log-time and simulated log-times need not be
/// representable as finite times.
struct SurvivalOutcome {
  double log_time = 0.0;  ///< log event time, or log censor time when !event
  bool event = true;      ///< true = event observed, false = right-censored

  double time() const { return std::exp(log_time); }

  static SurvivalOutcome from_time(double time, bool event) {
    if (!(time > 0.0)) throw ValidationError("survival time must be positive");
    return {std::log(time), event};
  }
};

struct Group {
  std::string group_id;
  std::vector<std::string> subject_ids;
  std::vector<SurvivalOutcome> outcomes;
  Eigen::MatrixXd design;                  ///< n_i x |S_i|
  std::vector<std::string> covariate_ids;  ///< S_i, ordered as the design columns

  std::size_t size() const { return outcomes.size(); }

  std::ptrdiff_t column_of(const std::string& covariate) const {
    const auto it = std::find(covariate_ids.begin(), covariate_ids.end(), covariate);
    return it == covariate_ids.end() ? -1 : it - covariate_ids.begin();
  }

  void validate() const {
    if (outcomes.empty()) throw ValidationError("group '" + group_id + "' has no subjects");
    if (static_cast<std::size_t>(design.rows()) != outcomes.size() ||
        static_cast<std::size_t>(design.cols()) != covariate_ids.size())
      throw ValidationError("group '" + group_id + "': design shape does not match outcomes/covariates");
    if (!subject_ids.empty() && subject_ids.size() != outcomes.size())
      throw ValidationError("group '" + group_id + "': subject id count mismatch");
    std::set<std::string> seen;
    for (const auto& c : covariate_ids)
      if (!seen.insert(c).second)
        throw ValidationError("group '" + group_id + "': duplicate covariate '" + c + "'");
    for (const auto& o : outcomes)
      if (!std::isfinite(o.log_time))
        throw ValidationError("group '" + group_id + "': non-finite log time");
    if (!design.allFinite()) throw ValidationError("group '" + group_id + "': non-finite design value");
  }
};

struct GroupedDataset {
  std::vector<Group> groups;
  std::vector<std::string> covariate_registry;  ///< all L covariates, union of every S_i

  std::size_t total_subjects() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    return n;
  }

  std::size_t covariate_count() const { return covariate_registry.size(); }

  std::ptrdiff_t covariate_index(const std::string& id) const {
    const auto it = std::find(covariate_registry.begin(), covariate_registry.end(), id);
    return it == covariate_registry.end() ? -1 : it - covariate_registry.begin();
  }

  const Group* find_group(const std::string& id) const {
    for (const auto& g : groups)
      if (g.group_id == id) return &g;
    return nullptr;
  }

  void validate() const {
    std::set<std::string> registry(covariate_registry.begin(), covariate_registry.end());
    if (registry.size() != covariate_registry.size())
      throw ValidationError("covariate registry has duplicates");
    std::set<std::string> ids;
    for (const auto& g : groups) {
      g.validate();
      if (!ids.insert(g.group_id).second) throw ValidationError("duplicate group '" + g.group_id + "'");
      for (const auto& c : g.covariate_ids)
        if (!registry.count(c))
          throw ValidationError("group '" + g.group_id + "' uses unregistered covariate '" + c + "'");
    }
  }

  /// Order each group's columns by registry position and sort groups by id.
  void canonicalize() {
    std::sort(groups.begin(), groups.end(),
              [](const Group& a, const Group& b) { return a.group_id < b.group_id; });
    for (auto& g : groups) {
      std::vector<std::size_t> order(g.covariate_ids.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return covariate_index(g.covariate_ids[a]) < covariate_index(g.covariate_ids[b]);
      });
      Eigen::MatrixXd design(g.design.rows(), g.design.cols());
      std::vector<std::string> ids(order.size());
      for (std::size_t k = 0; k < order.size(); ++k) {
        design.col(static_cast<Eigen::Index>(k)) = g.design.col(static_cast<Eigen::Index>(order[k]));
        ids[k] = g.covariate_ids[order[k]];
      }
      g.design = std::move(design);
      g.covariate_ids = std::move(ids);
    }
  }
};

// ---------------------------------------------------------------------------
// CSV ingestion

/// Column names of the input file. Every other column is a covariate.
struct DatasetSchema {
  std::string group = "group";
  std::string time = "time";
  std::string event = "event";
  std::string subject = "subject";  ///< optional column; synthesized as "<group>:<row>" if absent
};

struct LoadedDataset {
  GroupedDataset dataset;
  std::size_t dropped_rows = 0;  ///< missing time/event or non-positive time
};

namespace detail {

inline std::optional<bool> parse_event(const std::string& cell) {
  const std::string t = csv::trim(cell);
  if (t == "1" || t == "true" || t == "TRUE") return true;
  if (t == "0" || t == "false" || t == "FALSE") return false;
  return std::nullopt;
}

}  // namespace detail

inline LoadedDataset load_dataset(const csv::Table& table, const DatasetSchema& schema = {}) {
  const auto group_col = table.column(schema.group);
  const auto time_col = table.column(schema.time);
  const auto event_col = table.column(schema.event);
  if (!group_col || !time_col || !event_col)
    throw ParseError("header must contain '" + schema.group + "', '" + schema.time + "' and '" +
                         schema.event + "' columns",
                     0);
  const auto subject_col = table.column(schema.subject);

  std::vector<std::size_t> cov_cols;
  LoadedDataset out;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == *group_col || c == *time_col || c == *event_col || (subject_col && c == *subject_col))
      continue;
    cov_cols.push_back(c);
    out.dataset.covariate_registry.push_back(table.header[c]);
  }
  const std::size_t L = cov_cols.size();

  struct Pending {
    std::vector<std::string> subjects;
    std::vector<SurvivalOutcome> outcomes;
    std::vector<std::vector<std::optional<double>>> cells;
  };
  std::map<std::string, Pending> by_group;  // lexicographic group order

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t row_index = r + 1;
    const std::string gid = csv::trim(row[*group_col]);
    if (gid.empty()) throw ParseError("missing group id", row_index);
    if (csv::is_missing(row[*time_col]) || csv::is_missing(row[*event_col])) {
      ++out.dropped_rows;
      continue;
    }
    const auto time = csv::to_double(row[*time_col]);
    if (!time) throw ParseError("non-numeric time '" + row[*time_col] + "'", row_index);
    const auto event = detail::parse_event(row[*event_col]);
    if (!event) throw ParseError("event flag must be 1/0, got '" + row[*event_col] + "'", row_index);
    if (!(*time > 0.0) || !std::isfinite(*time)) {
      ++out.dropped_rows;
      continue;
    }
    auto& pending = by_group[gid];
    std::vector<std::optional<double>> cells(L);
    for (std::size_t k = 0; k < L; ++k) {
      const auto& cell = row[cov_cols[k]];
      if (csv::is_missing(cell)) continue;
      const auto v = csv::to_double(cell);
      if (!v || !std::isfinite(*v))
        throw ParseError("non-numeric value '" + cell + "' for covariate '" +
                             out.dataset.covariate_registry[k] + "'",
                         row_index);
      cells[k] = *v;
    }
    pending.subjects.push_back(subject_col ? csv::trim(row[*subject_col])
                                           : gid + ":" + std::to_string(pending.outcomes.size() + 1));
    pending.outcomes.push_back({std::log(*time), *event});
    pending.cells.push_back(std::move(cells));
  }

  for (auto& [gid, pending] : by_group) {
    Group g;
    g.group_id = gid;
    g.subject_ids = std::move(pending.subjects);
    g.outcomes = std::move(pending.outcomes);
    std::vector<std::size_t> available;
    for (std::size_t k = 0; k < L; ++k) {
      std::size_t present = 0;
      for (const auto& cells : pending.cells) present += cells[k].has_value();
      if (present == pending.cells.size()) {
        available.push_back(k);
      } else if (present != 0) {
        throw ValidationError("covariate '" + out.dataset.covariate_registry[k] +
                              "' is partially missing in group '" + gid + "' (" +
                              std::to_string(pending.cells.size() - present) + " of " +
                              std::to_string(pending.cells.size()) + " rows)");
      }
    }
    g.design.resize(static_cast<Eigen::Index>(g.outcomes.size()),
                    static_cast<Eigen::Index>(available.size()));
    for (std::size_t c = 0; c < available.size(); ++c) {
      g.covariate_ids.push_back(out.dataset.covariate_registry[available[c]]);
      for (std::size_t j = 0; j < pending.cells.size(); ++j)
        g.design(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = *pending.cells[j][available[c]];
    }
    out.dataset.groups.push_back(std::move(g));
  }

  // Covariates available nowhere are dropped from the registry.
  std::set<std::string> used;
  for (const auto& g : out.dataset.groups) used.insert(g.covariate_ids.begin(), g.covariate_ids.end());
  std::erase_if(out.dataset.covariate_registry, [&](const std::string& c) { return !used.count(c); });

  out.dataset.validate();
  return out;
}

inline LoadedDataset load_dataset(const std::string& path, const DatasetSchema& schema = {}) {
  return load_dataset(csv::read_file(path), schema);
}

/// Writes the dataset in the input CSV format: subject, group, time, event,
/// then one column per registered covariate (blank where unavailable).
inline void write_dataset(const std::string& path, const GroupedDataset& ds, int digits = 6) {
  csv::Table t;
  t.header = {"subject", "group", "time", "event"};
  t.header.insert(t.header.end(), ds.covariate_registry.begin(), ds.covariate_registry.end());
  for (const auto& g : ds.groups) {
    std::vector<std::ptrdiff_t> col(ds.covariate_count());
    for (std::size_t k = 0; k < col.size(); ++k) col[k] = g.column_of(ds.covariate_registry[k]);
    for (std::size_t j = 0; j < g.size(); ++j) {
      csv::Row row;
      row.push_back(g.subject_ids.empty() ? g.group_id + ":" + std::to_string(j + 1) : g.subject_ids[j]);
      row.push_back(g.group_id);
      row.push_back(csv::format(g.outcomes[j].time(), digits));
      row.push_back(g.outcomes[j].event ? "1" : "0");
      for (auto c : col)
        row.push_back(c < 0 ? std::string{} : csv::format(g.design(static_cast<Eigen::Index>(j), c), digits));
      t.rows.push_back(std::move(row));
    }
  }
  csv::write_file(path, t);
}

// ---------------------------------------------------------------------------
// Standardization

enum class StandardizationScope { pooled, per_group };

inline std::string to_string(StandardizationScope s) {
  return s == StandardizationScope::pooled ? "pooled" : "per_group";
}

inline StandardizationScope parse_scope(const std::string& s) {
  if (s == "pooled") return StandardizationScope::pooled;
  if (s == "per_group") return StandardizationScope::per_group;
  throw ConfigError("unknown standardization scope '" + s + "'");
}

/// Original location/scale of every standardized column.
struct StandardizationRecord {
  struct Entry {
    std::string group_id;  ///< empty for pooled scope
    std::string covariate_id;
    double mean = 0.0;
    double sd = 1.0;
  };

  StandardizationScope scope = StandardizationScope::pooled;
  std::vector<Entry> entries;

  const Entry* find(const std::string& group_id, const std::string& covariate_id) const {
    const std::string& key_group = scope == StandardizationScope::pooled ? std::string{} : group_id;
    for (const auto& e : entries)
      if (e.group_id == key_group && e.covariate_id == covariate_id) return &e;
    return nullptr;
  }

  /// Flat key-value text: one `key<TAB>mean<TAB>sd` line per column, key is
  /// the covariate id (pooled) or `group/covariate` (per group).
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "# scope\t" << to_string(scope) << '\n';
    for (const auto& e : entries) {
      out << (e.group_id.empty() ? e.covariate_id : e.group_id + "/" + e.covariate_id) << '\t'
          << csv::format_exact(e.mean) << '\t' << csv::format_exact(e.sd) << '\n';
    }
  }

  static StandardizationRecord load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'", 0);
    StandardizationRecord rec;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      std::istringstream fields(line);
      std::string key, a, b;
      std::getline(fields, key, '\t');
      std::getline(fields, a, '\t');
      std::getline(fields, b, '\t');
      if (key == "# scope") {
        rec.scope = parse_scope(a);
        continue;
      }
      const auto mean = csv::to_double(a);
      const auto sd = csv::to_double(b);
      if (!mean || !sd) throw ParseError("malformed standardization entry", row);
      Entry e;
      e.mean = *mean;
      e.sd = *sd;
      if (rec.scope == StandardizationScope::per_group) {
        const auto slash = key.find('/');
        if (slash == std::string::npos) throw ParseError("per-group key needs 'group/covariate'", row);
        e.group_id = key.substr(0, slash);
        e.covariate_id = key.substr(slash + 1);
      } else {
        e.covariate_id = key;
      }
      rec.entries.push_back(std::move(e));
    }
    return rec;
  }
};

/// Centers and scales every covariate column to sample mean 0 and sample
/// sd 1 (n-1 denominator) within the chosen scope.
inline std::pair<GroupedDataset, StandardizationRecord> standardize(
    const GroupedDataset& ds, StandardizationScope scope = StandardizationScope::pooled) {
  GroupedDataset out = ds;
  StandardizationRecord rec;
  rec.scope = scope;

  auto moments = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{m, sd};
  };
  auto nonzero = [](double sd, double mean) { return sd > 1e-12 * std::max(1.0, std::abs(mean)); };

  if (scope == StandardizationScope::pooled) {
    for (const auto& cov : ds.covariate_registry) {
      std::vector<double> values;
      for (const auto& g : ds.groups) {
        const auto c = g.column_of(cov);
        if (c < 0) continue;
        const auto col = g.design.col(c);
        values.insert(values.end(), col.begin(), col.end());
      }
      const auto [m, sd] = moments(values);
      if (!nonzero(sd, m)) throw ValidationError("covariate '" + cov + "' has zero variance (pooled)");
      rec.entries.push_back({"", cov, m, sd});
      for (auto& g : out.groups) {
        const auto c = g.column_of(cov);
        if (c >= 0) g.design.col(c) = (g.design.col(c).array() - m) / sd;
      }
    }
  } else {
    for (auto& g : out.groups) {
      for (std::size_t k = 0; k < g.covariate_ids.size(); ++k) {
        const auto col = g.design.col(static_cast<Eigen::Index>(k));
        const auto [m, sd] = moments(std::vector<double>(col.begin(), col.end()));
        if (!nonzero(sd, m))
          throw ValidationError("covariate '" + g.covariate_ids[k] + "' has zero variance in group '" +
                                g.group_id + "'");
        rec.entries.push_back({g.group_id, g.covariate_ids[k], m, sd});
        g.design.col(static_cast<Eigen::Index>(k)) = (col.array() - m) / sd;
      }
    }
  }
  return {std::move(out), std::move(rec)};
}

/// Inverse of standardize().
inline GroupedDataset back_transform(const GroupedDataset& ds, const StandardizationRecord& rec) {
  GroupedDataset out = ds;
  for (auto& g : out.groups) {
    for (std::size_t k = 0; k < g.covariate_ids.size(); ++k) {
      const auto* e = rec.find(g.group_id, g.covariate_ids[k]);
      if (!e) throw ValidationError("no standardization entry for '" + g.covariate_ids[k] + "'");
      auto col = g.design.col(static_cast<Eigen::Index>(k));
      col = col.array() * e->sd + e->mean;
    }
  }
  return out;
}

}  // namespace hierslab
