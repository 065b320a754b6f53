#include "gformula/ingest.hpp"

#include <algorithm>
#include <unordered_map>

#include "gformula/error.hpp"

namespace gformula {
namespace {

int indicator(const CsvTable& t, std::size_t row, std::size_t col) {
  const int v = t.integer(row, col);
  if (v != 0 && v != 1)
    throw Error(ErrorKind::data, t.source() + " line " + std::to_string(t.line(row)) + ": column '" +
                                     t.header()[col] + "' must be 0 or 1");
  return v;
}

}  // namespace

std::vector<HouseholdPoint> read_households(const CsvTable& table,
                                            const std::vector<std::string>& covariates,
                                            const IndividualSchema& schema) {
  const std::size_t c_id = table.require_column(schema.household_id);
  const std::size_t c_lat = table.require_column(schema.lat);
  const std::size_t c_lon = table.require_column(schema.lon);
  const std::size_t c_stratum = table.require_column(schema.stratum);
  const std::size_t c_treated = table.require_column(schema.treated);
  const std::size_t c_outcome = table.require_column(schema.outcome);
  std::vector<std::size_t> c_cov;
  for (const auto& name : covariates) c_cov.push_back(table.require_column(name));

  std::vector<HouseholdPoint> points;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < table.size(); ++r) {
    const std::string where = table.source() + " line " + std::to_string(table.line(r));
    const std::string& id = table.cell(r, c_id);
    if (id.empty()) throw Error(ErrorKind::data, where + ": empty household id");
    const double lat = table.number(r, c_lat);
    const double lon = table.number(r, c_lon);
    if (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0)
      throw Error(ErrorKind::data, where + ": coordinates out of range");

    Member m;
    const std::string& tag = table.cell(r, c_stratum);
    if (tag == "child")
      m.child = true;
    else if (tag == "other")
      m.child = false;
    else
      throw Error(ErrorKind::data, where + ": stratum must be 'child' or 'other', got '" + tag + "'");
    m.treated = indicator(table, r, c_treated);
    if (!table.cell(r, c_outcome).empty() && table.cell(r, c_outcome) != "NA")
      m.outcome = indicator(table, r, c_outcome);
    for (std::size_t c : c_cov) {
      const auto v = table.optional_number(r, c);
      m.covariates.push_back(v.value_or(0.0));
      m.covariate_present.push_back(v.has_value());
    }

    auto [it, inserted] = index.try_emplace(id, points.size());
    if (inserted) {
      points.push_back({id, lat, lon, {}});
    } else if (points[it->second].lat != lat || points[it->second].lon != lon) {
      throw Error(ErrorKind::data, where + ": household '" + id + "' has inconsistent coordinates");
    }
    points[it->second].members.push_back(std::move(m));
  }
  if (points.empty()) throw Error(ErrorKind::data, table.source() + ": no individuals");
  return points;
}

Dataset read_cluster_table(const CsvTable& table, const std::vector<std::string>& covariates,
                           bool strata) {
  const std::size_t c_id = table.require_column("id");
  const std::size_t c_n = table.require_column("n");
  const std::size_t c_s = table.require_column("s");
  const std::size_t c_y = table.require_column("y");
  const std::size_t c_den = table.require_column("y_denominator");
  std::vector<std::size_t> c_cov;
  for (const auto& name : covariates) c_cov.push_back(table.require_column(name));
  std::size_t c_s2 = 0, c_n2 = 0;
  if (strata) {
    c_s2 = table.require_column("s2");
    c_n2 = table.require_column("n2");
  }

  Dataset data;
  data.reserve(table.size());
  for (std::size_t r = 0; r < table.size(); ++r) {
    ClusterRecord rec;
    rec.id = table.cell(r, c_id);
    rec.n = table.integer(r, c_n);
    rec.s = table.number(r, c_s);
    rec.y = table.number(r, c_y);
    rec.y_denominator = table.integer(r, c_den);
    for (std::size_t c : c_cov) rec.covariates.push_back(table.number(r, c));
    if (strata) {
      rec.s2 = table.number(r, c_s2);
      rec.n2 = table.integer(r, c_n2);
    }
    try {
      validate_record(rec);
    } catch (const Error& e) {
      throw Error(e.kind(), table.source() + " line " + std::to_string(table.line(r)) + ": " + e.what());
    }
    data.push_back(std::move(rec));
  }
  if (data.empty()) throw Error(ErrorKind::data, table.source() + ": no clusters");
  return data;
}

std::string cluster_table_csv(std::span<const ClusterRecord> data,
                              const std::vector<std::string>& covariates) {
  const bool strata = !data.empty() && data.front().has_strata();
  std::vector<std::string> header{"id", "n", "s", "y", "y_denominator"};
  header.insert(header.end(), covariates.begin(), covariates.end());
  if (strata) {
    header.push_back("s2");
    header.push_back("n2");
  }
  CsvWriter out(header);
  for (const auto& r : data) {
    if (r.covariates.size() != covariates.size())
      throw Error(ErrorKind::state, "cluster " + r.id + ": covariate count does not match names");
    std::vector<std::string> row{r.id, std::to_string(r.n), format_double(r.s), format_double(r.y),
                                 std::to_string(r.y_denominator)};
    for (double v : r.covariates) row.push_back(format_double(v));
    if (strata) {
      row.push_back(format_double(r.s2.value_or(0.0)));
      row.push_back(std::to_string(r.n2.value_or(0)));
    }
    out.row(row);
  }
  return out.str();
}

AggregationResult aggregate_clusters(std::span<const HouseholdPoint> points,
                                     std::span<const int> assignment,
                                     const AggregationOptions& options) {
  if (assignment.size() != points.size())
    throw Error(ErrorKind::state, "assignment does not cover every household");
  const int k = cluster_count(assignment);
  std::vector<std::vector<std::size_t>> members_of(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (assignment[i] < 0) throw Error(ErrorKind::state, "negative cluster label");
    members_of[static_cast<std::size_t>(assignment[i])].push_back(i);
  }

  AggregationResult result;
  for (const auto& households : members_of) {
    if (households.empty()) continue;
    std::string id = points[households.front()].household_id;
    int n = 0, treated = 0, n2 = 0, treated2 = 0;
    int events_treated = 0, events_untreated = 0;
    std::vector<double> sums;
    for (std::size_t h : households) {
      id = std::min(id, points[h].household_id);
      for (const Member& m : points[h].members) {
        if (!m.child) {
          ++n2;
          treated2 += m.treated;
          continue;
        }
        if (!m.outcome) continue;
        ++n;
        treated += m.treated;
        (m.treated ? events_treated : events_untreated) += *m.outcome;
        if (sums.empty()) sums.assign(m.covariates.size(), 0.0);
        for (std::size_t c = 0; c < m.covariates.size(); ++c) {
          if (!m.covariate_present[c])
            throw Error(ErrorKind::data, "household '" + points[h].household_id +
                                             "': outcome-eligible member lacks covariate " +
                                             std::to_string(c + 1));
          sums[c] += m.covariates[c];
        }
      }
    }
    if (n == 0) {
      ++result.dropped;
      continue;
    }
    ClusterRecord r;
    r.id = id;
    r.n = n;
    r.s = static_cast<double>(treated) / n;
    for (double v : sums) r.covariates.push_back(v / n);
    int events = 0;
    switch (options.outcome_def) {
      case OutcomeDefinition::overall: events = events_treated + events_untreated; break;
      case OutcomeDefinition::when_treated: events = events_treated; break;
      case OutcomeDefinition::when_untreated: events = events_untreated; break;
    }
    r.y_denominator = outcome_denominator(options.outcome_def, n, r.s);
    r.y = r.y_denominator > 0 ? static_cast<double>(events) / r.y_denominator : 0.0;
    if (options.strata) {
      r.n2 = n2;
      r.s2 = n2 > 0 ? static_cast<double>(treated2) / n2 : 0.0;
    }
    result.data.push_back(std::move(r));
  }
  if (result.data.empty())
    throw Error(ErrorKind::data, "no cluster has an outcome-eligible member (" +
                                     std::to_string(result.dropped) + " dropped)");
  return result;
}

}  // namespace gformula
