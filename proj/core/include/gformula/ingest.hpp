#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gformula/csv.hpp"
#include "gformula/geo.hpp"
#include "gformula/types.hpp"

namespace gformula {

// Column names of the individual-level table (one row per person).
struct IndividualSchema {
  std::string household_id = "household_id";
  std::string lat = "lat";
  std::string lon = "lon";
  std::string stratum = "stratum";  // "child" or "other"
  std::string treated = "treated";  // 0/1
  std::string outcome = "outcome";  // 0/1, empty when not measured
};

// Groups rows into households in order of first appearance. Every row of a
// household must repeat the same coordinates.
std::vector<HouseholdPoint> read_households(const CsvTable& table,
                                            const std::vector<std::string>& covariates,
                                            const IndividualSchema& schema = {});

// Cluster-level table with columns id, n, s, y, y_denominator, the named
// covariates, and s2, n2 when strata is set.
Dataset read_cluster_table(const CsvTable& table, const std::vector<std::string>& covariates,
                           bool strata);
std::string cluster_table_csv(std::span<const ClusterRecord> data,
                              const std::vector<std::string>& covariates);

struct AggregationOptions {
  OutcomeDefinition outcome_def = OutcomeDefinition::overall;
  bool strata = false;
};

struct AggregationResult {
  Dataset data;
  std::size_t dropped = 0;  // clusters without an outcome-eligible member
};

// Children with a measured outcome form n, s and y; the other members form
// s2 and n2 in strata mode. Covariates are means over the eligible members.
// Throws Error(data) when no cluster has an eligible member.
AggregationResult aggregate_clusters(std::span<const HouseholdPoint> points,
                                     std::span<const int> assignment,
                                     const AggregationOptions& options);

}  // namespace gformula
