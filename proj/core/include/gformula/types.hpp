#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gformula {

// How a cluster's outcome proportion is formed from its members.
enum class OutcomeDefinition {
  overall,         // all outcome-eligible members
  when_treated,    // treated members only
  when_untreated,  // untreated members only
};

std::string_view to_string(OutcomeDefinition def) noexcept;
OutcomeDefinition parse_outcome_definition(std::string_view text);

// Number of members contributing to the outcome proportion of a cluster of
// size n with treated proportion s.
int outcome_denominator(OutcomeDefinition def, int n, double s);

// Observed data for one cluster.
struct ClusterRecord {
  std::string id;
  int n = 0;                        // outcome-eligible members
  std::vector<double> covariates;   // cluster-level covariates
  double s = 0.0;                   // treated proportion
  double y = 0.0;                   // outcome proportion
  int y_denominator = 0;            // members behind y
  std::optional<double> s2;         // second-stratum treated proportion
  std::optional<int> n2;            // second-stratum size

  int treated() const;              // s * n, rounded
  int treated_stratum2() const;     // s2 * n2, rounded; 0 when absent
  double events() const { return y * y_denominator; }
  bool has_strata() const { return s2.has_value() && n2.has_value(); }
};

using Dataset = std::vector<ClusterRecord>;

// Throws Error(data) when a record breaks a field invariant.
void validate_record(const ClusterRecord& record);

// Validates every record and the common covariate dimension; returns it.
std::size_t validate_dataset(std::span<const ClusterRecord> data);

// Throws Error(schema) unless every record carries s2 and n2.
void require_strata(std::span<const ClusterRecord> data);

}  // namespace gformula
