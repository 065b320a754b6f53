#include "gformula/types.hpp"

#include <cmath>

#include "gformula/error.hpp"

namespace gformula {
namespace {

constexpr double kCountTolerance = 1e-9;

bool is_integral(double value) {
  return std::abs(value - std::round(value)) <= kCountTolerance;
}

std::string label(const ClusterRecord& record) {
  return record.id.empty() ? std::string("<unnamed>") : record.id;
}

}  // namespace

std::string_view to_string(OutcomeDefinition def) noexcept {
  switch (def) {
    case OutcomeDefinition::overall: return "overall";
    case OutcomeDefinition::when_treated: return "when_treated";
    case OutcomeDefinition::when_untreated: return "when_untreated";
  }
  return "overall";
}

OutcomeDefinition parse_outcome_definition(std::string_view text) {
  if (text == "overall") return OutcomeDefinition::overall;
  if (text == "when_treated" || text == "treated") return OutcomeDefinition::when_treated;
  if (text == "when_untreated" || text == "untreated") return OutcomeDefinition::when_untreated;
  throw Error(ErrorKind::config, "unknown outcome definition '" + std::string(text) + "'");
}

int outcome_denominator(OutcomeDefinition def, int n, double s) {
  const int treated = static_cast<int>(std::lround(s * n));
  switch (def) {
    case OutcomeDefinition::overall: return n;
    case OutcomeDefinition::when_treated: return treated;
    case OutcomeDefinition::when_untreated: return n - treated;
  }
  return n;
}

int ClusterRecord::treated() const { return static_cast<int>(std::lround(s * n)); }

int ClusterRecord::treated_stratum2() const {
  if (!has_strata()) return 0;
  return static_cast<int>(std::lround(*s2 * *n2));
}

void validate_record(const ClusterRecord& record) {
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::data, "cluster " + label(record) + ": " + why);
  };
  if (record.n <= 0) fail("cluster size must be positive");
  if (!(record.s >= 0.0 && record.s <= 1.0)) fail("treated proportion outside [0,1]");
  if (!is_integral(record.s * record.n)) fail("treated proportion times size is not an integer");
  if (!(record.y >= 0.0 && record.y <= 1.0)) fail("outcome proportion outside [0,1]");
  if (record.y_denominator < 0 || record.y_denominator > record.n)
    fail("outcome denominator outside [0, n]");
  if (record.y_denominator == 0 && record.y != 0.0)
    fail("outcome proportion must be 0 when no member contributes");
  for (double c : record.covariates)
    if (!std::isfinite(c)) fail("non-finite covariate");
  if (record.s2.has_value() != record.n2.has_value())
    fail("s2 and n2 must be given together");
  if (record.has_strata()) {
    if (*record.n2 < 0) fail("second-stratum size must be nonnegative");
    if (!(*record.s2 >= 0.0 && *record.s2 <= 1.0)) fail("s2 outside [0,1]");
    if (!is_integral(*record.s2 * *record.n2)) fail("s2 times n2 is not an integer");
    if (*record.n2 == 0 && *record.s2 != 0.0) fail("s2 must be 0 when n2 is 0");
  }
}

std::size_t validate_dataset(std::span<const ClusterRecord> data) {
  if (data.empty()) throw Error(ErrorKind::data, "dataset is empty");
  const std::size_t dim = data.front().covariates.size();
  for (const auto& record : data) {
    validate_record(record);
    if (record.covariates.size() != dim)
      throw Error(ErrorKind::data, "cluster " + label(record) +
                                       ": covariate dimension differs from the first cluster");
  }
  return dim;
}

void require_strata(std::span<const ClusterRecord> data) {
  for (const auto& record : data)
    if (!record.has_strata())
      throw Error(ErrorKind::schema, "cluster " + label(record) + " lacks s2/n2 fields");
}

}  // namespace gformula
