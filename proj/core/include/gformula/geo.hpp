#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gformula {

inline constexpr double kEarthRadiusKm = 6371.0088;  // mean radius

// Great-circle distance in km between two (lat, lon) points in degrees.
double haversine_km(double lat1, double lon1, double lat2, double lon2);

struct Member {
  bool child = true;             // stratum 1 (outcome eligible) vs other
  int treated = 0;               // 0 or 1
  std::optional<int> outcome;    // 0 or 1; missing for members not measured
  std::vector<double> covariates;
  std::vector<bool> covariate_present;
};

struct HouseholdPoint {
  std::string household_id;
  double lat = 0.0;
  double lon = 0.0;
  std::vector<Member> members;
};

enum class Linkage {
  single,    // merge while the closest pair across clusters is within threshold
  complete,  // merge while every pair in the merged cluster is within threshold
};

std::string_view to_string(Linkage linkage) noexcept;
Linkage parse_linkage(std::string_view text);

// Throws Error(data) naming the point when lat/lon is out of range.
void validate_coordinates(std::span<const HouseholdPoint> points);

// Agglomerative clustering cut at threshold_km: merges stop once the next
// merge height would exceed the threshold. Labels are 0..k-1 numbered by
// first appearance in the input. Equal-height merges are resolved by the
// lexicographically smallest household ids of the clusters involved.
std::vector<int> cluster_households(std::span<const HouseholdPoint> points, double threshold_km,
                                    Linkage linkage = Linkage::single);

int cluster_count(std::span<const int> assignment);

}  // namespace gformula
