#include "gformula/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "gformula/error.hpp"

namespace gformula {

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * rad;
  const double dlon = (lon2 - lon1) * rad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

std::string_view to_string(Linkage linkage) noexcept {
  return linkage == Linkage::single ? "single" : "complete";
}

Linkage parse_linkage(std::string_view text) {
  if (text == "single") return Linkage::single;
  if (text == "complete") return Linkage::complete;
  throw Error(ErrorKind::config, "unknown linkage '" + std::string(text) + "'");
}

void validate_coordinates(std::span<const HouseholdPoint> points) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0))
      throw Error(ErrorKind::data, "household '" + p.household_id + "' (point " +
                                       std::to_string(i + 1) + "): coordinates out of range");
  }
}

int cluster_count(std::span<const int> assignment) {
  int k = 0;
  for (int a : assignment) k = std::max(k, a + 1);
  return k;
}

namespace {

std::vector<int> relabel_by_first_appearance(const std::vector<std::size_t>& root) {
  std::vector<int> label(root.size(), -1);
  std::vector<int> out(root.size());
  int next = 0;
  for (std::size_t i = 0; i < root.size(); ++i) {
    if (label[root[i]] < 0) label[root[i]] = next++;
    out[i] = label[root[i]];
  }
  return out;
}

// The single-linkage dendrogram cut at h is the set of connected components
// of the graph joining points at distance <= h.
std::vector<int> single_linkage_cut(std::span<const HouseholdPoint> points, double threshold) {
  const std::size_t n = points.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t a = find(i), b = find(j);
      if (a == b) continue;
      if (haversine_km(points[i].lat, points[i].lon, points[j].lat, points[j].lon) <= threshold)
        parent[std::max(a, b)] = std::min(a, b);
    }
  std::vector<std::size_t> root(n);
  for (std::size_t i = 0; i < n; ++i) root[i] = find(i);
  return relabel_by_first_appearance(root);
}

std::vector<int> complete_linkage_cut(std::span<const HouseholdPoint> points, double threshold) {
  const std::size_t n = points.size();
  // Rank of each point's id, for tie-breaking.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a].household_id < points[b].household_id;
  });
  std::vector<std::size_t> key(n);
  for (std::size_t r = 0; r < n; ++r) key[order[r]] = r;

  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d[i * n + j] = d[j * n + i] =
          haversine_km(points[i].lat, points[i].lon, points[j].lat, points[j].lon);

  std::vector<bool> active(n, true);
  std::vector<std::size_t> owner(n);
  std::iota(owner.begin(), owner.end(), std::size_t{0});

  auto better = [&](double h, std::size_t a, std::size_t b, double best_h, std::size_t ba,
                    std::size_t bb) {
    if (h != best_h) return h < best_h;
    const auto lo = std::minmax(key[a], key[b]);
    const auto blo = std::minmax(key[ba], key[bb]);
    return lo < blo;
  };

  // Nearest active neighbour of every active row. Complete-linkage heights
  // only grow under merging, so a row's cache stays valid unless it pointed
  // at one of the merged clusters.
  std::vector<std::size_t> nn(n, n);
  auto refresh = [&](std::size_t i) {
    nn[i] = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      if (nn[i] == n || better(d[i * n + j], i, j, d[i * n + nn[i]], i, nn[i])) nn[i] = j;
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  while (true) {
    std::size_t ba = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || nn[i] == n) continue;
      if (ba == n || better(d[i * n + nn[i]], i, nn[i], d[ba * n + nn[ba]], ba, nn[ba])) ba = i;
    }
    if (ba == n || d[ba * n + nn[ba]] > threshold) break;
    std::size_t bb = nn[ba];
    if (key[bb] < key[ba]) std::swap(ba, bb);
    // Merge bb into ba; complete linkage keeps the larger distance.
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == ba || k == bb) continue;
      const double h = std::max(d[ba * n + k], d[bb * n + k]);
      d[ba * n + k] = d[k * n + ba] = h;
    }
    key[ba] = std::min(key[ba], key[bb]);
    active[bb] = false;
    for (std::size_t k = 0; k < n; ++k)
      if (owner[k] == bb) owner[k] = ba;
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == ba) continue;
      if (nn[k] == ba || nn[k] == bb)
        refresh(k);
      else if (better(d[k * n + ba], k, ba, d[k * n + nn[k]], k, nn[k]))
        nn[k] = ba;
    }
    refresh(ba);
  }
  return relabel_by_first_appearance(owner);
}

}  // namespace

std::vector<int> cluster_households(std::span<const HouseholdPoint> points, double threshold_km,
                                    Linkage linkage) {
  if (points.empty()) throw Error(ErrorKind::data, "clustering needs at least one household");
  if (!(threshold_km > 0.0) || !std::isfinite(threshold_km))
    throw Error(ErrorKind::config, "cluster threshold must be a positive number of km");
  validate_coordinates(points);
  return linkage == Linkage::single ? single_linkage_cut(points, threshold_km)
                                    : complete_linkage_cut(points, threshold_km);
}

}  // namespace gformula
