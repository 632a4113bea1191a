#include "wifiloc/alignment.hpp"

#include <algorithm>
#include <string>

namespace wifiloc::align {

void detail::check_sequence(std::span<const double> s) {
  if (s.empty()) throw DataError("empty sequence");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i])) throw DataError("non-finite timestamp at index " + std::to_string(i));
    if (i > 0 && !(s[i] > s[i - 1]))
      throw DataError("timestamps not strictly increasing at index " + std::to_string(i));
  }
}

std::vector<PathStep> backtrack(const DtwCostMatrix& c) {
  std::vector<PathStep> path;
  std::size_t i = c.n();
  std::size_t j = c.m();
  path.reserve(i + j);
  path.emplace_back(i, j);
  while (i > 1 || j > 1) {
    if (i == 1) {
      --j;
    } else if (j == 1) {
      --i;
    } else {
      const double diag = c.at(i - 1, j - 1);
      const double up = c.at(i - 1, j);
      const double left = c.at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    path.emplace_back(i, j);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

AlignmentResult match_scans(std::span<const WifiScan> scans, std::span<const OdometrySample> odometry) {
  std::vector<double> scan_t(scans.size());
  std::vector<double> odom_t(odometry.size());
  std::transform(scans.begin(), scans.end(), scan_t.begin(), [](const WifiScan& s) { return s.t; });
  std::transform(odometry.begin(), odometry.end(), odom_t.begin(),
                 [](const OdometrySample& o) { return o.t; });

  const auto cost = dtw(scan_t, odom_t);
  AlignmentResult result;
  result.total_cost = cost.total_cost();
  result.path = backtrack(cost);

  result.matches.reserve(scans.size());
  const double first = odom_t.front();
  const double last = odom_t.back();
  std::size_t k = 0;
  for (std::size_t s = 0; s < scans.size(); ++s) {
    const double ts = scan_t[s];
    std::size_t best_j = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    // The path visits scan rows in order, so partners of scan s are contiguous.
    for (; k < result.path.size() && result.path[k].first == s + 1; ++k) {
      const std::size_t j = result.path[k].second - 1;
      const double gap = std::abs(ts - odom_t[j]);
      if (gap < best_gap) {
        best_gap = gap;
        best_j = j;
      }
    }
    result.matches.push_back({s, best_j, ts < first || ts > last});
  }
  return result;
}

}  // namespace wifiloc::align
