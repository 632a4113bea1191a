#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "wifiloc/core.hpp"

namespace wifiloc::align {

/// Accumulated DTW costs, (n+1) x (m+1), row-major. Row 0 and column 0 are
/// the padding border: cell (0,0) is 0, the rest of the border is +inf.
class DtwCostMatrix {
 public:
  DtwCostMatrix(std::size_t n, std::size_t m)
      : n_(n), m_(m), cells_((n + 1) * (m + 1), std::numeric_limits<double>::infinity()) {
    at(0, 0) = 0.0;
  }

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  double& at(std::size_t i, std::size_t j) { return cells_[i * (m_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return cells_[i * (m_ + 1) + j]; }
  double total_cost() const { return at(n_, m_); }

 private:
  std::size_t n_;
  std::size_t m_;
  std::vector<double> cells_;
};

using PathStep = std::pair<std::size_t, std::size_t>;  // 1-based (i, j)

struct ScanMatch {
  std::size_t scan_index = 0;
  std::size_t odometry_index = 0;
  /// Scan timestamp lies outside the odometry time span.
  bool outside_span = false;

  friend bool operator==(const ScanMatch&, const ScanMatch&) = default;
};

struct AlignmentResult {
  double total_cost = 0.0;
  std::vector<PathStep> path;
  std::vector<ScanMatch> matches;
};

struct AbsoluteDifference {
  double operator()(double a, double b) const { return std::abs(a - b); }
};

namespace detail {
void check_sequence(std::span<const double> s);
}

/// Full-matrix dynamic time warping of `a` against `b`.
template <typename LocalCost>
DtwCostMatrix dtw(std::span<const double> a, std::span<const double> b, LocalCost local_cost) {
  detail::check_sequence(a);
  detail::check_sequence(b);
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  DtwCostMatrix c(n, m);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const double best = std::min({c.at(i - 1, j), c.at(i, j - 1), c.at(i - 1, j - 1)});
      c.at(i, j) = local_cost(a[i - 1], b[j - 1]) + best;
    }
  }
  return c;
}

inline DtwCostMatrix dtw(std::span<const double> a, std::span<const double> b) {
  return dtw(a, b, AbsoluteDifference{});
}

/// Optimal warping path from (1,1) to (n,m). Walks back from (n,m) taking the
/// cheapest predecessor; ties prefer diagonal, then (i-1,j), then (i,j-1).
std::vector<PathStep> backtrack(const DtwCostMatrix& c);

/// Aligns scan timestamps against odometry timestamps and pairs every scan
/// with the path partner nearest in time (earliest on ties).
AlignmentResult match_scans(std::span<const WifiScan> scans, std::span<const OdometrySample> odometry);

}  // namespace wifiloc::align
