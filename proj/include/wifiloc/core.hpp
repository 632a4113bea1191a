#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wifiloc {

/// Raised for malformed input data: bad files, schema violations, violated preconditions.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a numeric computation diverges (non-finite loss, parameters).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, [-pi, pi)

  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

struct OdometrySample {
  double t = 0.0;
  Pose2D pose;

  friend bool operator==(const OdometrySample&, const OdometrySample&) = default;
};

/// Access point identifier: a MAC address in lowercase colon-separated form.
class ApId {
 public:
  /// Accepts "aa:bb:cc:dd:ee:ff" in either case; stores lowercase.
  static ApId parse(std::string_view text);
  static std::optional<ApId> try_parse(std::string_view text);
  /// Builds an id from the low 48 bits of `value`.
  static ApId from_u64(std::uint64_t value);

  const std::string& str() const { return value_; }

  friend auto operator<=>(const ApId&, const ApId&) = default;
  friend bool operator==(const ApId&, const ApId&) = default;

 private:
  explicit ApId(std::string v) : value_(std::move(v)) {}
  std::string value_;
};

struct WifiScan {
  double t = 0.0;
  std::map<ApId, double> readings;  // dBm

  friend bool operator==(const WifiScan&, const WifiScan&) = default;
};

struct FingerprintRow {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  std::vector<std::optional<double>> rssi;  // one slot per dataset AP column

  friend bool operator==(const FingerprintRow&, const FingerprintRow&) = default;
};

struct FingerprintDataset {
  std::vector<ApId> ap_columns;
  std::vector<FingerprintRow> rows;

  /// Throws DataError if columns repeat, a row has the wrong width or
  /// timestamps decrease.
  void validate() const;
  /// Index of `ap` in ap_columns, if present.
  std::optional<std::size_t> column_of(const ApId& ap) const;

  friend bool operator==(const FingerprintDataset&, const FingerprintDataset&) = default;
};

/// Canonical column order: lexicographic by MAC string.
std::vector<ApId> canonical_ap_order(const std::set<ApId>& ids);

}  // namespace wifiloc
