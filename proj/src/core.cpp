#include "wifiloc/core.hpp"

#include <algorithm>
#include <cmath>

namespace wifiloc {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::optional<ApId> ApId::try_parse(std::string_view text) {
  if (text.size() != 17) return std::nullopt;
  std::string out(17, ':');
  for (std::size_t i = 0; i < 17; ++i) {
    const char c = text[i];
    if (i % 3 == 2) {
      if (c != ':') return std::nullopt;
      continue;
    }
    const int v = hex_value(c);
    if (v < 0) return std::nullopt;
    out[i] = "0123456789abcdef"[v];
  }
  return ApId(std::move(out));
}

ApId ApId::parse(std::string_view text) {
  auto id = try_parse(text);
  if (!id) throw DataError("invalid AP id '" + std::string(text) + "'");
  return *id;
}

ApId ApId::from_u64(std::uint64_t value) {
  std::string out(17, ':');
  for (int octet = 0; octet < 6; ++octet) {
    const auto byte = (value >> (8 * (5 - octet))) & 0xffu;
    out[octet * 3] = "0123456789abcdef"[byte >> 4];
    out[octet * 3 + 1] = "0123456789abcdef"[byte & 0xfu];
  }
  return ApId(std::move(out));
}

std::vector<ApId> canonical_ap_order(const std::set<ApId>& ids) {
  if (ids.empty()) throw DataError("no access points");
  // std::set<ApId> already iterates in lexicographic string order.
  return {ids.begin(), ids.end()};
}

void FingerprintDataset::validate() const {
  std::set<ApId> seen;
  for (const auto& ap : ap_columns) {
    if (!seen.insert(ap).second) throw DataError("duplicate AP column " + ap.str());
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.rssi.size() != ap_columns.size())
      throw DataError("row " + std::to_string(r) + " has " + std::to_string(row.rssi.size()) +
                      " RSSI slots, expected " + std::to_string(ap_columns.size()));
    if (!std::isfinite(row.t) || !std::isfinite(row.x) || !std::isfinite(row.y))
      throw DataError("row " + std::to_string(r) + " has a non-finite coordinate");
    for (const auto& v : row.rssi) {
      if (v && !std::isfinite(*v)) throw DataError("row " + std::to_string(r) + " has a non-finite RSSI");
    }
    if (r > 0 && row.t < rows[r - 1].t)
      throw DataError("row " + std::to_string(r) + " timestamp decreases");
  }
}

std::optional<std::size_t> FingerprintDataset::column_of(const ApId& ap) const {
  const auto it = std::find(ap_columns.begin(), ap_columns.end(), ap);
  if (it == ap_columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ap_columns.begin());
}

}  // namespace wifiloc
