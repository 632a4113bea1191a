#include "wifiloc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace wifiloc::io {

using nlohmann::json;

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

[[noreturn]] void fail_at(std::size_t line_no, const std::string& what) {
  throw DataError("line " + std::to_string(line_no) + ": " + what);
}

double finite_field(std::string_view text, std::size_t line_no, const char* name) {
  const auto v = parse_double(text);
  if (!v || !std::isfinite(*v)) fail_at(line_no, std::string("non-numeric ") + name + " '" + std::string(text) + "'");
  return *v;
}

json scan_to_json(const WifiScan& scan) {
  json rssi = json::object();
  for (const auto& [ap, v] : scan.readings) rssi[ap.str()] = v;
  return json{{"t", scan.t}, {"rssi", std::move(rssi)}};
}

WifiScan scan_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("t") || !j.contains("rssi"))
    throw DataError(where + ": expected object with \"t\" and \"rssi\"");
  if (!j["t"].is_number()) throw DataError(where + ": \"t\" must be a number");
  if (!j["rssi"].is_object()) throw DataError(where + ": \"rssi\" must be an object");
  WifiScan scan;
  scan.t = j["t"].get<double>();
  if (!std::isfinite(scan.t)) throw DataError(where + ": non-finite timestamp");
  for (const auto& [key, value] : j["rssi"].items()) {
    const auto ap = ApId::try_parse(key);
    if (!ap) throw DataError(where + ": invalid AP id '" + key + "'");
    if (!value.is_number()) throw DataError(where + ": RSSI for " + key + " must be a number");
    const double v = value.get<double>();
    if (!std::isfinite(v)) throw DataError(where + ": non-finite RSSI for " + key);
    scan.readings.emplace(*ap, v);
  }
  return scan;
}

}  // namespace

std::string format_double(double value, int min_decimals) {
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  if (res.ec != std::errc{}) throw DataError("cannot format number");
  std::string s(buf, res.ptr);
  if (min_decimals <= 0) return s;
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    s.push_back('.');
    dot = s.size() - 1;
  }
  const auto decimals = static_cast<int>(s.size() - dot - 1);
  if (decimals < min_decimals) s.append(static_cast<std::size_t>(min_decimals - decimals), '0');
  return s;
}

std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  // from_chars rejects a leading '+'; accept it for hand-written files.
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

void write_fingerprint_csv(const FingerprintDataset& ds, std::ostream& out) {
  ds.validate();
  std::string buf = "timestamp,x_pos,y_pos";
  for (const auto& ap : ds.ap_columns) {
    buf += ',';
    buf += ap.str();
  }
  buf += '\n';
  for (const auto& row : ds.rows) {
    buf += format_double(row.t, 4);
    buf += ',';
    buf += format_double(row.x, 4);
    buf += ',';
    buf += format_double(row.y, 4);
    for (const auto& v : row.rssi) {
      buf += ',';
      buf += v ? format_double(*v, 1) : std::string("NaN");
    }
    buf += '\n';
  }
  out << buf;
}

FingerprintDataset read_fingerprint_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("line 1: missing header");
  const auto header = split_commas(strip_cr(line));
  if (header.size() < 3 || header[0] != "timestamp" || header[1] != "x_pos" || header[2] != "y_pos")
    fail_at(1, "malformed header, expected 'timestamp,x_pos,y_pos,...'");
  FingerprintDataset ds;
  std::set<ApId> seen;
  for (std::size_t c = 3; c < header.size(); ++c) {
    const auto ap = ApId::try_parse(header[c]);
    if (!ap) fail_at(1, "malformed header, bad AP column '" + std::string(header[c]) + "'");
    if (!seen.insert(*ap).second) fail_at(1, "duplicate AP column " + ap->str());
    ds.ap_columns.push_back(*ap);
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = strip_cr(line);
    if (text.empty()) continue;
    const auto fields = split_commas(text);
    if (fields.size() != header.size())
      fail_at(line_no, "ragged row: " + std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(header.size()));
    FingerprintRow row;
    row.t = finite_field(fields[0], line_no, "timestamp");
    row.x = finite_field(fields[1], line_no, "x_pos");
    row.y = finite_field(fields[2], line_no, "y_pos");
    row.rssi.reserve(ds.ap_columns.size());
    for (std::size_t c = 3; c < fields.size(); ++c) {
      if (fields[c] == "NaN") {
        row.rssi.emplace_back();
      } else {
        row.rssi.emplace_back(finite_field(fields[c], line_no, "RSSI"));
      }
    }
    if (!ds.rows.empty() && row.t < ds.rows.back().t) fail_at(line_no, "timestamp decreases");
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

void write_scan_log(const std::vector<WifiScan>& scans, std::ostream& out) {
  for (const auto& s : scans) out << scan_to_json(s).dump() << '\n';
}

std::vector<WifiScan> read_scan_log(std::istream& in) {
  std::vector<WifiScan> scans;
  std::string line;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    if (strip_cr(line).empty()) continue;
    const std::string where = "scan record " + std::to_string(record);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": " + e.what());
    }
    scans.push_back(scan_from_json(j, where));
    ++record;
  }
  return scans;
}

void write_odometry_csv(const std::vector<OdometrySample>& samples, std::ostream& out) {
  std::string buf = "t,x,y,theta\n";
  for (const auto& s : samples) {
    buf += format_double(s.t, 4) + ',' + format_double(s.pose.x, 4) + ',' + format_double(s.pose.y, 4) + ',' +
           format_double(s.pose.heading, 4) + '\n';
  }
  out << buf;
}

std::vector<OdometrySample> read_odometry_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "t,x,y,theta") fail_at(1, "expected header 't,x,y,theta'");
  std::vector<OdometrySample> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = strip_cr(line);
    if (text.empty()) continue;
    const auto f = split_commas(text);
    if (f.size() != 4) fail_at(line_no, "ragged row: expected 4 fields");
    out.push_back({finite_field(f[0], line_no, "t"),
                   {finite_field(f[1], line_no, "x"), finite_field(f[2], line_no, "y"),
                    finite_field(f[3], line_no, "theta")}});
  }
  return out;
}

void write_grid_truth(const std::vector<sim::GridObservation>& obs, std::ostream& out) {
  json arr = json::array();
  for (const auto& o : obs) arr.push_back(json{{"x", o.x}, {"y", o.y}, {"scan", scan_to_json(o.scan)}});
  out << arr.dump(2) << '\n';
}

std::vector<sim::GridObservation> read_grid_truth(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("grid truth: ") + e.what());
  }
  if (!doc.is_array()) throw DataError("grid truth: top level must be an array");
  std::vector<sim::GridObservation> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    const std::string where = "grid record " + std::to_string(i);
    if (!item.is_object() || !item.contains("x") || !item.contains("y") || !item.contains("scan"))
      throw DataError(where + ": expected object with \"x\", \"y\" and \"scan\"");
    if (!item["x"].is_number() || !item["y"].is_number()) throw DataError(where + ": x/y must be numbers");
    out.push_back({item["x"].get<double>(), item["y"].get<double>(), scan_from_json(item["scan"], where)});
  }
  return out;
}

void write_heatmap_csv(const HeatmapGrid& grid, std::ostream& out) {
  out << "col,row,center_x,center_y,mean_rssi,count\n";
  for (const auto& [key, cell] : grid.cells) {
    const auto [cx, cy] = grid.center(key.first, key.second);
    out << key.first << ',' << key.second << ',' << format_double(cx, 4) << ',' << format_double(cy, 4) << ','
        << format_double(cell.mean_rssi, 1) << ',' << cell.sample_count << '\n';
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << contents;
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace wifiloc::io
