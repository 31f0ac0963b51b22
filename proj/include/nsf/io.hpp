#pragma once

#include <charconv>
#include <filesystem>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"
#include "nsf/checkpoint.hpp"
#include "nsf/record.hpp"

namespace nsf {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kManifestSchema = "nsf-manifest/1";
inline constexpr const char* kTwinSchema = "nsf-twin/1";

// ---------------------------------------------------------------------------
// Hashing

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::io, "sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string sha256_file(const std::filesystem::path& p) { return sha256_hex(read_file(p)); }

// ---------------------------------------------------------------------------
// CSV
//
//   # schema: <schema>
//   time,<col>,<col>,...
//   <shortest round-trip decimal values>

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e)
    throw Error(ErrorKind::io, where + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

struct CsvTable {
  std::string schema;
  std::vector<std::string> columns;  ///< includes the leading "time"
  std::vector<std::vector<double>> rows;

  std::ptrdiff_t find(const std::string& c) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == c) return std::ptrdiff_t(i);
    return -1;
  }
  std::vector<double> column(const std::string& c) const {
    const auto i = find(c);
    if (i < 0) throw Error(ErrorKind::config, "CSV has no column '" + c + "'");
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r[std::size_t(i)]);
    return v;
  }
};

inline std::string encode_csv(const CsvTable& t) {
  std::string out = "# schema: " + t.schema + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& r : t.rows) {
    if (r.size() != t.columns.size()) throw Error(ErrorKind::domain, "CSV row width does not match header");
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format_double(r[i]);
    out += '\n';
  }
  return out;
}

inline CsvTable decode_csv(const std::string& text, const std::string& where = "csv") {
  CsvTable t;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind("# schema: ", 0) != 0)
    throw Error(ErrorKind::io, where + ": missing '# schema:' header line");
  t.schema = line.substr(10);
  if (!std::getline(is, line) || line.empty()) throw Error(ErrorKind::io, where + ": missing column header");
  {
    std::istringstream h(line);
    std::string c;
    while (std::getline(h, c, ',')) t.columns.push_back(c);
  }
  if (t.columns.empty() || t.columns[0] != "time") throw Error(ErrorKind::io, where + ": first column must be time");
  std::size_t lineno = 2;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      const std::size_t q = line.find(',', pos);
      row.push_back(parse_double(std::string_view(line).substr(pos, q == std::string::npos ? q : q - pos),
                                 where + ":" + std::to_string(lineno)));
      if (q == std::string::npos) break;
      pos = q + 1;
    }
    if (row.size() != t.columns.size())
      throw Error(ErrorKind::io, where + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(t.columns.size()) + " fields, got " + std::to_string(row.size()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable records_table(std::span<const DiagnosticsRecord> recs) {
  CsvTable t;
  t.schema = kDiagSchema;
  t.columns.push_back("time");
  if (!recs.empty()) t.columns.insert(t.columns.end(), recs[0].names.begin(), recs[0].names.end());
  for (const auto& r : recs) {
    if (r.names != recs[0].names) throw Error(ErrorKind::domain, "records with differing columns");
    std::vector<double> row{r.time};
    row.insert(row.end(), r.values.begin(), r.values.end());
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::vector<DiagnosticsRecord> table_records(const CsvTable& t) {
  if (t.schema != kDiagSchema)
    throw Error(ErrorKind::io, "diagnostics CSV schema '" + t.schema + "' is not " + kDiagSchema);
  std::vector<DiagnosticsRecord> out;
  for (const auto& row : t.rows) {
    DiagnosticsRecord r;
    r.time = row[0];
    for (std::size_t i = 1; i < row.size(); ++i) r.add(t.columns[i], row[i]);
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_csv(const std::filesystem::path& p, const CsvTable& t) { atomic_write(p, encode_csv(t)); }
inline CsvTable read_csv(const std::filesystem::path& p) { return decode_csv(read_file(p), p.string()); }

inline void write_records_csv(const std::filesystem::path& p, std::span<const DiagnosticsRecord> recs) {
  write_csv(p, records_table(recs));
}
inline std::vector<DiagnosticsRecord> read_records_csv(const std::filesystem::path& p) {
  return table_records(read_csv(p));
}

// ---------------------------------------------------------------------------
// JSON

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  atomic_write(p, j.dump(2) + "\n");
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::io, p.string() + ": invalid JSON: " + e.what());
  }
}

inline nlohmann::json record_to_json(const DiagnosticsRecord& r) {
  nlohmann::json j;
  j["time"] = r.time;
  for (std::size_t i = 0; i < r.names.size(); ++i) j[r.names[i]] = r.values[i];
  return j;
}

// ---------------------------------------------------------------------------
// Plot scripts (gnuplot; run as `gnuplot <script>` inside the output directory)

inline std::string plot_script(const std::string& csv, const std::vector<std::string>& columns,
                               const std::string& png, const std::string& title, bool loglog = true) {
  std::string s;
  s += "set datafile separator ','\n";
  s += "set datafile commentschars '#'\n";
  s += "set key autotitle columnhead\n";
  s += "set terminal pngcairo size 900,600\n";
  s += "set output '" + png + "'\n";
  s += "set title '" + title + "'\n";
  s += "set xlabel '1 + t'\n";
  if (loglog) s += "set logscale xy\n";
  s += "plot ";
  for (std::size_t i = 0; i < columns.size(); ++i)
    s += std::string(i ? ", \\\n     " : "") + "'" + csv + "' using (1+$1):(column('" + columns[i] +
         "')) with lines title '" + columns[i] + "'";
  s += "\n";
  return s;
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestFile {
  std::string name;
  std::uintmax_t bytes = 0;
  std::string sha256;
};

struct RunManifest {
  std::string command;
  nlohmann::json scenario;  ///< effective scenario, loadable as a config
  nlohmann::json resolved;  ///< every numerics-affecting default, once
  double wall_clock_s = 0.0;
  std::size_t steps = 0;
  std::vector<ManifestFile> files;

  /// Hash the listed files in `dir` (in the given order).
  void inventory(const std::filesystem::path& dir, const std::vector<std::string>& names) {
    for (const auto& n : names) {
      const std::string bytes = read_file(dir / n);
      files.push_back({n, bytes.size(), sha256_hex(bytes)});
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema"] = kManifestSchema;
    j["version"] = kVersion;
    j["command"] = command;
    j["scenario"] = scenario;
    j["resolved"] = resolved;
    j["wall_clock_s"] = wall_clock_s;
    j["steps"] = steps;
    j["files"] = nlohmann::json::array();
    for (const auto& f : files) j["files"].push_back({{"name", f.name}, {"bytes", f.bytes}, {"sha256", f.sha256}});
    return j;
  }
};

/// Re-hash every file listed in a manifest; returns the names that do not match.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& dir) {
  const nlohmann::json m = read_json(dir / "manifest.json");
  if (m.value("schema", "") != kManifestSchema) throw Error(ErrorKind::io, "manifest schema mismatch");
  std::vector<std::string> bad;
  for (const auto& f : m.at("files")) {
    const std::string n = f.at("name");
    std::error_code ec;
    if (!std::filesystem::exists(dir / n, ec) || sha256_file(dir / n) != f.at("sha256").get<std::string>())
      bad.push_back(n);
  }
  return bad;
}

}  // namespace nsf
