#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <unistd.h>

#include "mflqr/core.hpp"
#include "mflqr/synthesis.hpp"
#include "mflqr/trajectory.hpp"

// Text artifacts shared by the library and the command line tool.
//
// Dataset CSV:
//   # key: value           optional metadata lines, before the header
//   t,u_1,...,u_m,y_1,...,y_p
//   one row per sample, uniform t
//
// Result file:
//   # comment
//   [section]
//   key = value
// Matrix sections carry `rows`, `cols` and one `row = a, b, ...` line per row.

namespace mflqr {

using Metadata = std::map<std::string, std::string>;

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  if (ec != std::errc()) throw Error(ErrorCode::kIo, "could not format a double");
  return std::string(buffer, end);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char delimiter) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delimiter, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

/// Parses a full token as a double. Returns false on malformed text; inf and
/// nan parse successfully and are left to the caller.
inline bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace detail

/// Writes `content` to a sibling temporary file and renames it over `path`.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path temporary = path;
  temporary += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(temporary, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + temporary.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + temporary.string());
  }
  std::error_code ec;
  fs::rename(temporary, path, ec);
  if (ec) {
    fs::remove(temporary, ec);
    throw Error(ErrorCode::kIo, "cannot move output into place at " + path.string());
  }
}

/// 64-bit FNV-1a, printed as 16 hex digits. Stable across platforms.
inline std::string content_hash(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buffer[17];
  static constexpr char kDigits[] = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buffer[i] = kDigits[h & 0xf];
    h >>= 4;
  }
  buffer[16] = '\0';
  return buffer;
}

// ---------------------------------------------------------------------------
// Dataset CSV

inline std::string dataset_to_csv(const DataSet& data, const Metadata& metadata = {}) {
  const Index N = data.num_samples();
  detail::require(data.outputs.cols() == N && data.inputs.cols() == N, ErrorCode::kDimensionMismatch,
                  "dataset columns do not match the time vector");
  detail::require(data.times.allFinite() && data.outputs.allFinite() && data.inputs.allFinite(),
                  ErrorCode::kNonFiniteValue, "dataset contains non-finite values");
  std::string out;
  for (const auto& [key, value] : metadata) out += "# " + key + ": " + value + "\n";
  out += "t";
  for (Index i = 0; i < data.num_inputs(); ++i) out += ",u_" + std::to_string(i + 1);
  for (Index i = 0; i < data.num_outputs(); ++i) out += ",y_" + std::to_string(i + 1);
  out += "\n";
  for (Index k = 0; k < N; ++k) {
    out += format_double(data.times(k));
    for (Index i = 0; i < data.num_inputs(); ++i) out += "," + format_double(data.inputs(i, k));
    for (Index i = 0; i < data.num_outputs(); ++i) out += "," + format_double(data.outputs(i, k));
    out += "\n";
  }
  return out;
}

/// Parses the CSV contract. Needs at least two samples so that dt is defined;
/// every t_k must lie within 1e-9·dt of t_0 + k·dt.
inline DataSet dataset_from_csv(const std::string& text, Metadata* metadata = nullptr) {
  const auto lines = detail::lines_of(text);
  std::size_t line_no = 0;
  for (; line_no < lines.size(); ++line_no) {
    const auto line = detail::trim(lines[line_no]);
    if (line.empty()) continue;
    if (line.front() != '#') break;
    if (metadata) {
      const auto body = detail::trim(line.substr(1));
      const auto colon = body.find(':');
      if (colon != std::string_view::npos) {
        (*metadata)[std::string(detail::trim(body.substr(0, colon)))] =
            std::string(detail::trim(body.substr(colon + 1)));
      }
    }
  }
  if (line_no == lines.size()) throw Error(ErrorCode::kSchemaViolation, "missing header row");

  const auto header = detail::split(detail::trim(lines[line_no]), ',');
  const std::string header_row = "header (line " + std::to_string(line_no + 1) + ")";
  if (header.empty() || detail::trim(header[0]) != "t") {
    throw Error(ErrorCode::kSchemaViolation, header_row + ": first column must be 't'");
  }
  Index m = 0;
  Index p = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto name = detail::trim(header[c]);
    const bool is_input = name.size() > 2 && name.substr(0, 2) == "u_";
    const bool is_output = name.size() > 2 && name.substr(0, 2) == "y_";
    const std::string expected = is_input && p == 0 ? "u_" + std::to_string(m + 1) : "y_" + std::to_string(p + 1);
    if ((!is_input && !is_output) || (is_input && p > 0) || name != expected) {
      throw Error(ErrorCode::kSchemaViolation, header_row + ": column " + std::to_string(c + 1) + " is '" +
                                                   std::string(name) + "', expected '" + expected + "'");
    }
    (is_input ? m : p) += 1;
  }
  if (p == 0) throw Error(ErrorCode::kSchemaViolation, header_row + ": no y_ columns");

  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> row_lines;
  for (std::size_t i = line_no + 1; i < lines.size(); ++i) {
    const auto line = detail::trim(lines[i]);
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kSchemaViolation, "row " + std::to_string(rows.size() + 1) + " (line " +
                                                   std::to_string(i + 1) + ") has " + std::to_string(fields.size()) +
                                                   " fields, header has " + std::to_string(header.size()));
    }
    std::vector<double> values(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string where = "row " + std::to_string(rows.size() + 1) + " (line " + std::to_string(i + 1) +
                                "), column '" + std::string(detail::trim(header[c])) + "'";
      if (!detail::parse_double(fields[c], values[c])) {
        throw Error(ErrorCode::kSchemaViolation, where + ": '" + std::string(detail::trim(fields[c])) +
                                                     "' is not a number");
      }
      if (!std::isfinite(values[c])) throw Error(ErrorCode::kNonFiniteValue, where + " is not finite");
    }
    rows.push_back(std::move(values));
    row_lines.push_back(i + 1);
  }
  if (rows.size() < 2) {
    throw Error(ErrorCode::kSchemaViolation,
                "dataset has " + std::to_string(rows.size()) + " samples; at least two are needed");
  }

  const auto N = static_cast<Index>(rows.size());
  DataSet data;
  data.times.resize(N);
  data.inputs.resize(m, N);
  data.outputs.resize(p, N);
  for (Index k = 0; k < N; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    data.times(k) = r[0];
    for (Index i = 0; i < m; ++i) data.inputs(i, k) = r[static_cast<std::size_t>(1 + i)];
    for (Index i = 0; i < p; ++i) data.outputs(i, k) = r[static_cast<std::size_t>(1 + m + i)];
  }
  data.dt = data.times(1) - data.times(0);
  if (!(data.dt > 0.0)) throw Error(ErrorCode::kNonUniformTime, "row 2: time does not increase");
  for (Index k = 2; k < N; ++k) {
    const double expected = data.times(0) + static_cast<double>(k) * data.dt;
    if (std::abs(data.times(k) - expected) > 1e-9 * data.dt) {
      throw Error(ErrorCode::kNonUniformTime,
                  "row " + std::to_string(k + 1) + " (line " + std::to_string(row_lines[static_cast<std::size_t>(k)]) +
                      "): t = " + format_double(data.times(k)) + ", expected " + format_double(expected));
    }
  }
  return data;
}

inline void write_dataset(const DataSet& data, const std::filesystem::path& path, const Metadata& metadata = {}) {
  write_text_atomic(path, dataset_to_csv(data, metadata));
}

inline DataSet read_dataset(const std::filesystem::path& path, Metadata* metadata = nullptr) {
  try {
    return dataset_from_csv(detail::read_file(path), metadata);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

// ---------------------------------------------------------------------------
// Sectioned key = value files

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct Section {
  std::string name;
  std::size_t line = 0;
  std::vector<Entry> entries;

  const Entry* find(std::string_view key) const {
    for (const auto& e : entries) {
      if (e.key == key) return &e;
    }
    return nullptr;
  }
};

/// Parses `[section]` headers, `key = value` lines and `#` comments. Keys
/// before the first header land in a section named "".
inline std::vector<Section> parse_sections(const std::string& text, ErrorCode error = ErrorCode::kSchemaViolation) {
  std::vector<Section> sections;
  sections.push_back({"", 0, {}});
  const auto lines = detail::lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = detail::trim(lines[i]);
    const std::string where = "line " + std::to_string(i + 1);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw Error(error, where + ": malformed section header");
      std::string name(detail::trim(line.substr(1, line.size() - 2)));
      for (const auto& s : sections) {
        if (s.name == name) throw Error(error, where + ": duplicate section [" + name + "]");
      }
      sections.push_back({std::move(name), i + 1, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(error, where + ": expected 'key = value'");
    std::string key(detail::trim(line.substr(0, eq)));
    if (key.empty()) throw Error(error, where + ": empty key");
    sections.back().entries.push_back({std::move(key), std::string(detail::trim(line.substr(eq + 1))), i + 1});
  }
  if (sections.front().entries.empty()) sections.erase(sections.begin());
  return sections;
}

/// "a, b; c, d" → 2×2. Rows split on ';', entries on ',' or whitespace.
inline Matrix parse_matrix(std::string_view text, const std::string& where, ErrorCode error) {
  std::vector<std::vector<double>> rows;
  for (const auto row_text : detail::split(text, ';')) {
    std::vector<double> row;
    std::string normalized(row_text);
    for (char& c : normalized) {
      if (c == ',') c = ' ';
    }
    std::istringstream in(normalized);
    std::string token;
    while (in >> token) {
      double v = 0.0;
      if (!detail::parse_double(token, v)) throw Error(error, where + ": '" + token + "' is not a number");
      if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteValue, where + ": non-finite entry");
      row.push_back(v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(error, where + ": empty matrix");
  const std::size_t cols = rows.front().size();
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw Error(error, where + ": ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  }
  return m;
}

inline std::string format_matrix_inline(const Matrix& m) {
  std::string out;
  for (Index r = 0; r < m.rows(); ++r) {
    if (r > 0) out += "; ";
    for (Index c = 0; c < m.cols(); ++c) out += (c > 0 ? ", " : "") + format_double(m(r, c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Result files

/// `[name]` followed by rows, cols and one `row = ...` line per row.
inline std::string matrix_section(const std::string& name, const Matrix& m) {
  std::string out = "\n[" + name + "]\nrows = " + std::to_string(m.rows()) + "\ncols = " + std::to_string(m.cols()) + "\n";
  for (Index r = 0; r < m.rows(); ++r) {
    out += "row =";
    for (Index c = 0; c < m.cols(); ++c) out += (c > 0 ? ", " : " ") + format_double(m(r, c));
    out += "\n";
  }
  return out;
}

/// A synthesis result or a baseline gain. Only K is mandatory; a baseline
/// carries K and P.
struct ResultFile {
  SynthesisResult result;
  bool has_diagnostics = false;
  Metadata metadata;
  std::vector<std::string> warnings;
};

namespace detail {

inline Matrix read_matrix_section(const Section& s) {
  const std::string where = "section [" + s.name + "] (line " + std::to_string(s.line) + ")";
  const Entry* rows_entry = s.find("rows");
  const Entry* cols_entry = s.find("cols");
  if (!rows_entry || !cols_entry) throw Error(ErrorCode::kSchemaViolation, where + ": needs rows and cols");
  double rows_value = 0.0, cols_value = 0.0;
  if (!parse_double(rows_entry->value, rows_value) || !parse_double(cols_entry->value, cols_value) ||
      rows_value < 0 || cols_value < 0 || rows_value != std::floor(rows_value) || cols_value != std::floor(cols_value)) {
    throw Error(ErrorCode::kSchemaViolation, where + ": rows and cols must be non-negative integers");
  }
  const auto rows = static_cast<Index>(rows_value);
  const auto cols = static_cast<Index>(cols_value);
  Matrix m(rows, cols);
  Index r = 0;
  for (const auto& e : s.entries) {
    if (e.key == "rows" || e.key == "cols") continue;
    const std::string line = "line " + std::to_string(e.line);
    if (e.key != "row") throw Error(ErrorCode::kSchemaViolation, line + ": unexpected key '" + e.key + "' in [" + s.name + "]");
    if (r >= rows) throw Error(ErrorCode::kSchemaViolation, line + ": more than " + std::to_string(rows) + " rows");
    const Matrix row = parse_matrix(e.value, line, ErrorCode::kSchemaViolation);
    if (row.rows() != 1 || row.cols() != cols) {
      throw Error(ErrorCode::kSchemaViolation, line + ": expected " + std::to_string(cols) + " entries");
    }
    m.row(r++) = row.row(0);
  }
  if (r != rows) throw Error(ErrorCode::kSchemaViolation, where + ": expected " + std::to_string(rows) + " rows, got " + std::to_string(r));
  return m;
}

}  // namespace detail

inline std::string result_to_text(const ResultFile& file) {
  const SynthesisResult& r = file.result;
  std::string out = "# mflqr result\n\n[meta]\n";
  for (const auto& [key, value] : file.metadata) out += key + " = " + value + "\n";
  out += matrix_section("K", r.K);
  if (r.P.size() > 0) out += matrix_section("P", r.P);
  if (r.L.size() > 0) out += matrix_section("L", r.L);
  if (r.S.size() > 0) out += matrix_section("S", r.S);
  if (r.X.size() > 0) out += matrix_section("X", r.X);
  if (file.has_diagnostics) {
    const auto& d = r.diagnostics;
    out += "\n[diagnostics]\n";
    out += "objective = " + format_double(d.objective) + "\n";
    out += "max_violation_scaled = " + format_double(d.max_violation_scaled) + "\n";
    out += "max_violation_raw = " + format_double(d.max_violation_raw) + "\n";
    out += "stationarity = " + format_double(d.stationarity) + "\n";
    out += "outer_iterations = " + std::to_string(d.outer_iterations) + "\n";
    out += "inner_iterations = " + std::to_string(d.inner_iterations) + "\n";
    out += std::string("converged = ") + (d.converged ? "true" : "false") + "\n";
    out += "data_scale = " + format_double(d.data_scale) + "\n";
    out += "weight_scale = " + format_double(d.weight_scale) + "\n";
    out += "message = " + d.message + "\n";
  }
  return out;
}

inline ResultFile result_from_text(const std::string& text) {
  ResultFile file;
  bool has_k = false;
  for (const auto& s : parse_sections(text)) {
    if (s.name == "meta") {
      for (const auto& e : s.entries) file.metadata[e.key] = e.value;
    } else if (s.name == "K") {
      file.result.K = detail::read_matrix_section(s);
      has_k = true;
    } else if (s.name == "P") {
      file.result.P = detail::read_matrix_section(s);
    } else if (s.name == "L") {
      file.result.L = detail::read_matrix_section(s);
    } else if (s.name == "S") {
      file.result.S = detail::read_matrix_section(s);
    } else if (s.name == "X") {
      file.result.X = detail::read_matrix_section(s);
    } else if (s.name == "diagnostics") {
      file.has_diagnostics = true;
      auto& d = file.result.diagnostics;
      auto number = [&](const char* key) {
        const Entry* e = s.find(key);
        double v = 0.0;
        if (!e || !detail::parse_double(e->value, v)) {
          throw Error(ErrorCode::kSchemaViolation, "section [diagnostics]: missing or malformed '" + std::string(key) + "'");
        }
        return v;
      };
      d.objective = number("objective");
      d.max_violation_scaled = number("max_violation_scaled");
      d.max_violation_raw = number("max_violation_raw");
      d.stationarity = number("stationarity");
      d.outer_iterations = static_cast<int>(number("outer_iterations"));
      d.inner_iterations = static_cast<int>(number("inner_iterations"));
      d.data_scale = number("data_scale");
      d.weight_scale = number("weight_scale");
      const Entry* converged = s.find("converged");
      if (!converged || (converged->value != "true" && converged->value != "false")) {
        throw Error(ErrorCode::kSchemaViolation, "section [diagnostics]: 'converged' must be true or false");
      }
      d.converged = converged->value == "true";
      const Entry* message = s.find("message");
      d.message = message ? message->value : "";
    } else {
      file.warnings.push_back("ignoring unknown section [" + s.name + "] at line " + std::to_string(s.line));
    }
  }
  if (!has_k) throw Error(ErrorCode::kSchemaViolation, "missing section [K]");
  return file;
}

inline void write_result(const ResultFile& file, const std::filesystem::path& path) {
  write_text_atomic(path, result_to_text(file));
}

inline ResultFile read_result(const std::filesystem::path& path) {
  return result_from_text(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Config files

/**
 * Sectioned key = value configuration with typed accessors. Every accessor
 * marks its key as consumed so that `check_all_consumed` can reject typos.
 */
class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text) {
    Config config;
    for (auto& s : parse_sections(text, ErrorCode::kConfigParse)) {
      for (const auto& e : s.entries) {
        for (const auto& existing : config.entries_) {
          if (existing.section == s.name && existing.key == e.key) {
            throw Error(ErrorCode::kConfigParse, "line " + std::to_string(e.line) + ": duplicate key '" + e.key +
                                                     "' in [" + s.name + "] (first at line " +
                                                     std::to_string(existing.line) + ")");
          }
        }
        config.entries_.push_back({s.name, e.key, e.value, e.line, false});
      }
    }
    return config;
  }

  static Config load(const std::filesystem::path& path) {
    try {
      return parse(detail::read_file(path));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kConfigParse) throw;
      throw Error(ErrorCode::kConfigParse, path.string() + ": " + e.message());
    }
  }

  bool has(std::string_view section, std::string_view key) const { return find(section, key) != nullptr; }

  /// Adds a key that the file did not set.
  void set_default(std::string section, std::string key, std::string value) {
    if (!has(section, key)) entries_.push_back({std::move(section), std::move(key), std::move(value), 0, false});
  }

  std::string get_string(std::string_view section, std::string_view key, std::string fallback) const {
    const auto* e = consume(section, key);
    return e ? e->value : std::move(fallback);
  }

  double get_double(std::string_view section, std::string_view key, double fallback) const {
    const auto* e = consume(section, key);
    if (!e) return fallback;
    double v = 0.0;
    if (!detail::parse_double(e->value, v) || !std::isfinite(v)) fail(*e, "expected a finite number");
    return v;
  }

  long long get_int(std::string_view section, std::string_view key, long long fallback) const {
    const auto* e = consume(section, key);
    if (!e) return fallback;
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc() || ptr != e->value.data() + e->value.size()) fail(*e, "expected an integer");
    return v;
  }

  std::uint64_t get_uint64(std::string_view section, std::string_view key, std::uint64_t fallback) const {
    const auto* e = consume(section, key);
    if (!e) return fallback;
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc() || ptr != e->value.data() + e->value.size()) fail(*e, "expected an unsigned integer");
    return v;
  }

  bool get_bool(std::string_view section, std::string_view key, bool fallback) const {
    const auto* e = consume(section, key);
    if (!e) return fallback;
    if (e->value == "true") return true;
    if (e->value == "false") return false;
    fail(*e, "expected true or false");
  }

  Matrix get_matrix(std::string_view section, std::string_view key, Matrix fallback) const {
    const auto* e = consume(section, key);
    if (!e) return fallback;
    return parse_matrix(e->value, location(*e), ErrorCode::kConfigParse);
  }

  /// Diagonal matrix from a list, e.g. "10, 1, 1, 10".
  Matrix get_diagonal(std::string_view section, std::string_view key, Matrix fallback) const {
    const auto* e = consume(section, key);
    if (!e) return fallback;
    const Matrix v = parse_matrix(e->value, location(*e), ErrorCode::kConfigParse);
    if (v.rows() != 1) fail(*e, "expected a single row of diagonal entries");
    return Matrix(v.row(0).asDiagonal());
  }

  void check_all_consumed() const {
    for (const auto& e : entries_) {
      if (!e.consumed) fail(e, "unknown key");
    }
  }

 private:
  struct Item {
    std::string section;
    std::string key;
    std::string value;
    std::size_t line = 0;
    mutable bool consumed = false;
  };

  const Item* find(std::string_view section, std::string_view key) const {
    for (const auto& e : entries_) {
      if (e.section == section && e.key == key) return &e;
    }
    return nullptr;
  }

  const Item* consume(std::string_view section, std::string_view key) const {
    const Item* e = find(section, key);
    if (e) e->consumed = true;
    return e;
  }

  static std::string location(const Item& e) {
    return "line " + std::to_string(e.line) + ", [" + e.section + "] " + e.key;
  }

  [[noreturn]] static void fail(const Item& e, const std::string& what) {
    throw Error(ErrorCode::kConfigParse, location(e) + ": " + what + " (got '" + e.value + "')");
  }

  std::vector<Item> entries_;
};

}  // namespace mflqr
