#pragma once

// JSON and CSV artifacts. Every artifact carries the config hash and seed;
// nothing depending on the clock or the output path is written, so equal
// configs give byte-identical files.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nahmkn/errors.hpp"
#include "nahmkn/kempf_ness.hpp"
#include "nahmkn/nahm_flow.hpp"

namespace nahmkn::io {

using Json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// ---- matrices --------------------------------------------------------------
// A matrix is a list of rows; an entry is [re, im] or a plain real number.

inline Json to_json(const Complex& z) { return Json::array({z.real(), z.imag()}); }

template <class Derived>
Json to_json_matrix(const Eigen::MatrixBase<Derived>& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(Complex(m(i, j))));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const Triple& x) {
  return Json::array({to_json_matrix(x[0]), to_json_matrix(x[1]), to_json_matrix(x[2])});
}

inline Json to_json(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

inline Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Complex complex_from_json(const Json& j, const std::string& what) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw InvalidProblem(what + ": expected a number or [re, im]");
}

inline Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InvalidProblem(what + ": expected a nonempty list of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = j[0].is_array() ? static_cast<Eigen::Index>(j[0].size()) : 0;
  if (cols == 0) throw InvalidProblem(what + ": rows must be nonempty lists");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InvalidProblem(what + ": ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)], what);
  }
  return m;
}

inline Triple triple_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw InvalidProblem(what + ": expected three matrices");
  return {matrix_from_json(j[0], what), matrix_from_json(j[1], what), matrix_from_json(j[2], what)};
}

inline CVector vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InvalidProblem(what + ": expected a nonempty list");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i], what);
  return v;
}

// ---- artifacts ---------------------------------------------------------------

struct Stamp {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
};

inline Json header(const Stamp& s) {
  return {{"schema", "nahmkn/" + s.command + "/v" + kSchemaVersion},
          {"command", s.command},
          {"config_hash", s.config_hash},
          {"seed", s.seed}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline Json read_json(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidProblem("cannot read " + path.string());
  try {
    return Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw InvalidProblem(path.string() + ": " + e.what());
  }
}

/// CSV with a leading comment line "# schema=... config_hash=... seed=...",
/// then the column names.
class CsvWriter {
 public:
  CsvWriter(const Stamp& s, std::vector<std::string> columns) : width_(columns.size()) {
    text_ = "# schema=nahmkn/" + s.command + "/v" + kSchemaVersion + " config_hash=" + s.config_hash +
            " seed=" + std::to_string(s.seed) + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) text_ += (i ? "," : "") + columns[i];
    text_ += "\n";
  }

  CsvWriter& cell(double v) { return raw(format_double(v)); }
  CsvWriter& cell(long long v) { return raw(std::to_string(v)); }
  CsvWriter& cell(int v) { return raw(std::to_string(v)); }
  CsvWriter& cell(bool v) { return raw(v ? "1" : "0"); }
  CsvWriter& cell(const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return raw(v);
    std::string q = "\"";
    for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return raw(q + "\"");
  }
  CsvWriter& cell(const char* v) { return cell(std::string(v)); }

  void end_row() {
    if (in_row_ != width_) throw Error("csv row has the wrong number of cells");
    text_ += "\n";
    in_row_ = 0;
    ++rows_;
  }

  std::size_t rows() const { return rows_; }
  const std::string& text() const { return text_; }
  void save(const std::filesystem::path& path) const { write_text(path, text_); }

 private:
  CsvWriter& raw(const std::string& s) {
    text_ += (in_row_++ ? "," : "") + s;
    return *this;
  }

  std::size_t width_;
  std::size_t in_row_ = 0, rows_ = 0;
  std::string text_;
};

/// Column names "<prefix><i><j>_re", "<prefix><i><j>_im" for an n x n matrix (1-based).
inline std::vector<std::string> matrix_columns(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      const std::string base = prefix + std::to_string(i) + std::to_string(j);
      out.push_back(base + "_re");
      out.push_back(base + "_im");
    }
  return out;
}

inline void matrix_cells(CsvWriter& w, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) w.cell(m(i, j).real()).cell(m(i, j).imag());
}

}  // namespace nahmkn::io
