#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "stiefel/errors.hpp"
#include "stiefel/manifold.hpp"

namespace stiefel::cli {

using json = nlohmann::ordered_json;

/// Accepts a row-major nested array [[..],[..]] or the shorthand {"diag": [..]}.
inline Matrix matrix_from_json(const json& j, const std::string& field) {
  if (j.is_object()) {
    if (j.size() != 1 || !j.contains("diag")) {
      throw ParseError(field, "matrix object must be of the form {\"diag\": [...]}");
    }
    const json& d = j.at("diag");
    if (!d.is_array() || d.empty()) throw ParseError(field + ".diag", "expected a non-empty array of numbers");
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!d[i].is_number()) throw ParseError(field + ".diag[" + std::to_string(i) + "]", "expected a number");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = d[i].get<double>();
    }
    return m;
  }
  if (!j.is_array() || j.empty()) throw ParseError(field, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) throw ParseError(field + "[0]", "expected a non-empty array of numbers");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rf = field + "[" + std::to_string(r) + "]";
    if (!j[r].is_array()) throw ParseError(rf, "expected an array of numbers");
    if (j[r].size() != cols) {
      throw ParseError(rf, "row has " + std::to_string(j[r].size()) + " entries, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ParseError(rf + "[" + std::to_string(c) + "]", "expected a number");
      const double v = j[r][c].get<double>();
      if (!std::isfinite(v)) throw ParseError(rf + "[" + std::to_string(c) + "]", "non-finite value");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return m;
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

/// Shortest form is not used: every double is written with 17 significant
/// digits so that the text round-trips bit-exactly through strtod.
inline std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // Keep floats recognizable as floats.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

namespace detail {

inline bool is_flat(const json& j) {
  for (const auto& e : j)
    if (e.is_structured()) return false;
  return true;
}

inline void write(std::ostream& os, const json& j, int level) {
  const std::string pad(static_cast<std::size_t>(2 * level), ' ');
  const std::string pad_in(static_cast<std::size_t>(2 * (level + 1)), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad_in << json(it.key()).dump() << ": ";
        write(os, it.value(), level + 1);
      }
      os << "\n" << pad << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      if (is_flat(j)) {
        os << "[";
        bool first = true;
        for (const auto& e : j) {
          if (!first) os << ", ";
          first = false;
          write(os, e, level + 1);
        }
        os << "]";
        return;
      }
      // Arrays of flat arrays (matrices) keep one row per line.
      os << "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) os << ",\n";
        first = false;
        os << pad_in;
        write(os, e, level + 1);
      }
      os << "\n" << pad << "]";
      return;
    }
    case json::value_t::number_float:
      os << format_double(j.get<double>());
      return;
    default:
      os << j.dump();
      return;
  }
}

}  // namespace detail

inline void write_json(std::ostream& os, const json& j) {
  detail::write(os, j, 0);
  os << "\n";
}

inline std::string to_json_text(const json& j) {
  std::ostringstream os;
  write_json(os, j);
  return os.str();
}

}  // namespace stiefel::cli
