#pragma once

// Matrix text format: a header line "n p", then n lines of p decimal
// numbers separated by single spaces.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stiefel/ambient.hpp"

namespace stiefel {

namespace detail {
inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline double parse_double(const std::string& tok, int line_no) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw InputError("matrix file line " + std::to_string(line_no) + ": invalid number '" +
                     tok + "'");
  }
  return v;
}

inline long parse_dim(const std::string& tok, int line_no) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0' || v < 1) {
    throw InputError("matrix file line " + std::to_string(line_no) +
                     ": invalid dimension '" + tok + "'");
  }
  return v;
}
}  // namespace detail

inline Matrix read_matrix(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line()) throw InputError("matrix file line 1: missing header 'n p'");
  const auto header = detail::split_fields(line);
  if (header.size() != 2) {
    throw InputError("matrix file line 1: header must be 'n p'");
  }
  const long rows = detail::parse_dim(header[0], line_no);
  const long cols = detail::parse_dim(header[1], line_no);

  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!next_line()) {
      throw InputError("matrix file line " + std::to_string(line_no + 1) + ": expected " +
                       std::to_string(rows) + " rows, file ended");
    }
    const auto fields = detail::split_fields(line);
    if (static_cast<long>(fields.size()) != cols) {
      throw InputError("matrix file line " + std::to_string(line_no) + ": expected " +
                       std::to_string(cols) + " entries, got " + std::to_string(fields.size()));
    }
    for (long j = 0; j < cols; ++j) m(i, j) = detail::parse_double(fields[j], line_no);
  }
  while (next_line()) {
    if (!detail::split_fields(line).empty()) {
      throw InputError("matrix file line " + std::to_string(line_no) + ": trailing content");
    }
  }
  return m;
}

inline Matrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open matrix file '" + path + "'");
  return read_matrix(in);
}

/// Round-trip exact (%.17g).
inline void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  char buf[32];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace stiefel
