#pragma once

// JSON descriptions of built-in fields:
//
//   {"family": "linear",     "A": [[...], ...]}
//   {"family": "brockett",   "B": [[...], ...], "C": [c_1, ..., c_p]}
//   {"family": "procrustes", "A": [[...], ...], "B": [[...], ...]}
//   {"family": "expression", "n": 3, "p": 2, "source": "u[1,1]*u[2,2]"}
//
// Matrices are arrays of rows. "C" may also be a diagonal p x p matrix.

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "stiefel/functions.hpp"

namespace stiefel {

namespace detail {

inline Matrix json_matrix(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw InputError("field file: missing \"" + key + "\"");
  const auto& rows = j.at(key);
  if (!rows.is_array() || rows.empty() || !rows.front().is_array() || rows.front().empty()) {
    throw InputError("field file: \"" + key + "\" must be a nonempty array of rows");
  }
  const auto r = static_cast<Index>(rows.size());
  const auto c = static_cast<Index>(rows.front().size());
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c) {
      throw InputError("field file: \"" + key + "\" rows have unequal length");
    }
    for (Index k = 0; k < c; ++k) {
      const auto& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) throw InputError("field file: \"" + key + "\" has a non-numeric entry");
      m(i, k) = v.get<double>();
    }
  }
  if (!m.allFinite()) throw InputError("field file: \"" + key + "\" has non-finite entries");
  return m;
}

inline Vector json_diagonal(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw InputError("field file: missing \"" + key + "\"");
  const auto& v = j.at(key);
  if (v.is_array() && !v.empty() && v.front().is_number()) {
    Vector out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw InputError("field file: \"" + key + "\" has a non-numeric entry");
      out(static_cast<Index>(i)) = v[i].get<double>();
    }
    return out;
  }
  const Matrix m = json_matrix(j, key);
  if (m.rows() != m.cols()) throw InputError("field file: \"" + key + "\" must be square");
  Matrix off = m;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() != 0.0) {
    throw InputError("field file: \"" + key + "\" must be diagonal");
  }
  return m.diagonal();
}

}  // namespace detail

inline ScalarField field_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
    throw InputError("field file: expected an object with a \"family\" string");
  }
  const std::string family = j.at("family").get<std::string>();
  if (family == "linear") return make_field(LinearFamily{detail::json_matrix(j, "A")});
  if (family == "brockett") {
    return make_field(BrockettFamily{detail::json_matrix(j, "B"), detail::json_diagonal(j, "C")});
  }
  if (family == "procrustes") {
    return make_field(ProcrustesFamily{detail::json_matrix(j, "A"), detail::json_matrix(j, "B")});
  }
  if (family == "expression") {
    if (!j.contains("n") || !j.contains("p") || !j.contains("source") ||
        !j.at("n").is_number_integer() || !j.at("p").is_number_integer() ||
        !j.at("source").is_string()) {
      throw InputError("field file: expression needs integer \"n\", \"p\" and a \"source\" string");
    }
    return expression_field(j.at("source").get<std::string>(), j.at("n").get<int>(),
                            j.at("p").get<int>());
  }
  throw InputError("field file: unknown family \"" + family + "\"");
}

inline ScalarField read_field_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open field file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("field file '" + path + "': " + e.what());
  }
  return field_from_json(j);
}

}  // namespace stiefel
