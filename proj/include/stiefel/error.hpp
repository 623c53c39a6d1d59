#pragma once

#include <stdexcept>
#include <string>

namespace stiefel {

/// Malformed or inconsistent user input: shapes, indices, file contents,
/// points that are not on the manifold.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical quantity the algorithm depends on degenerated (singular Gram
/// matrix, vanishing row-selection determinant, rank loss in a retraction).
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation of a field left its domain (log of a non-positive number,
/// division by zero, ...). `where` names the offending node.
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, std::string where)
      : std::domain_error(what + " at " + where), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// Expression text did not match the grammar.
class ParseError : public InputError {
 public:
  ParseError(const std::string& message, int line, int column)
      : InputError("parse error at line " + std::to_string(line) + ", column " +
                   std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace stiefel
