#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gridflex {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text (JSON or case script). Carries a 1-based location.
struct ParseError : Error {
  ParseError(const std::string& what, int line_, int column_)
      : Error(what + " (line " + std::to_string(line_) + ", column " +
              std::to_string(column_) + ")"),
        line(line_), column(column_) {}
  int line = 0;
  int column = 0;
};

/// Structurally valid input that violates the schema (unknown/missing field,
/// wrong type).
struct SchemaError : Error {
  using Error::Error;
};

/// Well-formed document whose data breaks a model invariant; names the entity.
struct ValidationError : Error {
  using Error::Error;
};

/// Network-level defects: disconnected graph, singular susceptance matrix.
struct NetworkError : Error {
  using Error::Error;
};

/// A dispatch problem with no feasible point; carries the offending rows.
struct InfeasibleError : Error {
  InfeasibleError(const std::string& what, std::vector<std::string> rows_)
      : Error(what), rows(std::move(rows_)) {}
  std::vector<std::string> rows;
};

}  // namespace gridflex
