#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairtext {

// Errors are split by who is at fault. ConfigError/ValidationError mean the
// caller handed us something unusable; DataError covers malformed input
// files. The CLI maps these onto exit codes 1 and 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// A required CSV column is missing.
class SchemaError : public DataError {
 public:
  SchemaError(const std::string& column)
      : DataError("missing required column '" + column + "'"), column_(column) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

// Syntax error in an input file. `position` is a byte offset or a 1-based
// line number depending on the format; the message says which.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t position)
      : DataError(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// A well-formed row carrying an invalid value. `row` is the 0-based index of
// the data row (header excluded).
class RowError : public DataError {
 public:
  RowError(const std::string& what, std::size_t row)
      : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class OutOfVocabulary : public Error {
 public:
  explicit OutOfVocabulary(const std::string& word)
      : Error("out of vocabulary: '" + word + "'"), word_(word) {}
  const std::string& word() const { return word_; }

 private:
  std::string word_;
};

}  // namespace fairtext
