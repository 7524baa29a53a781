#pragma once

#include <stdexcept>
#include <string>

namespace fluentrx {

// Failure while reading a text input. line is 1-based; column is 1-based
// when known, 0 otherwise. The message already names both.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int column = 0)
      : std::runtime_error(msg), line_(line), column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

// The rater/clip incidence graph is disconnected, so the two-way additive
// model has no unique least-squares solution. The message lists the
// connected components.
class IdentifiabilityError : public std::runtime_error {
 public:
  explicit IdentifiabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fluentrx
