#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fluentrx {

// Minimal RFC 4180 reader: quoted fields, doubled-quote escapes, LF or CRLF
// row endings, newlines allowed inside quoted fields. Tracks the physical
// line each logical row starts on (1-based) for error reporting.
class CsvReader {
 public:
  explicit CsvReader(std::string_view text) : text_(text) {}

  // Next logical row, or nullopt at end of input. Throws ParseError on an
  // unterminated quoted field.
  std::optional<std::vector<std::string>> next_row();

  // Line the most recently returned row started on.
  int row_line() const noexcept { return row_line_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int row_line_ = 0;
};

// Quotes a field only when it contains a comma, quote, or line break.
std::string csv_quote(std::string_view field);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

// Strict full-string parse (surrounding whitespace tolerated). Throws
// ParseError carrying the given position on anything else.
double parse_csv_double(std::string_view text, int line, int column);

}  // namespace fluentrx
