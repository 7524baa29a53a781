#include "fluentrx/csv.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <system_error>

#include "fluentrx/errors.hpp"

namespace fluentrx {

std::optional<std::vector<std::string>> CsvReader::next_row() {
  if (pos_ >= text_.size()) return std::nullopt;
  row_line_ = line_;
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  while (true) {
    if (pos_ >= text_.size()) {
      if (quoted)
        throw ParseError("unterminated quoted field starting at line " +
                             std::to_string(row_line_),
                         row_line_);
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      fields.push_back(std::move(cur));
      return fields;
    }
    const char c = text_[pos_++];
    if (quoted) {
      if (c == '"') {
        if (pos_ < text_.size() && text_[pos_] == '"') {
          cur += '"';
          ++pos_;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_;
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      ++line_;
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      fields.push_back(std::move(cur));
      return fields;
    } else {
      cur += c;
    }
  }
}

std::string csv_quote(std::string_view field) {
  const bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out += '"';
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_csv_double(std::string_view text, int line, int column) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  const std::string_view t = text.substr(begin, end - begin);
  double out = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": not a number: '" + std::string(text) + "'",
                     line, column);
  return out;
}

}  // namespace fluentrx
