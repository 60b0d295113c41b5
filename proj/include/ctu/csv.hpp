#pragma once

// Minimal RFC 4180 reader/writer. Quoted fields may contain commas, doubled
// quotes and line breaks; CRLF and LF line endings are both accepted.

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ctu/error.hpp"

namespace ctu::csv {

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Reads the next record into `fields`. Returns false at end of input.
  // `record_line()` reports the 1-based line the record started on.
  bool next(std::vector<std::string>& fields) {
    fields.clear();
    int c = in_.get();
    if (c == EOF) return false;
    ++line_;
    record_line_ = line_;

    std::string field;
    bool quoted = false;
    bool after_quote = false;
    while (true) {
      if (c == EOF) {
        if (quoted) throw FormatError(record_line_, "unterminated quoted field");
        fields.push_back(std::move(field));
        return true;
      }
      const char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
            after_quote = true;
          }
        } else {
          if (ch == '\n') ++line_;
          field.push_back(ch);
        }
      } else if (ch == ',') {
        fields.push_back(std::move(field));
        field.clear();
        after_quote = false;
      } else if (ch == '\n' || ch == '\r') {
        if (ch == '\r' && in_.peek() == '\n') in_.get();
        fields.push_back(std::move(field));
        return true;
      } else if (ch == '"') {
        if (!field.empty() || after_quote) throw FormatError(record_line_, "stray quote inside unquoted field");
        quoted = true;
      } else {
        if (after_quote) throw FormatError(record_line_, "characters after closing quote");
        field.push_back(ch);
      }
      c = in_.get();
    }
  }

  std::size_t record_line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

inline bool needs_quoting(std::string_view v) {
  return v.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline std::string escape(std::string_view v) {
  if (!needs_quoting(v)) return std::string(v);
  std::string out;
  out.reserve(v.size() + 2);
  out.push_back('"');
  for (char c : v) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace ctu::csv
