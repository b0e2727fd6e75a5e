#pragma once

// RFC-4180 CSV: comma delimiter, double-quote quoting, CRLF or LF line ends.

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "claimkit/error.hpp"

namespace claimkit::csv {

struct Row {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

inline std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  std::size_t i = 0;
  std::size_t line = 1;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  while (i < text.size()) {
    Row row;
    row.line = line;
    std::string field;
    bool quoted = false;
    bool field_started_quoted = false;
    bool done = false;
    while (!done) {
      if (i >= text.size()) {
        if (quoted) throw ValidationError("line " + std::to_string(row.line) + ": unterminated quoted field");
        row.fields.push_back(std::move(field));
        break;
      }
      const char c = text[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field.push_back('"');
            i += 2;
          } else {
            quoted = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        continue;
      }
      if (c == '"' && field.empty() && !field_started_quoted) {
        quoted = true;
        field_started_quoted = true;
        ++i;
      } else if (c == ',') {
        row.fields.push_back(std::move(field));
        field.clear();
        field_started_quoted = false;
        ++i;
      } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
        row.fields.push_back(std::move(field));
        i += 2;
        ++line;
        done = true;
      } else if (c == '\n') {
        row.fields.push_back(std::move(field));
        ++i;
        ++line;
        done = true;
      } else {
        field.push_back(c);
        ++i;
      }
    }
    // A blank line is not a record.
    if (row.fields.size() == 1 && row.fields[0].empty()) continue;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string escape(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void append_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(fields[i]);
  }
  out.push_back('\n');
}

// Column lookup by header name.
class Header {
 public:
  explicit Header(const Row& row) {
    for (std::size_t i = 0; i < row.fields.size(); ++i) index_[row.fields[i]] = i;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("missing CSV column '" + name + "'");
    return it->second;
  }

  // Value of column `name` in `row`, or empty if the row is short or the
  // column absent.
  std::string get(const Row& row, const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end() || it->second >= row.fields.size()) return {};
    return row.fields[it->second];
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace claimkit::csv
