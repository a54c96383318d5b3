// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/io/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "pedrisk/error.hpp"

namespace pedrisk::io {
namespace {

std::string where(const CsvTable& t, std::size_t row, std::size_t col) {
  return t.source.string() + ":" + std::to_string(t.lines.at(row)) + " column '" +
         t.header.at(col) + "'";
}

bool needs_quotes(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw ValidationError(source.string() + ": missing column '" + name + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

const std::string& CsvTable::text(std::size_t row, std::size_t col) const { return rows.at(row).at(col); }

double CsvTable::real(std::size_t row, std::size_t col) const {
  const std::string& s = text(row, col);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ValidationError(where(*this, row, col) + ": '" + s + "' is not a number");
  }
  return v;
}

std::int64_t CsvTable::integer(std::size_t row, std::size_t col) const {
  const std::string& s = text(row, col);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ValidationError(where(*this, row, col) + ": '" + s + "' is not an integer");
  }
  return v;
}

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& required_columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string() + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();

  CsvTable t;
  t.source = path;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    const bool blank = record.size() == 1 && record[0].empty() && !any;
    if (!blank) {
      if (t.header.empty()) {
        t.header = std::move(record);
      } else {
        if (record.size() != t.header.size()) {
          throw ValidationError(path.string() + ":" + std::to_string(record_line) + ": expected " +
                                std::to_string(t.header.size()) + " fields, found " +
                                std::to_string(record.size()));
        }
        t.rows.push_back(std::move(record));
        t.lines.push_back(record_line);
      }
    }
    record.clear();
    any = false;
  };

  std::size_t i = 0;
  if (data.size() >= 3 && data.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
  for (; i < data.size(); ++i) {
    const char ch = data[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_quotes = true;
        any = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        field.push_back(ch);
        any = true;
    }
  }
  if (in_quotes) throw ValidationError(path.string() + ": unterminated quoted field");
  if (any || !field.empty()) end_record();
  if (t.header.empty()) throw ValidationError(path.string() + ": empty file, expected a header");
  for (const auto& col : required_columns) t.column(col);
  return t;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError(path.string() + ": cannot open for writing");
  auto write_row = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out << ',';
      if (needs_quotes(r[i])) {
        out << '"';
        for (const char ch : r[i]) {
          if (ch == '"') out << '"';
          out << ch;
        }
        out << '"';
      } else {
        out << r[i];
      }
    }
    out << '\n';
  };
  write_row(header);
  for (const auto& r : rows) write_row(r);
  if (!out) throw ValidationError(path.string() + ": write failed");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

}  // namespace pedrisk::io
