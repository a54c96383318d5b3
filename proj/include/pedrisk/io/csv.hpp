// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pedrisk::io {

struct CsvTable {
  std::filesystem::path source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row

  // Throws ValidationError naming the file when the column is absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;

  // Field accessors that throw ValidationError naming file, line and column.
  const std::string& text(std::size_t row, std::size_t col) const;
  double real(std::size_t row, std::size_t col) const;
  std::int64_t integer(std::size_t row, std::size_t col) const;
};

// RFC 4180 quoting; blank lines are skipped. Every row must have as many
// fields as the header.
CsvTable read_csv(const std::filesystem::path& path,
                  const std::vector<std::string>& required_columns = {});

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace pedrisk::io
