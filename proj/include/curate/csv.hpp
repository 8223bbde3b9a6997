#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace curate {

// Minimal RFC 4180 reader: comma separated, double-quoted fields may hold
// commas and doubled quotes. Records never span lines.
std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no);

std::string csv_field(std::string_view field);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  // 1-based source line of each row

  // Index of a header column; throws DataError naming the column if absent.
  std::size_t column(std::string_view name) const;
};

// Reads a header row followed by records. Blank lines are skipped; a record
// with the wrong field count is a ParseError.
CsvTable read_csv(std::istream& in);

}  // namespace curate
