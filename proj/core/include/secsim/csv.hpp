#pragma once

#include <string>
#include <utility>
#include <vector>

namespace secsim {

// Self-describing numeric table: '#'-prefixed "key = value" metadata lines,
// one column-name row, then comma-separated numeric rows. Every file this
// library writes parses back via read_csv (round-trip identity; values are
// written in shortest exact form).
struct csv_table {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  const std::string* find_meta(const std::string& key) const;
  int column_index(const std::string& name) const;  // -1 when absent
};

// Atomic write: temp file in the target directory, then rename.
void write_csv(const std::string& path, const csv_table& table);

// Throws data_error naming the file and line on malformed input.
csv_table read_csv(const std::string& path);
csv_table read_csv_text(const std::string& text, const std::string& origin = "<string>");

std::string format_double(double v);  // shortest representation that parses back exactly

}  // namespace secsim
