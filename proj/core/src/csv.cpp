#include "secsim/csv.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "secsim/errors.hpp"

namespace secsim {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  throw data_error(origin + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw numeric_error("cannot format floating-point value");
  return std::string(buf, ptr);
}

const std::string* csv_table::find_meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return &v;
  return nullptr;
}

int csv_table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

void write_csv(const std::string& path, const csv_table& table) {
  if (table.columns.empty()) throw data_error("refusing to write '" + path + "': no columns");
  for (const auto& row : table.rows)
    if (row.size() != table.columns.size())
      throw data_error("refusing to write '" + path + "': row width does not match header");

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw data_error("cannot open '" + tmp + "' for writing");
    for (const auto& [key, value] : table.metadata) out << "# " << key << " = " << value << "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      if (i) out << ",";
      out << table.columns[i];
    }
    out << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ",";
        out << format_double(row[i]);
      }
      out << "\n";
    }
    out.flush();
    if (!out) throw data_error("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw data_error("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

csv_table read_csv_text(const std::string& text, const std::string& origin) {
  csv_table table;
  std::istringstream stream(text);
  std::string raw;
  int line = 0;
  bool have_header = false;
  while (std::getline(stream, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty()) continue;
    if (s[0] == '#') {
      const auto eq = s.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(s.substr(1, eq - 1));
      const std::string value = trim(s.substr(eq + 1));
      if (!key.empty()) table.metadata.emplace_back(key, value);
      continue;
    }
    if (!have_header) {
      table.columns = split_fields(s);
      for (const auto& name : table.columns)
        if (name.empty()) fail(origin, line, "empty column name in header");
      have_header = true;
      continue;
    }
    const auto fields = split_fields(s);
    if (fields.size() != table.columns.size())
      fail(origin, line,
           "expected " + std::to_string(table.columns.size()) + " columns, got " +
               std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::string& f = fields[i];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[i]);
      if (ec != std::errc{} || ptr != f.data() + f.size())
        fail(origin, line, "invalid number '" + f + "' in column '" + table.columns[i] + "'");
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw data_error(origin + ": no column header found");
  return table;
}

csv_table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open data file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_csv_text(buf.str(), path);
}

}  // namespace secsim
