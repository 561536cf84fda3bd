#include "ordcop/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ordcop {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

Dataset::Dataset(std::vector<std::string> columns,
                 std::vector<std::vector<std::string>> cells)
    : columns_(std::move(columns)), cells_(std::move(cells)) {
  if (columns_.size() != cells_.size())
    throw InputError("dataset: header and column count differ");
  for (size_t j = 1; j < cells_.size(); ++j)
    if (cells_[j].size() != cells_[0].size())
      throw InputError("dataset: ragged columns");
}

bool Dataset::has_column(const std::string& name) const {
  for (const auto& c : columns_)
    if (c == name) return true;
  return false;
}

Index Dataset::column_index(const std::string& name) const {
  for (size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j] == name) return static_cast<Index>(j);
  throw MissingCovariate("column '" + name + "' not found in data");
}

Vector Dataset::numeric_column(const std::string& name) const {
  const auto& col = cells_[column_index(name)];
  Vector out(static_cast<Index>(col.size()));
  for (size_t i = 0; i < col.size(); ++i) {
    try {
      size_t pos = 0;
      out[static_cast<Index>(i)] = std::stod(col[i], &pos);
      if (pos != col[i].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw InputError("column '" + name + "' row " + std::to_string(i + 1) +
                       ": cannot parse '" + col[i] + "' as a number");
    }
  }
  return out;
}

const std::vector<std::string>& Dataset::string_column(const std::string& name) const {
  return cells_[column_index(name)];
}

Dataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("csv: empty input");
  const std::vector<std::string> header = split_line(line);
  for (const auto& h : header)
    if (h.empty()) throw InputError("csv: empty column name in header");
  std::vector<std::vector<std::string>> cells(header.size());
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size())
      throw InputError("csv: row " + std::to_string(row) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(header.size()));
    for (size_t j = 0; j < fields.size(); ++j) cells[j].push_back(std::move(fields[j]));
  }
  if (cells[0].empty()) throw InputError("csv: no data rows");
  return Dataset(header, std::move(cells));
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open data file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_csv(buf.str());
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& columns) {
  if (header.size() != columns.size())
    throw InputError("write_csv: header and column count differ");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  for (size_t j = 0; j < header.size(); ++j)
    out << (j ? "," : "") << header[j];
  out << "\n";
  const size_t n = columns.empty() ? 0 : columns[0].size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < columns.size(); ++j)
      out << (j ? "," : "") << columns[j][i];
    out << "\n";
  }
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace ordcop
