#pragma once

// Minimal CSV-backed data frame: header row required, cells stored as strings,
// typed access on demand. Factor columns are declared by the model config, not
// sniffed.

#include <string>
#include <vector>

#include "ordcop/types.hpp"

namespace ordcop {

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> columns, std::vector<std::vector<std::string>> cells);

  Index n_rows() const { return cells_.empty() ? 0 : static_cast<Index>(cells_[0].size()); }
  Index n_cols() const { return static_cast<Index>(columns_.size()); }
  const std::vector<std::string>& columns() const { return columns_; }

  bool has_column(const std::string& name) const;
  // Throws MissingCovariate if absent.
  Index column_index(const std::string& name) const;
  // Throws InputError if any cell fails to parse as a double.
  Vector numeric_column(const std::string& name) const;
  const std::vector<std::string>& string_column(const std::string& name) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> cells_;  // column-major: cells_[col][row]
};

Dataset read_csv(const std::string& path);
Dataset parse_csv(const std::string& text);

// Writes columns of equal length with a header row; numeric cells must be
// pre-rendered by the caller.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& columns);

// Full-precision rendering used for all numeric text output.
std::string format_double(double x);

}  // namespace ordcop
