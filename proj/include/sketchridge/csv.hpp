#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sketchridge/linalg.hpp"

namespace sketchridge {

/// Comma-separated numeric table. The first row is taken as a header when
/// any of its fields fails to parse as a number.
struct CsvTable {
  std::optional<std::vector<std::string>> header;
  Matrix values;
};

/// Throws InvalidInput with a 1-based line number on ragged rows or
/// non-numeric fields.
CsvTable parse_csv(const std::string& text, const std::string& source = "<input>");
CsvTable read_csv(const std::string& path);

std::string matrix_to_csv(const Matrix& m);

/// Writes to `path` via a temporary file in the same directory and rename.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace sketchridge
