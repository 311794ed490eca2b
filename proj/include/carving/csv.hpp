#pragma once

#include <string>

#include "carving/types.hpp"

namespace carving {

// Numeric CSV: UTF-8, comma-separated, optional single header row, one
// observation per row. Ragged rows or non-numeric cells raise a
// ValidationError naming the row and column (1-based).
Matrix read_csv_matrix(const std::string& path);
Vector read_csv_vector(const std::string& path);

void write_csv_matrix(const std::string& path, const Matrix& m);

// Exact shortest round-trip formatting; "inf"/"-inf" for infinities.
std::string format_double(double v);

}  // namespace carving
