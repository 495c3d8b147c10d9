#pragma once

// RFC-4180 reading and the fixed-format writers used by every report.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "crvar/errors.hpp"

namespace crvar::cli {

/// Bad input file: parse failures, unknown columns, bad cells.
class InputError : public Error {
 public:
  using Error::Error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  ///< same width as header

  /// Column index by name, or -1.
  int column(std::string_view name) const;
};

/// Quoted fields, doubled quotes, embedded separators/newlines and CRLF are
/// accepted. Blank trailing lines are ignored; ragged rows are an error.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);
/// Shortest text that parses back to the same double, NA for NaN.
std::string format_double(double x);
/// Parses a numeric cell. Empty, NA, NaN and "." give NaN; anything else
/// non-numeric throws InputError naming the location.
double parse_cell(const std::string& cell, std::string_view where);

/// Matrix with header v1..vn.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

/// Writes text, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Lowercase [a-z0-9_-]; other characters become '_'.
std::string file_label(std::string_view name);

}  // namespace crvar::cli
