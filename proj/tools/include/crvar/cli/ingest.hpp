#pragma once

// Panel ingestion: stationarity transforms, event windows and per-group
// pre/post samples.
//
// Transform codes (x is the raw series, Δ the first difference):
//   1  x_t
//   2  Δx_t
//   3  Δ²x_t
//   4  log x_t
//   5  Δ log x_t
//   6  Δ² log x_t
//   7  Δ(x_t / x_{t-1} - 1)

#include <filesystem>
#include <string>
#include <vector>

#include "crvar/cli/csv.hpp"
#include "crvar/likelihood.hpp"

namespace crvar::cli {

/// Same length as x; the first entries are NaN where the transform needs
/// earlier values. NaN inputs propagate. Throws InputError for an unknown
/// code and DomainError for a log of a non-positive value.
std::vector<double> apply_tcode(const std::vector<double>& x, int tcode);

/// "YYYY-MM-DD" or "M/D/YYYY" → "YYYY-MM-DD"; empty string if neither.
std::string normalize_date(const std::string& text);

struct DateWindow {
  std::string start;  ///< inclusive, ISO
  std::string end;    ///< inclusive, ISO
};

struct SeriesSpec {
  std::string name;
  std::string group;
  int tcode = 0;  ///< 0: take it from the panel's "transform" row
};

/// Mapping file with header series,group and an optional tcode column.
std::vector<SeriesSpec> read_group_map(const std::filesystem::path& path);

struct PanelSpec {
  std::filesystem::path csv_path;
  std::string date_column;  ///< empty: first column
  std::vector<SeriesSpec> series;
  DateWindow pre;
  DateWindow post;
  bool match_length = true;
  int min_length = 12;  ///< shortest usable window (p_max + 2)

  void validate() const;
};

struct GroupData {
  std::string group;
  std::vector<std::string> series;
  std::vector<std::string> pre_dates;
  std::vector<std::string> post_dates;
  Sample pre;   ///< centered
  Sample post;  ///< centered
  std::string error;  ///< non-empty when the group cannot be used
};

struct Panel {
  std::vector<std::string> dates;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  ///< per series, raw
  std::vector<int> transform_row;           ///< per series, 0 if absent
};

/// Reads the panel: rows whose date cell is "transform" carry tcodes,
/// "factors" rows are skipped, everything else must be a date and dates
/// must increase.
Panel read_panel(const std::filesystem::path& path, const std::string& date_column);

/// Transforms every series, slices both windows, trims rows with missing
/// values at the start of each window, optionally truncates both windows to
/// the shorter length (pre keeps its last rows, post its first rows) and
/// centers the columns. Problems confined to one group are reported in
/// GroupData::error; file-level problems throw.
std::vector<GroupData> ingest(const PanelSpec& spec);

}  // namespace crvar::cli
