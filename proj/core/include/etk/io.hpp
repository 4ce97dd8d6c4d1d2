#pragma once

// Delimited-text ingestion: comma separated, header row, UTF-8, period
// decimal separator. Double-quoted fields may contain commas and "" escapes.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "etk/core.hpp"

namespace etk {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

struct ColumnRoles {
  std::string treatment = "T";
  std::optional<std::string> outcome = "Y";
  // Empty means every column other than treatment and outcome.
  std::vector<std::string> covariates;
};

// Empty outcome cells become missing outcomes. A missing outcome column is an
// error only when require_outcome is set. Errors name the column and row.
Dataset dataset_from_csv(const CsvTable& table, const ColumnRoles& roles, bool require_outcome);

// Columns in the order covariates, treatment, outcome.
std::string dataset_to_csv(const Dataset& dataset, const ColumnRoles& roles);

// Shortest text that parses back to the same double.
std::string format_number(double value);

}  // namespace etk
