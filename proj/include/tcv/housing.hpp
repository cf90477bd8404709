#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tcv/core.hpp"

namespace tcv {

// Numeric CSV with a header row; quotes around names are stripped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

// Housing data: response log(MEDV); predictors are the 13 raw columns plus
// RM2, logDIS, logRAD, logLSTAT and NOX2. A row count other than 506 adds a
// warning; missing columns or nonpositive log inputs raise ingestion errors.
Dataset load_housing(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

// Any numeric CSV: `response` names the y column, all others are predictors.
Dataset load_plain_csv(const std::filesystem::path& path, const std::string& response);

}  // namespace tcv
