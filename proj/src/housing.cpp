#include "tcv/housing.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tcv/error.hpp"

namespace tcv {

namespace {

std::string trim_field(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim_field(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ingestion, "cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ingestion, "'" + path.string() + "' is empty");
  t.header = split_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_field(line).empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != t.header.size()) {
      throw Error(ErrorCode::ingestion, "line " + std::to_string(line_no) + " has " +
                                            std::to_string(fields.size()) + " fields, expected " +
                                            std::to_string(t.header.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const auto& f = fields[k];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), row[k]);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(row[k])) {
        throw Error(ErrorCode::ingestion, "line " + std::to_string(line_no) + ", column '" + t.header[k] +
                                              "': not a finite number: '" + f + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Dataset load_housing(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  static const std::vector<std::string> raw = {"CRIM", "ZN",  "INDUS",   "CHAS", "NOX",   "RM",  "AGE",
                                               "DIS",  "RAD", "TAX",     "PTRATIO", "B", "LSTAT"};
  const CsvTable t = read_csv(path);
  auto col = [&](const std::string& name) -> std::size_t {
    for (std::size_t k = 0; k < t.header.size(); ++k) {
      if (t.header[k] == name) return k;
    }
    throw Error(ErrorCode::ingestion, "housing data has no column '" + name + "'");
  };
  std::vector<std::size_t> raw_idx;
  for (const auto& name : raw) raw_idx.push_back(col(name));
  const std::size_t medv = col("MEDV");
  const std::size_t rm = col("RM"), dis = col("DIS"), rad = col("RAD"), lstat = col("LSTAT"), nox = col("NOX");

  const auto n = static_cast<Index>(t.rows.size());
  if (n != 506 && warnings) {
    warnings->push_back("housing data has " + std::to_string(n) + " rows, expected 506");
  }
  std::vector<std::string> names = raw;
  for (const char* d : {"RM2", "logDIS", "logRAD", "logLSTAT", "NOX2"}) names.emplace_back(d);
  Eigen::MatrixXd x(n, static_cast<Index>(names.size()));
  Eigen::VectorXd y(n);
  auto positive_log = [&](std::size_t row, std::size_t c) {
    const double v = t.rows[row][c];
    if (!(v > 0.0)) {
      throw Error(ErrorCode::ingestion, "row " + std::to_string(row + 1) + ": " + t.header[c] +
                                            " must be positive for its log, got " + std::to_string(v));
    }
    return std::log(v);
  };
  for (Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    const auto& row = t.rows[r];
    for (std::size_t k = 0; k < raw_idx.size(); ++k) x(i, static_cast<Index>(k)) = row[raw_idx[k]];
    auto at = static_cast<Index>(raw.size());
    x(i, at++) = row[rm] * row[rm];
    x(i, at++) = positive_log(r, dis);
    x(i, at++) = positive_log(r, rad);
    x(i, at++) = positive_log(r, lstat);
    x(i, at++) = row[nox] * row[nox];
    y[i] = positive_log(r, medv);
  }
  return Dataset(std::move(x), std::move(y), std::move(names));
}

Dataset load_plain_csv(const std::filesystem::path& path, const std::string& response) {
  const CsvTable t = read_csv(path);
  std::size_t yc = t.header.size();
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    if (t.header[k] == response) yc = k;
  }
  if (yc == t.header.size()) throw Error(ErrorCode::ingestion, "no response column '" + response + "'");
  if (t.header.size() < 2) throw Error(ErrorCode::ingestion, "need at least one predictor column");
  const auto n = static_cast<Index>(t.rows.size());
  Eigen::MatrixXd x(n, static_cast<Index>(t.header.size() - 1));
  Eigen::VectorXd y(n);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    if (k != yc) names.push_back(t.header[k]);
  }
  for (Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    Index c = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k == yc) {
        y[i] = row[k];
      } else {
        x(i, c++) = row[k];
      }
    }
  }
  return Dataset(std::move(x), std::move(y), std::move(names));
}

}  // namespace tcv
