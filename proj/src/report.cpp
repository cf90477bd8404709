#include "tcv/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "tcv/error.hpp"

namespace tcv {

using nlohmann::json;

namespace {

void stamp_line(std::ostream& out, const RunStamp& stamp) {
  out << "# config_hash=" << stamp.config_hash << ",seed=" << stamp.seed << "\n";
}

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else if (j.is_number_float()) {
    out.emplace_back(prefix, format_number(j.get<double>()));
  } else if (j.is_string()) {
    out.emplace_back(prefix, j.get<std::string>());
  } else {
    out.emplace_back(prefix, j.dump());
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_table_csv(std::ostream& out, const ReplicationSummary& summary, const RunStamp& stamp) {
  stamp_line(out, stamp);
  out << "method,metric,mean,se\n";
  for (const auto& row : summary.rows) {
    const std::pair<const char*, const MetricStat*> metrics[] = {
        {"local", &row.local}, {"outside", &row.outside}, {"overall", &row.overall}};
    for (const auto& [name, stat] : metrics) {
      out << row.method << ',' << name << ',' << format_number(stat->mean) << ',' << format_number(stat->se)
          << '\n';
    }
  }
}

void write_selection_csv(std::ostream& out, const ReplicationSummary& summary, const RunStamp& stamp) {
  stamp_line(out, stamp);
  out << "selector,aggregator,candidate,frequency\n";
  for (const auto& f : summary.frequencies) {
    for (std::size_t j = 0; j < summary.candidates.size(); ++j) {
      out << f.selector << ",average," << summary.candidates[j] << ',' << format_number(f.average[j]) << '\n';
    }
    for (std::size_t j = 0; j < summary.candidates.size(); ++j) {
      out << f.selector << ",vote," << summary.candidates[j] << ',' << format_number(f.vote[j]) << '\n';
    }
  }
}

void print_summary(std::ostream& out, const ReplicationSummary& summary) {
  out << summary.experiment << ": " << summary.n_replications << " replications, local metric "
      << to_string(summary.local_metric) << ", aggregator " << to_string(summary.aggregator) << "\n";
  std::size_t width = 8;
  for (const auto& r : summary.rows) width = std::max(width, r.method.size() + 2);
  out << std::left << std::setw(static_cast<int>(width)) << "method" << std::setw(26) << "local"
      << std::setw(26) << "outside"
      << "overall\n";
  auto cell = [](const MetricStat& s) { return format_number(s.mean) + " (" + format_number(s.se) + ") "; };
  for (const auto& r : summary.rows) {
    out << std::setw(static_cast<int>(width)) << r.method << std::setw(26) << cell(r.local) << std::setw(26)
        << cell(r.outside) << cell(r.overall) << "\n";
  }
  for (const auto& f : summary.frequencies) {
    out << f.selector << " picks (average):";
    for (std::size_t j = 0; j < summary.candidates.size(); ++j) {
      out << ' ' << summary.candidates[j] << '=' << format_number(f.average[j]);
    }
    out << "\n";
  }
  out << std::right;
}

void write_probe_csv(std::ostream& out, const json& probes, const RunStamp& stamp) {
  stamp_line(out, stamp);
  out << "probe,key,value\n";
  for (std::size_t i = 0; i < probes.size(); ++i) {
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(probes[i], "", rows);
    for (const auto& [k, v] : rows) out << i << ',' << k << ',' << v << '\n';
  }
}

json manifest(const json& canonical, const RunStamp& stamp, double runtime_seconds,
              const std::vector<std::string>& files, const std::vector<std::string>& warnings) {
  return {{"config_hash", stamp.config_hash},
          {"seed", stamp.seed},
          {"runtime_seconds", runtime_seconds},
          {"files", files},
          {"warnings", warnings},
          {"config", canonical}};
}

std::filesystem::path write_text_file(const std::filesystem::path& dir, const std::string& name,
                                      const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::invalid_config, "cannot create '" + dir.string() + "': " + ec.message());
  const auto path = dir / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::invalid_config, "cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw Error(ErrorCode::invalid_config, "write failed for '" + path.string() + "'");
  return path;
}

}  // namespace tcv
