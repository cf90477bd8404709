#pragma once

#include <json.hpp>

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "tcv/bench.hpp"

namespace tcv {

// Every output file starts with this line so it can be traced to its run.
struct RunStamp {
  std::string config_hash;
  std::uint64_t seed = 0;
};

// %.6g, with nan/inf spelled out.
std::string format_number(double v);

// method,metric,mean,se with metric in {local, outside, overall}.
void write_table_csv(std::ostream& out, const ReplicationSummary& summary, const RunStamp& stamp);
// selector,aggregator,candidate,frequency.
void write_selection_csv(std::ostream& out, const ReplicationSummary& summary, const RunStamp& stamp);
// Human-readable table for the terminal.
void print_summary(std::ostream& out, const ReplicationSummary& summary);

// Probe results as CSV rows: probe,key,value (flattened).
void write_probe_csv(std::ostream& out, const nlohmann::json& probes, const RunStamp& stamp);

nlohmann::json manifest(const nlohmann::json& canonical, const RunStamp& stamp, double runtime_seconds,
                        const std::vector<std::string>& files, const std::vector<std::string>& warnings);

// Writes `text` to dir/name, creating dir; returns the path.
std::filesystem::path write_text_file(const std::filesystem::path& dir, const std::string& name,
                                      const std::string& text);

}  // namespace tcv
