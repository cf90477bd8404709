#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tcv/bench.hpp"

namespace tcv {

// Experiment configuration documents. A raw document is validated (unknown
// keys rejected, types and ranges checked) and expanded with every default,
// giving the canonical form; the canonical dump is what gets hashed.
nlohmann::json canonicalize_config(const nlohmann::json& raw);
std::string canonical_dump(const nlohmann::json& canonical);
// FNV-1a 64 of the canonical dump, 16 hex digits.
std::string config_hash(const nlohmann::json& canonical);

std::vector<std::string> preset_names();
// Canonical preset; full_scale switches to the published replication counts.
nlohmann::json preset(std::string_view name, bool full_scale = false);

// Pieces of the schema, usable on their own.
Region parse_region(const nlohmann::json& j);
nlohmann::json region_to_json(const Region& r);
WeightFunction parse_weight(const nlohmann::json& j);
MtcvPlan parse_plan(const nlohmann::json& j);
CandidateProcedure parse_candidate(const nlohmann::json& j, int id, const std::vector<std::string>& columns);
Roster parse_roster(const nlohmann::json& j, const std::vector<std::string>& columns);
DgpPtr make_dgp(const nlohmann::json& source);

// Fixed data named by a csv source, resolved against base_dir.
Dataset load_source_data(const nlohmann::json& source, const std::filesystem::path& base_dir,
                         std::vector<std::string>* warnings = nullptr);

bool runs_probes(const nlohmann::json& canonical);

ExperimentSpec build_experiment(const nlohmann::json& canonical, const std::filesystem::path& base_dir,
                                std::vector<std::string>* warnings = nullptr);

// Probe results as JSON, one entry per probe of the requested kind ("" = all).
nlohmann::json run_probes(const nlohmann::json& canonical, std::string_view kind, Exec exec);

}  // namespace tcv
