// tcv: run experiments, selections and probes from JSON configs or presets.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tcv/config.hpp"
#include "tcv/error.hpp"
#include "tcv/housing.hpp"
#include "tcv/parallel.hpp"
#include "tcv/report.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  bool full_scale = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON experiment config");
  app->add_option("--preset", c.preset, "built-in preset name");
  app->add_option("--seed", c.seed, "master seed (overrides the config)");
  app->add_option("--threads", c.threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "output directory (overrides the config)");
  app->add_flag("--full-scale", c.full_scale, "use the published replication counts (presets only)");
}

// Relative data paths resolve against the config file's directory, then the
// working directory, then the source tree.
fs::path base_dir_for(const Common& c, const json& canonical) {
  std::vector<fs::path> bases;
  if (!c.config.empty()) bases.push_back(fs::absolute(c.config).parent_path());
  bases.push_back(fs::current_path());
#ifdef TCV_SOURCE_DIR
  bases.emplace_back(TCV_SOURCE_DIR);
#endif
  const json& src = canonical["source"];
  if (src["kind"] == "csv") {
    const fs::path p = src["path"].get<std::string>();
    if (p.is_absolute()) return bases.front();
    for (const auto& b : bases) {
      if (fs::exists(b / p)) return b;
    }
  }
  return bases.front();
}

json load_config(const Common& c) {
  if (c.config.empty() == c.preset.empty()) {
    throw tcv::Error(tcv::ErrorCode::invalid_config, "give exactly one of --config or --preset");
  }
  json canonical;
  if (!c.preset.empty()) {
    canonical = tcv::preset(c.preset, c.full_scale);
  } else {
    std::ifstream in(c.config);
    if (!in) throw tcv::Error(tcv::ErrorCode::invalid_config, "cannot open '" + c.config + "'");
    json raw;
    try {
      raw = json::parse(in);
    } catch (const json::exception& e) {
      throw tcv::Error(tcv::ErrorCode::schema, c.config + ": " + e.what());
    }
    if (c.full_scale) {
      throw tcv::Error(tcv::ErrorCode::invalid_config, "--full-scale applies to presets only");
    }
    canonical = tcv::canonicalize_config(raw);
  }
  if (c.seed) canonical["seed"] = *c.seed;
  if (c.threads) canonical["threads"] = *c.threads;
  if (!c.out.empty()) canonical["output_dir"] = c.out;
  return tcv::canonicalize_config(canonical);
}

tcv::Exec setup_threads(const json& canonical) {
  const int threads = canonical["threads"];
  tcv::set_thread_count(threads);
  return threads > 1 ? tcv::Exec::parallel : tcv::Exec::serial;
}

tcv::RunStamp stamp_of(const json& canonical) {
  return {tcv::config_hash(canonical), canonical["seed"].get<std::uint64_t>()};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int run_probe_command(const json& canonical, const std::string& kind, tcv::Exec exec) {
  const auto t0 = std::chrono::steady_clock::now();
  const json results = tcv::run_probes(canonical, kind, exec);
  const auto stamp = stamp_of(canonical);
  const fs::path dir = canonical["output_dir"].get<std::string>();
  std::ostringstream csv;
  tcv::write_probe_csv(csv, results, stamp);
  const std::string name = kind.empty() ? "probes.csv" : "probe_" + kind + ".csv";
  tcv::write_text_file(dir, name, csv.str());
  tcv::write_text_file(dir, kind.empty() ? "probes.json" : "probe_" + kind + ".json", results.dump(2) + "\n");
  const json m = tcv::manifest(canonical, stamp, seconds_since(t0), {name}, {});
  tcv::write_text_file(dir, "manifest.json", m.dump(2) + "\n");
  std::cout << results.dump(2) << "\n";
  return 0;
}

int cmd_run(const Common& c) {
  const json canonical = load_config(c);
  const tcv::Exec exec = setup_threads(canonical);
  if (tcv::runs_probes(canonical)) return run_probe_command(canonical, "", exec);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> warnings;
  const tcv::ExperimentSpec spec = tcv::build_experiment(canonical, base_dir_for(c, canonical), &warnings);
  report_warnings(warnings);
  const tcv::ReplicationSummary summary = tcv::run_experiment(spec);
  const auto stamp = stamp_of(canonical);
  const fs::path dir = canonical["output_dir"].get<std::string>();

  std::ostringstream table, selection;
  tcv::write_table_csv(table, summary, stamp);
  tcv::write_selection_csv(selection, summary, stamp);
  tcv::write_text_file(dir, "table.csv", table.str());
  tcv::write_text_file(dir, "selection.csv", selection.str());
  const json m = tcv::manifest(canonical, stamp, seconds_since(t0), {"table.csv", "selection.csv"}, warnings);
  tcv::write_text_file(dir, "manifest.json", m.dump(2) + "\n");
  tcv::print_summary(std::cout, summary);
  std::cout << "wrote " << (dir / "table.csv").string() << "\n";
  return 0;
}

struct SelectArgs {
  Common common;
  std::string data;
  std::string response = "y";
  std::string format = "plain";
  std::string selector;
};

int cmd_select(const SelectArgs& a) {
  json canonical = load_config(a.common);
  if (!a.data.empty()) {
    canonical["source"] = {{"kind", "csv"}, {"path", fs::absolute(a.data).string()}, {"format", a.format},
                           {"response", a.format == "housing" ? "logMEDV" : a.response}};
    canonical = tcv::canonicalize_config(canonical);
  }
  if (canonical["source"]["kind"] != "csv") {
    throw tcv::Error(tcv::ErrorCode::invalid_config, "select needs data: pass --data or a csv source");
  }
  const tcv::Exec exec = setup_threads(canonical);
  std::vector<std::string> warnings;
  const tcv::Dataset data = tcv::load_source_data(canonical["source"], base_dir_for(a.common, canonical), &warnings);
  report_warnings(warnings);
  const auto columns = data.column_names();
  const tcv::Roster roster = tcv::parse_roster(canonical["roster"], columns);
  tcv::MtcvPlan plan = tcv::parse_plan(canonical["plan"]);
  plan.exec = exec;
  if (plan.stratify) plan.stratify = plan.stratify->bound_to(columns);

  tcv::WeightFunction w = tcv::WeightFunction::uniform();
  std::string label = "CV";
  for (const auto& s : canonical["selectors"]) {
    if (a.selector.empty() || s["name"] == a.selector) {
      w = tcv::parse_weight(s["weight"]).bound_to(columns);
      label = s["name"];
      break;
    }
  }
  if (!a.selector.empty() && label != a.selector && a.selector != "CV") {
    throw tcv::Error(tcv::ErrorCode::invalid_config, "no selector named '" + a.selector + "'");
  }
  tcv::RngSpec rng;
  rng.master_seed = canonical["seed"].get<std::uint64_t>();
  const tcv::SelectionReport report = tcv::select_mtcv(roster, data, plan, w, rng);

  std::cout << label << " winner: " << report.names[static_cast<std::size_t>(report.winner)] << "\n";
  std::cout << "candidate,mean_score,vote_share\n";
  for (std::size_t j = 0; j < report.names.size(); ++j) {
    std::cout << report.names[j] << ',' << tcv::format_number(report.mean_scores[j]) << ','
              << tcv::format_number(report.vote_shares[j]) << "\n";
  }
  if (!a.common.out.empty()) {
    const auto stamp = stamp_of(canonical);
    json j = tcv::to_json(report);
    j["config_hash"] = stamp.config_hash;
    j["seed"] = stamp.seed;
    std::ostringstream csv;
    csv << "# config_hash=" << stamp.config_hash << ",seed=" << stamp.seed << "\n";
    tcv::write_scores_csv(csv, report);
    tcv::write_text_file(a.common.out, "selection.json", j.dump(2) + "\n");
    tcv::write_text_file(a.common.out, "scores.csv", csv.str());
  }
  return 0;
}

int cmd_dump(const Common& c, std::optional<long long> n, const std::string& file) {
  const json canonical = load_config(c);
  if (canonical["source"]["kind"] == "csv") {
    throw tcv::Error(tcv::ErrorCode::invalid_config, "dump-dgp needs a generator source");
  }
  const tcv::DgpPtr dgp = tcv::make_dgp(canonical["source"]);
  tcv::RngSpec rng;
  rng.master_seed = canonical["seed"].get<std::uint64_t>();
  const tcv::Index rows = n ? static_cast<tcv::Index>(*n) : canonical["source"]["n"].get<tcv::Index>();
  const tcv::Dataset data = dgp->sample(rows, rng);
  const auto stamp = stamp_of(canonical);
  std::ostringstream csv;
  csv << "# config_hash=" << stamp.config_hash << ",seed=" << stamp.seed << "\n";
  tcv::write_dataset_csv(csv, data);
  if (file.empty() || file == "-") {
    std::cout << csv.str();
  } else {
    const fs::path p = file;
    tcv::write_text_file(p.parent_path().empty() ? fs::path(".") : p.parent_path(), p.filename().string(), csv.str());
  }
  return 0;
}

int fail(const tcv::Error& e) {
  json err{{"error", {{"code", std::string(tcv::to_string(e.code()))}, {"message", e.what()}}}};
  std::cerr << err.dump() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Targeted cross-validation experiments"};
  app.require_subcommand(1);

  Common run_opts;
  auto* run = app.add_subcommand("run", "run an experiment and write its tables");
  add_common(run, run_opts);

  SelectArgs sel;
  auto* select = app.add_subcommand("select", "one-shot selection on a CSV data set");
  add_common(select, sel.common);
  select->add_option("--data", sel.data, "CSV data (overrides the config source)");
  select->add_option("--response", sel.response, "response column for plain CSV");
  select->add_option("--format", sel.format, "plain or housing")->check(CLI::IsMember({"plain", "housing"}));
  select->add_option("--selector", sel.selector, "selector name from the config (default: first; CV for W = 1)");

  Common probe_opts;
  std::string probe_kind;
  auto* probe = app.add_subcommand("probe", "run the config's probes");
  add_common(probe, probe_opts);
  probe->add_option("kind", probe_kind, "ranking, consistency, l4l2 or rate_toy (default: all)")
      ->check(CLI::IsMember({"ranking", "consistency", "l4l2", "rate_toy"}));

  Common dump_opts;
  std::optional<long long> dump_n;
  std::string dump_file;
  auto* dump = app.add_subcommand("dump-dgp", "write one generated data set as CSV");
  add_common(dump, dump_opts);
  dump->add_option("--n", dump_n, "rows (default: the source n)")->check(CLI::PositiveNumber);
  dump->add_option("--file", dump_file, "output file (default: stdout)");

  std::string preset_name;
  bool preset_full = false;
  auto* pre = app.add_subcommand("preset", "print a built-in preset as canonical JSON");
  pre->add_option("name", preset_name, "preset name (omit to list)");
  pre->add_flag("--full-scale", preset_full, "published replication counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*select) return cmd_select(sel);
    if (*probe) {
      const json canonical = load_config(probe_opts);
      return run_probe_command(canonical, probe_kind, setup_threads(canonical));
    }
    if (*dump) return cmd_dump(dump_opts, dump_n, dump_file);
    if (*pre) {
      if (preset_name.empty()) {
        for (const auto& n : tcv::preset_names()) std::cout << n << "\n";
      } else {
        std::cout << tcv::canonical_dump(tcv::preset(preset_name, preset_full)) << "\n";
      }
      return 0;
    }
  } catch (const tcv::Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    return fail(tcv::Error(tcv::ErrorCode::invalid_config, e.what()));
  }
  return 0;
}
