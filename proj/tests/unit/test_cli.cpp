#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tcv/config.hpp"
#include "tcv/error.hpp"
#include "tcv/housing.hpp"
#include "tcv/report.hpp"

using namespace tcv;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_sim2() {
  return json::parse(R"({
    "experiment": "sim2",
    "seed": 42,
    "source": {"kind": "sim2", "n": 60},
    "roster": [
      {"name": "NW", "estimator": {"kind": "nw", "grid_count": 8}},
      {"name": "Linear", "estimator": {"kind": "ols", "design": ["1", "X"]}}
    ],
    "selectors": [{"name": "TCV_1", "weight": {"kind": "piecewise",
                   "region": [{"column": "X", "op": "<", "value": 0.1}], "w_in": 1, "w_out": 0}}],
    "plan": {"n1": 30, "K": 4},
    "eval": {"eval_n": 200},
    "eval_region": [{"column": "X", "op": "<", "value": 0.1}],
    "replications": 3
  })");
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_config;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tcv_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("canonical config fills defaults and is stable") {
  const json c = canonicalize_config(small_sim2());
  CHECK(c["plan"]["aggregator"] == "average");
  CHECK(c["plan"]["train_fraction"] == 0.5);
  CHECK(c["roster"][0]["estimator"]["lo_factor"] == 0.05);
  CHECK(c["include_cv"] == true);
  CHECK(canonicalize_config(c) == c);
  CHECK(config_hash(c) == config_hash(canonicalize_config(small_sim2())));
  CHECK(config_hash(c).size() == 16);
  json other = small_sim2();
  other["seed"] = 43;
  CHECK(config_hash(canonicalize_config(other)) != config_hash(c));
}

TEST_CASE("schema violations are rejected") {
  json bad = small_sim2();
  bad["plan"]["K"] = 0;
  CHECK(code_of([&] { canonicalize_config(bad); }) == ErrorCode::schema);
  bad = small_sim2();
  bad["roster"][0]["estimator"]["bandwidth"] = 1.0;
  CHECK(code_of([&] { canonicalize_config(bad); }) == ErrorCode::schema);
  bad = small_sim2();
  bad["experiment"] = "sim9";
  CHECK(code_of([&] { canonicalize_config(bad); }) == ErrorCode::schema);
  bad = small_sim2();
  bad["eval_region"][0]["op"] = "=<";
  CHECK_THROWS_AS(canonicalize_config(bad), Error);
  bad = small_sim2();
  bad["replications"] = "three";
  CHECK(code_of([&] { canonicalize_config(bad); }) == ErrorCode::schema);
}

TEST_CASE("unknown columns fail when the experiment is built") {
  json c = small_sim2();
  c["eval_region"][0]["column"] = "Z";
  const json canonical = canonicalize_config(c);
  CHECK_THROWS_AS(build_experiment(canonical, "."), Error);
}

TEST_CASE("every preset canonicalizes and builds") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const json c = preset(name);
    CHECK(canonicalize_config(c) == c);
    if (runs_probes(c)) continue;
    if (c["source"]["kind"] == "csv") continue;
    const ExperimentSpec spec = build_experiment(c, ".");
    CHECK(spec.roster.size() == c["roster"].size());
  }
  CHECK(preset("sim1", true)["replications"] == 500);
  CHECK(preset("sim1")["replications"] == 200);
  CHECK(preset("boston")["eval"]["stratify"] == true);
  CHECK_THROWS_AS(preset("nope"), Error);
}

TEST_CASE("weight parsing round trip") {
  const json j = json::parse(R"({"kind": "piecewise", "region": [{"column": "X", "op": "<", "value": 0.1}],
                                 "w_in": 0.8, "w_out": 0.2})");
  const auto w = parse_weight(j).bound_to({"X"});
  Eigen::RowVectorXd r(1);
  r << 0.05;
  CHECK(w.at(r, 1) == doctest::Approx(0.8));
  const Region reg = parse_region(j["region"]);
  CHECK(region_to_json(reg) == canonicalize_config(small_sim2())["eval_region"]);
}

TEST_CASE("housing ingestion") {
  const fs::path path = fs::path(TCV_DATA_DIR) / "boston_housing.csv";
  std::vector<std::string> warnings;
  const Dataset d = load_housing(path, &warnings);
  CHECK(warnings.empty());
  CHECK(d.rows() == 506);
  CHECK(d.y()[0] == doctest::Approx(std::log(24.0)));
  CHECK(d.y()[0] == doctest::Approx(3.178).epsilon(1e-3));
  const Index age = d.column("AGE");
  Index young = 0;
  for (Index i = 0; i < d.rows(); ++i) young += d.x()(i, age) < 50.0 ? 1 : 0;
  CHECK(young == 147);
  CHECK(d.x()(0, d.column("RM2")) == doctest::Approx(d.x()(0, d.column("RM")) * d.x()(0, d.column("RM"))));

  const fs::path dir = temp_dir("housing");
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  {
    std::ofstream out(dir / "bad.csv");
    out << header << "\n";
    // Overwrite DIS (8th field) with 0.
    std::vector<std::string> fields;
    std::stringstream ss(first);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    fields[7] = "0";
    for (std::size_t k = 0; k < fields.size(); ++k) out << (k ? "," : "") << fields[k];
    out << "\n";
  }
  CHECK(code_of([&] { load_housing(dir / "bad.csv"); }) == ErrorCode::ingestion);
  std::vector<std::string> short_warn;
  {
    std::ofstream out(dir / "short.csv");
    out << header << "\n" << first << "\n";
  }
  load_housing(dir / "short.csv", &short_warn);
  CHECK(short_warn.size() == 1);
  CHECK(code_of([&] { load_housing(dir / "missing.csv"); }) == ErrorCode::ingestion);
}

TEST_CASE("report CSV layout") {
  const json c = canonicalize_config(small_sim2());
  const ExperimentSpec spec = build_experiment(c, ".");
  const ReplicationSummary s = run_experiment(spec);
  const RunStamp stamp{config_hash(c), 42};
  std::ostringstream out;
  write_table_csv(out, s, stamp);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "# config_hash=" + stamp.config_hash + ",seed=42");
  std::getline(lines, line);
  CHECK(line == "method,metric,mean,se");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 4 * 3);
  CHECK(format_number(1.0 / 3.0) == "0.333333");
  CHECK(format_number(NAN) == "nan");
}

TEST_CASE("identical runs give byte-identical CSV") {
  const json c = canonicalize_config(small_sim2());
  auto render = [&] {
    const ReplicationSummary s = run_experiment(build_experiment(c, "."));
    std::ostringstream out;
    write_table_csv(out, s, {config_hash(c), 42});
    write_selection_csv(out, s, {config_hash(c), 42});
    return out.str();
  };
  CHECK(render() == render());
}

TEST_CASE("command line tool") {
  const fs::path dir = temp_dir("cli");
  const std::string tool = TCV_TOOL_PATH;
  {
    std::ofstream f(dir / "ok.json");
    json c = small_sim2();
    c["output_dir"] = (dir / "out").string();
    f << c.dump();
  }
  {
    std::ofstream f(dir / "bad.json");
    json c = small_sim2();
    c["plan"]["K"] = 0;
    c["output_dir"] = (dir / "never").string();
    f << c.dump();
  }
  const std::string quiet = " >" + (dir / "log.txt").string() + " 2>" + (dir / "err.txt").string();
  CHECK(std::system((tool + " run --config " + (dir / "ok.json").string() + quiet).c_str()) == 0);
  const std::string first = slurp(dir / "out" / "table.csv");
  CHECK(first.rfind("# config_hash=", 0) == 0);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(std::system((tool + " run --config " + (dir / "ok.json").string() + quiet).c_str()) == 0);
  CHECK(slurp(dir / "out" / "table.csv") == first);

  CHECK(std::system((tool + " run --config " + (dir / "bad.json").string() + quiet).c_str()) != 0);
  CHECK_FALSE(fs::exists(dir / "never"));
  const json err = json::parse(slurp(dir / "err.txt"));
  CHECK(err["error"]["code"] == "schema");

  CHECK(std::system((tool + " dump-dgp --preset sim2 --n 5 --file " + (dir / "d.csv").string() + quiet).c_str()) == 0);
  const std::string dumped = slurp(dir / "d.csv");
  CHECK(std::count(dumped.begin(), dumped.end(), '\n') == 7);
}
