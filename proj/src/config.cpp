#include "tcv/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "tcv/error.hpp"
#include "tcv/housing.hpp"

namespace tcv {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& ctx, const std::string& what) {
  throw Error(ErrorCode::schema, ctx + ": " + what);
}

// Typed access to one JSON object that remembers which keys were read, so
// anything left over can be rejected.
class Fields {
 public:
  Fields(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j.is_object()) schema_error(ctx_, "must be an object");
  }

  bool has(const std::string& k) {
    used_.insert(k);
    return j_.contains(k) && !j_.at(k).is_null();
  }

  const json& at(const std::string& k) {
    if (!has(k)) schema_error(ctx_, "missing key '" + k + "'");
    return j_.at(k);
  }

  double number(const std::string& k, std::optional<double> def = std::nullopt) {
    if (!has(k)) {
      if (def) return *def;
      schema_error(ctx_, "missing key '" + k + "'");
    }
    const json& v = j_.at(k);
    if (!v.is_number()) schema_error(ctx_, "'" + k + "' must be a number");
    return v.get<double>();
  }

  std::int64_t integer(const std::string& k, std::optional<std::int64_t> def = std::nullopt) {
    if (!has(k)) {
      if (def) return *def;
      schema_error(ctx_, "missing key '" + k + "'");
    }
    const json& v = j_.at(k);
    if (!v.is_number_integer()) schema_error(ctx_, "'" + k + "' must be an integer");
    return v.get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const std::string& k, std::uint64_t def) {
    if (!has(k)) return def;
    const json& v = j_.at(k);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    schema_error(ctx_, "'" + k + "' must be a nonnegative integer");
  }

  bool flag(const std::string& k, bool def) {
    if (!has(k)) return def;
    const json& v = j_.at(k);
    if (!v.is_boolean()) schema_error(ctx_, "'" + k + "' must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& k, std::optional<std::string> def = std::nullopt) {
    if (!has(k)) {
      if (def) return *def;
      schema_error(ctx_, "missing key '" + k + "'");
    }
    const json& v = j_.at(k);
    if (!v.is_string()) schema_error(ctx_, "'" + k + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<std::string> strings(const std::string& k, std::vector<std::string> def = {}) {
    if (!has(k)) return def;
    const json& v = j_.at(k);
    if (!v.is_array()) schema_error(ctx_, "'" + k + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) schema_error(ctx_, "'" + k + "' must be an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  void done() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) schema_error(ctx_, "unknown key '" + k + "'");
    }
  }

  const std::string& ctx() const { return ctx_; }

 private:
  json j_;
  std::string ctx_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& ctx, const std::string& what) {
  if (!ok) schema_error(ctx, what);
}

// ------------------------------------------------------------- regions ----

json canon_region(const json& j, const std::string& ctx) {
  if (j.is_null()) return json::array();
  require(j.is_array(), ctx, "region must be an array of conditions");
  json out = json::array();
  for (std::size_t i = 0; i < j.size(); ++i) {
    Fields f(j[i], ctx + "[" + std::to_string(i) + "]");
    const std::string op = f.text("op");
    parse_region_op(op);
    out.push_back({{"column", f.text("column")}, {"op", op}, {"value", f.number("value")}});
    f.done();
  }
  return out;
}

// ------------------------------------------------------------- weights ----

json canon_weight(const json& j, const std::string& ctx) {
  Fields f(j, ctx);
  const std::string kind = f.text("kind");
  json out{{"kind", kind}};
  if (kind == "uniform") {
  } else if (kind == "region") {
    out["region"] = canon_region(f.at("region"), ctx + ".region");
    if (f.has("prob")) {
      const double p = f.number("prob");
      require(p > 0.0 && p <= 1.0, ctx, "'prob' must lie in (0, 1]");
      out["prob"] = p;
    } else {
      out["prob"] = nullptr;
    }
  } else if (kind == "piecewise") {
    out["region"] = canon_region(f.at("region"), ctx + ".region");
    const double in = f.number("w_in");
    const double o = f.number("w_out");
    require(in >= 0.0 && o >= 0.0 && in + o > 0.0, ctx, "piecewise levels must be >= 0 and not both 0");
    out["w_in"] = in;
    out["w_out"] = o;
  } else if (kind == "point") {
    const json& c = f.at("center");
    require(c.is_array() && !c.empty(), ctx, "'center' must be a nonempty array of numbers");
    for (const auto& v : c) require(v.is_number(), ctx, "'center' must be a nonempty array of numbers");
    out["center"] = c;
    if (f.has("exact_constant")) {
      const double e = f.number("exact_constant");
      require(e > 0.0, ctx, "'exact_constant' must be > 0");
      out["exact_constant"] = e;
    } else {
      out["exact_constant"] = nullptr;
    }
  } else if (kind == "variance") {
    out["region"] = canon_region(f.at("region"), ctx + ".region");
    const double in = f.number("inside");
    const double o = f.number("outside");
    const double norm = f.number("norm_const", 1.0);
    require(in > 0.0 && o > 0.0, ctx, "variances must be > 0");
    require(norm > 0.0, ctx, "'norm_const' must be > 0");
    out["inside"] = in;
    out["outside"] = o;
    out["norm_const"] = norm;
  } else {
    schema_error(ctx, "unknown weight kind '" + kind + "'");
  }
  if (f.has("scale")) {
    const double s = f.number("scale");
    require(s > 0.0, ctx, "'scale' must be > 0");
    out["scale"] = s;
  } else {
    out["scale"] = 1.0;
  }
  f.done();
  return out;
}

// ---------------------------------------------------------- estimators ----

json canon_estimator(const json& j, const std::string& ctx) {
  Fields f(j, ctx);
  const std::string kind = f.text("kind");
  json out{{"kind", kind}};
  if (kind == "ols") {
    const auto design = f.strings("design");
    require(!design.empty(), ctx, "'design' must list at least one term");
    parse_terms(design);
    out["design"] = design;
    out["rank_fallback"] = f.flag("rank_fallback", false);
  } else if (kind == "fourier") {
    const std::string t = f.text("truncation", "p2");
    require(t == "p1" || t == "p2", ctx, "'truncation' must be p1 or p2");
    out["truncation"] = t;
    out["column"] = f.text("column", "X");
  } else if (kind == "nw") {
    out["column"] = f.text("column", "X");
    const auto count = f.integer("grid_count", 30);
    const double lo = f.number("lo_factor", 0.05);
    const double hi = f.number("hi_factor", 20.0);
    require(count >= 1 && lo > 0.0 && hi >= lo, ctx, "invalid bandwidth grid");
    out["grid_count"] = count;
    out["lo_factor"] = lo;
    out["hi_factor"] = hi;
  } else if (kind == "lasso") {
    const LassoConfig d;
    const auto len = f.integer("path_length", d.path_length);
    const double dec = f.number("decades", d.decades);
    const auto folds = f.integer("folds", d.folds);
    const double tol = f.number("tolerance", d.tolerance);
    const auto sweeps = f.integer("max_sweeps", d.max_sweeps);
    const double r2 = f.number("max_r2", d.max_r2);
    require(len >= 1 && dec >= 0.0 && folds >= 2 && tol > 0.0 && sweeps >= 1, ctx, "invalid lasso settings");
    out["path_length"] = len;
    out["decades"] = dec;
    out["folds"] = folds;
    out["tolerance"] = tol;
    out["max_sweeps"] = sweeps;
    out["standardize"] = f.flag("standardize", d.standardize);
    out["max_r2"] = r2;
    if (f.has("lambda")) {
      const double l = f.number("lambda");
      require(l >= 0.0, ctx, "'lambda' must be >= 0");
      out["lambda"] = l;
    } else {
      out["lambda"] = nullptr;
    }
  } else if (kind == "forest") {
    const ForestConfig d;
    const auto trees = f.integer("n_trees", d.n_trees);
    const auto mtry = f.integer("mtry", d.mtry);
    const auto leaf = f.integer("min_leaf", d.min_leaf);
    require(trees >= 1 && mtry >= 1 && leaf >= 1, ctx, "invalid forest settings");
    out["n_trees"] = trees;
    out["mtry"] = mtry;
    out["min_leaf"] = leaf;
    if (f.has("max_depth")) {
      const auto depth = f.integer("max_depth");
      require(depth >= 0, ctx, "'max_depth' must be >= 0");
      out["max_depth"] = depth;
    } else {
      out["max_depth"] = nullptr;
    }
    out["bootstrap"] = f.flag("bootstrap", d.bootstrap);
  } else if (kind == "additive_spline") {
    out["smooth"] = f.strings("smooth");
    out["linear"] = f.strings("linear");
    const auto df = f.integer("df", 3);
    require(df >= 1, ctx, "'df' must be >= 1");
    require(!out["smooth"].empty() || !out["linear"].empty(), ctx, "additive model needs terms");
    out["df"] = df;
    out["rank_fallback"] = f.flag("rank_fallback", false);
  } else {
    schema_error(ctx, "unknown estimator kind '" + kind + "'");
  }
  f.done();
  return out;
}

json canon_candidate(const json& j, const std::string& ctx) {
  Fields f(j, ctx);
  json out;
  out["name"] = f.text("name");
  require(!out["name"].get<std::string>().empty(), ctx, "'name' must be nonempty");
  out["estimator"] = canon_estimator(f.at("estimator"), ctx + ".estimator");
  out["local"] = f.has("local") ? canon_region(f.at("local"), ctx + ".local") : json(nullptr);
  const auto floor = f.integer("min_local_rows", 10);
  require(floor >= 1, ctx, "'min_local_rows' must be >= 1");
  out["min_local_rows"] = floor;
  f.done();
  return out;
}

// ---------------------------------------------------------------- plan ----

json canon_plan(const json& j, const std::string& ctx) {
  Fields f(j.is_null() ? json::object() : j, ctx);
  json out;
  const auto n1 = f.integer("n1", 0);
  require(n1 >= 0, ctx, "'n1' must be >= 0");
  const double frac = f.number("train_fraction", 0.5);
  require(frac > 0.0 && frac < 1.0, ctx, "'train_fraction' must lie in (0, 1)");
  const auto k = f.integer("K", 100);
  require(k >= 1, ctx, "'K' must be >= 1");
  const std::string agg = f.text("aggregator", "average");
  parse_aggregator(agg);
  const std::string zero = f.text("zero_weight_policy", "skip_split");
  parse_zero_weight_policy(zero);
  const std::string unfit = f.text("unfittable_policy", "error");
  parse_unfittable_policy(unfit);
  out["n1"] = n1;
  out["train_fraction"] = frac;
  out["K"] = k;
  out["aggregator"] = agg;
  out["stratify"] = f.has("stratify") ? canon_region(f.at("stratify"), ctx + ".stratify") : json(nullptr);
  out["zero_weight_policy"] = zero;
  out["unfittable_policy"] = unfit;
  f.done();
  return out;
}

json canon_eval(const json& j, const std::string& ctx) {
  Fields f(j.is_null() ? json::object() : j, ctx);
  const std::string protocol = f.text("protocol", "independent");
  json out{{"protocol", protocol}};
  if (protocol == "independent") {
    const auto n = f.integer("eval_n", 5000);
    require(n >= 1, ctx, "'eval_n' must be >= 1");
    out["eval_n"] = n;
  } else if (protocol == "holdout") {
    const double frac = f.number("fraction", 0.2);
    require(frac > 0.0 && frac < 1.0, ctx, "'fraction' must lie in (0, 1)");
    out["fraction"] = frac;
    out["stratify"] = f.flag("stratify", false);
  } else {
    schema_error(ctx, "unknown protocol '" + protocol + "'");
  }
  f.done();
  return out;
}

// -------------------------------------------------------------- source ----

json canon_source(const json& j, const std::string& ctx) {
  Fields f(j, ctx);
  const std::string kind = f.text("kind");
  json out{{"kind", kind}};
  auto positive_n = [&](std::int64_t def) {
    const auto n = f.integer("n", def);
    require(n >= 2, ctx, "'n' must be >= 2");
    out["n"] = n;
  };
  if (kind == "sim1") {
    const Sim1Config d;
    positive_n(d.n);
    out["sigma"] = f.number("sigma", d.sigma);
    out["p_extra"] = f.integer("p_extra", d.p_extra);
    out["var_x0"] = f.number("var_x0", d.var_x0);
    out["var_extra"] = f.number("var_extra", d.var_extra);
    out["cov_extra"] = f.number("cov_extra", d.cov_extra);
    out["bernoulli_p"] = f.number("bernoulli_p", d.bernoulli_p);
  } else if (kind == "sim2") {
    const Sim2Config d;
    positive_n(d.n);
    out["break_point"] = f.number("break_point", d.break_point);
    out["sigma"] = f.number("sigma", d.sigma);
  } else if (kind == "sim3") {
    const Sim3Config d;
    positive_n(d.n);
    out["p"] = f.integer("p", d.p);
    out["rho"] = f.number("rho", d.rho);
    out["sigma"] = f.number("sigma", d.sigma);
    out["local_half_width"] = f.number("local_half_width", d.local_half_width);
  } else if (kind == "fourier") {
    positive_n(4096);
    out["j_max"] = f.integer("j_max", 64);
    out["sigma"] = f.number("sigma", 1.0);
  } else if (kind == "rate_toy") {
    positive_n(10000);
    out["sigma"] = f.number("sigma", 1.0);
  } else if (kind == "csv") {
    out["path"] = f.text("path");
    const std::string format = f.text("format", "plain");
    require(format == "plain" || format == "housing", ctx, "'format' must be plain or housing");
    out["format"] = format;
    out["response"] = f.text("response", format == "housing" ? "logMEDV" : "y");
  } else {
    schema_error(ctx, "unknown source kind '" + kind + "'");
  }
  f.done();
  if (kind != "csv") make_dgp(out);  // range checks of the generator itself
  return out;
}

// -------------------------------------------------------------- probes ----

json canon_probe(const json& j, const std::string& ctx) {
  Fields f(j, ctx);
  const std::string kind = f.text("kind");
  json out{{"kind", kind}};
  auto reps = [&](std::int64_t def) {
    const auto r = f.integer("reps", def);
    require(r >= 1, ctx, "'reps' must be >= 1");
    out["reps"] = r;
  };
  auto probe_n = [&]() {
    const auto p = f.integer("probe_n", 100000);
    require(p >= 1, ctx, "'probe_n' must be >= 1");
    out["probe_n"] = p;
  };
  auto weight = [&]() {
    out["weight"] = f.has("weight") ? canon_weight(f.at("weight"), ctx + ".weight")
                                    : canon_weight(json{{"kind", "uniform"}}, ctx + ".weight");
  };
  if (kind == "ranking") {
    out["good"] = f.integer("good");
    out["bad"] = f.integer("bad");
    const json& grid = f.at("grid");
    require(grid.is_array() && !grid.empty(), ctx, "'grid' must be a nonempty array of [n, n1]");
    for (const auto& g : grid) {
      require(g.is_array() && g.size() == 2 && g[0].is_number_integer() && g[1].is_number_integer(), ctx,
              "'grid' entries must be [n, n1]");
    }
    out["grid"] = grid;
    out["l_n"] = f.integer("l_n", 1);
    out["c_scale"] = f.number("c_scale", 1.0 / 3.0);
    out["c_exponent"] = f.number("c_exponent", -1.0 / 3.0);
    reps(200);
    probe_n();
    weight();
  } else if (kind == "l4l2") {
    out["candidate"] = f.integer("candidate");
    const auto n1 = f.integer("n1");
    require(n1 >= 2, ctx, "'n1' must be >= 2");
    out["n1"] = n1;
    reps(50);
    probe_n();
    weight();
  } else if (kind == "consistency") {
    const json& grid = f.at("n_grid");
    require(grid.is_array() && !grid.empty(), ctx, "'n_grid' must be a nonempty array");
    for (const auto& g : grid) require(g.is_number_integer() && g.get<std::int64_t>() >= 4, ctx, "bad n in 'n_grid'");
    out["n_grid"] = grid;
    reps(100);
    probe_n();
    weight();
  } else if (kind == "rate_toy") {
    out["n"] = f.integer("n", 10000);
    out["n1"] = f.integer("n1", 1000);
    out["sigma"] = f.number("sigma", 1.0);
    require(out["n"].get<std::int64_t>() >= 1 && out["n1"].get<std::int64_t>() >= 1, ctx, "sizes must be >= 1");
    reps(10000);
  } else {
    schema_error(ctx, "unknown probe kind '" + kind + "'");
  }
  f.done();
  return out;
}

const std::set<std::string> kExperimentKinds = {"sim1",     "sim2", "sim3", "boston", "rate_toy",
                                                 "fourier_probe", "custom"};

}  // namespace

json canonicalize_config(const json& raw) {
  Fields f(raw, "config");
  json out;
  const std::string kind = f.text("experiment");
  require(kExperimentKinds.count(kind) > 0, "config", "unknown experiment kind '" + kind + "'");
  out["experiment"] = kind;
  out["seed"] = f.unsigned_integer("seed", 1);
  const auto threads = f.integer("threads", 1);
  require(threads >= 1, "config", "'threads' must be >= 1");
  out["threads"] = threads;
  out["output_dir"] = f.text("output_dir", "out/" + kind);
  out["source"] = canon_source(f.at("source"), "source");

  json roster = json::array();
  if (f.has("roster")) {
    const json& r = f.at("roster");
    require(r.is_array(), "config", "'roster' must be an array");
    for (std::size_t i = 0; i < r.size(); ++i) roster.push_back(canon_candidate(r[i], "roster[" + std::to_string(i) + "]"));
  }
  out["roster"] = roster;

  json selectors = json::array();
  if (f.has("selectors")) {
    const json& s = f.at("selectors");
    require(s.is_array(), "config", "'selectors' must be an array");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string ctx = "selectors[" + std::to_string(i) + "]";
      Fields sf(s[i], ctx);
      const std::string name = sf.text("name");
      require(!name.empty() && name != "CV", ctx, "selector name must be nonempty and not 'CV'");
      selectors.push_back({{"name", name}, {"weight", canon_weight(sf.at("weight"), ctx + ".weight")}});
      sf.done();
    }
  }
  out["selectors"] = selectors;
  out["include_cv"] = f.flag("include_cv", true);
  out["plan"] = canon_plan(f.has("plan") ? f.at("plan") : json(nullptr), "plan");
  out["eval"] = canon_eval(f.has("eval") ? f.at("eval") : json(nullptr), "eval");
  out["eval_region"] = f.has("eval_region") ? canon_region(f.at("eval_region"), "eval_region") : json::array();
  const std::string metric = f.text("local_metric", "mean");
  parse_local_metric(metric);
  out["local_metric"] = metric;
  const auto reps = f.integer("replications", 1);
  require(reps >= 1, "config", "'replications' must be >= 1");
  out["replications"] = reps;

  json probes = json::array();
  if (f.has("probes")) {
    const json& p = f.at("probes");
    require(p.is_array(), "config", "'probes' must be an array");
    for (std::size_t i = 0; i < p.size(); ++i) probes.push_back(canon_probe(p[i], "probes[" + std::to_string(i) + "]"));
  }
  out["probes"] = probes;
  f.done();

  const bool probe_kind = kind == "rate_toy" || kind == "fourier_probe";
  if (probe_kind) {
    require(!probes.empty(), "config", "probe experiments need at least one probe");
  } else {
    require(!roster.empty(), "config", "'roster' must list at least one candidate");
    require(!selectors.empty() || out["include_cv"].get<bool>(), "config", "no selectors configured");
  }
  for (const auto& p : probes) {
    for (const char* key : {"good", "bad", "candidate"}) {
      if (p.contains(key)) {
        const auto id = p[key].get<std::int64_t>();
        require(id >= 0 && id < static_cast<std::int64_t>(roster.size()), "probes", std::string("'") + key +
                                                                                     "' is not a roster id");
      }
    }
  }
  return out;
}

std::string canonical_dump(const json& canonical) { return canonical.dump(2); }

std::string config_hash(const json& canonical) {
  const std::string s = canonical.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ----------------------------------------------------------- presets ----

namespace {

json cond(const std::string& column, const std::string& op, double value) {
  return {{"column", column}, {"op", op}, {"value", value}};
}

json sim1_raw(double sigma, bool full_scale) {
  json local = json::array({cond("I", "==", 1.0)});
  return {
      {"experiment", "sim1"},
      {"seed", 20230101},
      {"source", {{"kind", "sim1"}, {"n", 800}, {"sigma", sigma}}},
      {"roster",
       {{{"name", "delta1"}, {"estimator", {{"kind", "ols"}, {"design", {"X0"}}}}},
        {{"name", "delta2"}, {"estimator", {{"kind", "ols"}, {"design", {"X{0..100}", "I*X{1..100}"}}, {"rank_fallback", true}}}},
        {{"name", "delta3"}, {"estimator", {{"kind", "ols"}, {"design", {"X0"}}}}, {"local", local}}}},
      {"selectors", {{{"name", "TCV"}, {"weight", {{"kind", "region"}, {"region", local}}}}}},
      {"plan", {{"n1", 400}, {"K", 100}}},
      {"eval", {{"protocol", "independent"}, {"eval_n", 5000}}},
      {"eval_region", local},
      {"local_metric", "mean"},
      {"replications", full_scale ? 500 : 200},
  };
}

json sim2_raw(bool full_scale) {
  const json local = json::array({cond("X", "<", 0.1)});
  json selectors = json::array();
  for (double a : {0.5, 0.8, 0.9, 1.0}) {
    char name[32];
    std::snprintf(name, sizeof name, "TCV_%g", a);
    selectors.push_back({{"name", name},
                         {"weight", {{"kind", "piecewise"}, {"region", local}, {"w_in", a}, {"w_out", 1.0 - a}}}});
  }
  return {
      {"experiment", "sim2"},
      {"seed", 20230102},
      {"source", {{"kind", "sim2"}, {"n", 200}}},
      {"roster",
       {{{"name", "NW"}, {"estimator", {{"kind", "nw"}, {"column", "X"}}}},
        {{"name", "Linear"}, {"estimator", {{"kind", "ols"}, {"design", {"1", "X"}}}}}}},
      {"selectors", selectors},
      {"plan", {{"n1", 100}, {"K", 100}}},
      {"eval", {{"protocol", "independent"}, {"eval_n", 5000}}},
      {"eval_region", local},
      {"local_metric", "mean"},
      {"replications", full_scale ? 500 : 200},
      {"probes",
       {{{"kind", "consistency"},
         {"n_grid", {100, 200, 400}},
         {"reps", full_scale ? 200 : 50},
         {"probe_n", 20000},
         {"weight", {{"kind", "region"}, {"region", local}}}}}},
  };
}

json sim3_raw(bool full_scale) {
  const json local = json::array({cond("X1", ">", -0.5), cond("X1", "<", 0.5), cond("X2", ">", -0.5),
                                  cond("X2", "<", 0.5)});
  const int trees = full_scale ? 500 : 200;
  const json lasso = {{"kind", "lasso"}};
  const json forest = {{"kind", "forest"}, {"n_trees", trees}, {"mtry", 32}};
  return {
      {"experiment", "sim3"},
      {"seed", 20230103},
      {"source", {{"kind", "sim3"}, {"n", 200}, {"p", 1000}}},
      {"roster",
       {{{"name", "lasso"}, {"estimator", lasso}},
        {{"name", "RF"}, {"estimator", forest}},
        {{"name", "lasso_local"}, {"estimator", lasso}, {"local", local}},
        {{"name", "RF_local"}, {"estimator", forest}, {"local", local}}}},
      {"selectors", {{{"name", "TCV"}, {"weight", {{"kind", "region"}, {"region", local}}}}}},
      {"plan", {{"n1", 100}, {"K", 100}, {"stratify", local}, {"unfittable_policy", "exclude"}}},
      {"eval", {{"protocol", "independent"}, {"eval_n", 5000}}},
      {"eval_region", local},
      {"local_metric", "normalized"},
      {"replications", full_scale ? 100 : 50},
  };
}

json boston_raw(bool full_scale) {
  const json local = json::array({cond("AGE", "<", 50.0)});
  const json hedonic = {"1",    "RM2",  "AGE",   "logDIS", "logRAD", "TAX",  "PTRATIO",
                        "B",    "logLSTAT", "CRIM", "ZN",   "INDUS",  "CHAS", "NOX2"};
  const json smooth = {"RM2", "AGE", "logDIS", "logRAD", "TAX", "PTRATIO",
                       "B",   "logLSTAT", "CRIM", "ZN",  "INDUS", "NOX2"};
  return {
      {"experiment", "boston"},
      {"seed", 20230104},
      {"source", {{"kind", "csv"}, {"format", "housing"}, {"path", "data/boston_housing.csv"}}},
      {"roster",
       {{{"name", "delta1"}, {"estimator", {{"kind", "ols"}, {"design", hedonic}}}},
        {{"name", "delta2"},
         {"estimator", {{"kind", "additive_spline"}, {"smooth", smooth}, {"linear", {"CHAS"}}, {"df", 3}}}},
        {{"name", "delta3"},
         {"estimator", {{"kind", "ols"}, {"design", hedonic}, {"rank_fallback", true}}},
         {"local", local}}}},
      {"selectors", {{{"name", "TCV"}, {"weight", {{"kind", "region"}, {"region", local}}}}}},
      {"plan", {{"train_fraction", 0.5}, {"K", 100}, {"stratify", local}}},
      {"eval", {{"protocol", "holdout"}, {"fraction", 0.2}, {"stratify", true}}},
      {"eval_region", local},
      {"local_metric", "mean"},
      {"replications", full_scale ? 500 : 100},
  };
}

json rate_toy_raw() {
  return {
      {"experiment", "rate_toy"},
      {"seed", 20230105},
      {"source", {{"kind", "rate_toy"}, {"n", 10000}}},
      {"probes", {{{"kind", "rate_toy"}, {"n", 10000}, {"n1", 1000}, {"sigma", 1.0}, {"reps", 10000}}}},
  };
}

json fourier_raw() {
  return {
      {"experiment", "fourier_probe"},
      {"seed", 20230106},
      {"source", {{"kind", "fourier"}, {"n", 4096}, {"j_max", 64}}},
      {"roster",
       {{{"name", "fourier_p1"}, {"estimator", {{"kind", "fourier"}, {"truncation", "p1"}}}},
        {{"name", "fourier_p2"}, {"estimator", {{"kind", "fourier"}, {"truncation", "p2"}}}}}},
      {"include_cv", false},
      {"probes",
       {{{"kind", "ranking"}, {"good", 0}, {"bad", 1}, {"grid", {{4096, 1024}}}, {"reps", 200}, {"probe_n", 100000}},
        {{"kind", "l4l2"}, {"candidate", 0}, {"n1", 1024}, {"reps", 50}, {"probe_n", 100000}}}},
  };
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"sim1", "sim1_sigma3", "sim2", "sim3", "boston", "rate_toy", "fourier_probe"};
}

json preset(std::string_view name, bool full_scale) {
  json raw;
  if (name == "sim1") {
    raw = sim1_raw(25.0, full_scale);
  } else if (name == "sim1_sigma3") {
    raw = sim1_raw(3.0, full_scale);
    raw["output_dir"] = "out/sim1_sigma3";
  } else if (name == "sim2") {
    raw = sim2_raw(full_scale);
  } else if (name == "sim3") {
    raw = sim3_raw(full_scale);
  } else if (name == "boston") {
    raw = boston_raw(full_scale);
  } else if (name == "rate_toy") {
    raw = rate_toy_raw();
  } else if (name == "fourier_probe") {
    raw = fourier_raw();
  } else {
    throw Error(ErrorCode::invalid_config, "unknown preset '" + std::string(name) + "'");
  }
  return canonicalize_config(raw);
}

// ---------------------------------------------------------- builders ----

Region parse_region(const json& j) {
  const json c = canon_region(j, "region");
  std::vector<Region::Condition> conds;
  for (const auto& e : c) {
    conds.push_back({e["column"].get<std::string>(), -1, parse_region_op(e["op"].get<std::string>()),
                     e["value"].get<double>()});
  }
  return Region(std::move(conds));
}

json region_to_json(const Region& r) {
  json out = json::array();
  for (const auto& c : r.conditions()) {
    out.push_back({{"column", c.column}, {"op", std::string(to_string(c.op))}, {"value", c.value}});
  }
  return out;
}

WeightFunction parse_weight(const json& j) {
  const json c = canon_weight(j, "weight");
  const std::string kind = c["kind"];
  WeightFunction w = WeightFunction::uniform();
  if (kind == "region") {
    std::optional<double> prob;
    if (!c["prob"].is_null()) prob = c["prob"].get<double>();
    w = WeightFunction::region(parse_region(c["region"]), prob);
  } else if (kind == "piecewise") {
    w = WeightFunction::piecewise(parse_region(c["region"]), c["w_in"], c["w_out"]);
  } else if (kind == "point") {
    const auto v = c["center"].get<std::vector<double>>();
    Eigen::RowVectorXd center = Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Index>(v.size()));
    std::optional<double> exact;
    if (!c["exact_constant"].is_null()) exact = c["exact_constant"].get<double>();
    w = WeightFunction::point(center, exact);
  } else if (kind == "variance") {
    w = WeightFunction::variance(StepVariance{parse_region(c["region"]), c["inside"], c["outside"]},
                                 c["norm_const"].get<double>());
  }
  const double scale = c["scale"];
  return scale == 1.0 ? w : w.scaled(scale);
}

MtcvPlan parse_plan(const json& j) {
  const json c = canon_plan(j, "plan");
  MtcvPlan p;
  p.n1 = c["n1"].get<Index>();
  p.train_fraction = c["train_fraction"];
  p.K = c["K"];
  p.aggregator = parse_aggregator(c["aggregator"].get<std::string>());
  if (!c["stratify"].is_null()) p.stratify = parse_region(c["stratify"]);
  p.zero_weight_policy = parse_zero_weight_policy(c["zero_weight_policy"].get<std::string>());
  p.unfittable_policy = parse_unfittable_policy(c["unfittable_policy"].get<std::string>());
  return p;
}

namespace {

Index bind_column(const std::string& name, const std::vector<std::string>& columns, const std::string& ctx) {
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] == name) return static_cast<Index>(k);
  }
  throw Error(ErrorCode::invalid_config, ctx + ": unknown column '" + name + "'");
}

EstimatorConfig build_estimator(const json& c, const std::vector<std::string>& columns, const std::string& ctx) {
  const std::string kind = c["kind"];
  if (kind == "ols") {
    OlsConfig o;
    o.design = bind_terms(parse_terms(c["design"].get<std::vector<std::string>>()), columns);
    o.rank_fallback = c["rank_fallback"];
    return o;
  }
  if (kind == "fourier") {
    FourierConfig o;
    o.truncation = c["truncation"] == "p1" ? FourierTruncation::p1 : FourierTruncation::p2;
    o.column_name = c["column"];
    o.column = bind_column(o.column_name, columns, ctx);
    return o;
  }
  if (kind == "nw") {
    NwConfig o;
    o.column_name = c["column"];
    o.column = bind_column(o.column_name, columns, ctx);
    o.grid_count = c["grid_count"];
    o.lo_factor = c["lo_factor"];
    o.hi_factor = c["hi_factor"];
    return o;
  }
  if (kind == "lasso") {
    LassoConfig o;
    o.path_length = c["path_length"];
    o.decades = c["decades"];
    o.folds = c["folds"];
    o.tolerance = c["tolerance"];
    o.max_sweeps = c["max_sweeps"];
    o.standardize = c["standardize"];
    o.max_r2 = c["max_r2"];
    if (!c["lambda"].is_null()) o.fixed_lambda = c["lambda"].get<double>();
    return o;
  }
  if (kind == "forest") {
    ForestConfig o;
    o.n_trees = c["n_trees"];
    o.mtry = c["mtry"];
    o.min_leaf = c["min_leaf"];
    if (!c["max_depth"].is_null()) o.max_depth = c["max_depth"].get<int>();
    o.bootstrap = c["bootstrap"];
    return o;
  }
  AdditiveSplineConfig o;
  o.smooth_names = c["smooth"].get<std::vector<std::string>>();
  o.linear_names = c["linear"].get<std::vector<std::string>>();
  for (const auto& n : o.smooth_names) o.smooth_columns.push_back(bind_column(n, columns, ctx));
  for (const auto& n : o.linear_names) o.linear_columns.push_back(bind_column(n, columns, ctx));
  o.df = c["df"];
  o.rank_fallback = c["rank_fallback"];
  return o;
}

}  // namespace

CandidateProcedure parse_candidate(const json& j, int id, const std::vector<std::string>& columns) {
  const std::string ctx = "roster[" + std::to_string(id) + "]";
  const json c = canon_candidate(j, ctx);
  CandidateProcedure p;
  p.id = id;
  p.name = c["name"];
  p.config = build_estimator(c["estimator"], columns, ctx);
  if (!c["local"].is_null()) p.local_region = parse_region(c["local"]).bound_to(columns);
  p.min_local_rows = c["min_local_rows"].get<Index>();
  return p;
}

Roster parse_roster(const json& j, const std::vector<std::string>& columns) {
  Roster r;
  for (std::size_t i = 0; i < j.size(); ++i) r.push_back(parse_candidate(j[i], static_cast<int>(i), columns));
  return r;
}

DgpPtr make_dgp(const json& source) {
  const std::string kind = source.at("kind");
  if (kind == "sim1") {
    Sim1Config c;
    c.n = source["n"].get<Index>();
    c.sigma = source["sigma"];
    c.p_extra = source["p_extra"];
    c.var_x0 = source["var_x0"];
    c.var_extra = source["var_extra"];
    c.cov_extra = source["cov_extra"];
    c.bernoulli_p = source["bernoulli_p"];
    return make_sim1(c);
  }
  if (kind == "sim2") {
    Sim2Config c;
    c.n = source["n"].get<Index>();
    c.break_point = source["break_point"];
    c.sigma = source["sigma"];
    return make_sim2(c);
  }
  if (kind == "sim3") {
    Sim3Config c;
    c.n = source["n"].get<Index>();
    c.p = source["p"];
    c.rho = source["rho"];
    c.sigma = source["sigma"];
    c.local_half_width = source["local_half_width"];
    return make_sim3(c);
  }
  if (kind == "fourier") return make_fourier_dgp({source["j_max"].get<int>(), source["sigma"].get<double>()});
  if (kind == "rate_toy") return make_rate_toy({source["n"].get<Index>(), source["sigma"].get<double>()});
  throw Error(ErrorCode::invalid_config, "source '" + kind + "' is not a generator");
}

Dataset load_source_data(const json& source, const std::filesystem::path& base_dir,
                         std::vector<std::string>* warnings) {
  std::filesystem::path path = source.at("path").get<std::string>();
  if (path.is_relative()) path = base_dir / path;
  if (source.at("format") == "housing") return load_housing(path, warnings);
  return load_plain_csv(path, source.at("response").get<std::string>());
}

bool runs_probes(const json& canonical) {
  const std::string kind = canonical.at("experiment");
  return kind == "rate_toy" || kind == "fourier_probe";
}

ExperimentSpec build_experiment(const json& canonical, const std::filesystem::path& base_dir,
                                std::vector<std::string>* warnings) {
  const json& c = canonical;
  ExperimentSpec spec;
  spec.name = c["experiment"];
  std::vector<std::string> columns;
  if (c["source"]["kind"] == "csv") {
    spec.data = load_source_data(c["source"], base_dir, warnings);
    columns = spec.data->column_names();
  } else {
    spec.dgp = make_dgp(c["source"]);
    spec.n = c["source"]["n"].get<Index>();
    columns = spec.dgp->column_names();
  }
  spec.roster = parse_roster(c["roster"], columns);
  for (const auto& s : c["selectors"]) {
    spec.selectors.push_back({s["name"].get<std::string>(), parse_weight(s["weight"]).bound_to(columns)});
  }
  spec.include_cv = c["include_cv"];
  spec.plan = parse_plan(c["plan"]);
  const json& ev = c["eval"];
  if (ev["protocol"] == "independent") {
    spec.eval.kind = EvalProtocol::Kind::independent;
    spec.eval.eval_n = ev["eval_n"].get<Index>();
  } else {
    spec.eval.kind = EvalProtocol::Kind::holdout;
    spec.eval.holdout_fraction = ev["fraction"];
    spec.eval.stratify_holdout = ev["stratify"];
  }
  spec.eval_region = parse_region(c["eval_region"]).bound_to(columns);
  spec.local_metric = parse_local_metric(c["local_metric"].get<std::string>());
  spec.replications = c["replications"];
  spec.rng.master_seed = c["seed"].get<std::uint64_t>();
  spec.exec = c["threads"].get<int>() > 1 ? Exec::parallel : Exec::serial;
  return spec;
}

json run_probes(const json& canonical, std::string_view kind, Exec exec) {
  const json& c = canonical;
  json results = json::array();
  RngSpec base;
  base.master_seed = c["seed"].get<std::uint64_t>();
  const bool generator = c["source"]["kind"] != "csv";
  DgpPtr dgp = generator ? make_dgp(c["source"]) : nullptr;
  const auto columns = generator ? dgp->column_names() : std::vector<std::string>{};
  const Roster roster = generator ? parse_roster(c["roster"], columns) : Roster{};
  for (std::size_t i = 0; i < c["probes"].size(); ++i) {
    const json& p = c["probes"][i];
    const std::string pk = p["kind"];
    if (!kind.empty() && pk != kind) continue;
    const RngSpec rng = base.with_purpose(Purpose::probe, i);
    json r{{"kind", pk}};
    if (pk == "rate_toy") {
      RateToyProbeConfig rc;
      rc.n = p["n"].get<Index>();
      rc.n1 = p["n1"].get<Index>();
      rc.sigma = p["sigma"];
      rc.reps = p["reps"];
      rc.rng = rng;
      const auto res = rate_toy_probe(rc);
      r["n"] = rc.n;
      r["n1"] = rc.n1;
      r["sigma"] = rc.sigma;
      r["reps"] = rc.reps;
      r["mean_loss1"] = res.mean_loss1;
      r["se_loss1"] = res.se_loss1;
      r["expected_loss1"] = rc.sigma * rc.sigma / static_cast<double>(rc.n1);
      r["loss2"] = res.loss2;
      r["model1_better"] = res.model1_better;
      r["model1_better_se"] = res.model1_better_se;
      results.push_back(r);
      continue;
    }
    if (!generator) throw Error(ErrorCode::invalid_config, "probe '" + pk + "' needs a generator source");
    const WeightFunction w = parse_weight(p["weight"]).bound_to(columns);
    if (pk == "ranking") {
      RankingProbeConfig rc;
      rc.dgp = dgp;
      rc.good = roster[p["good"].get<std::size_t>()];
      rc.bad = roster[p["bad"].get<std::size_t>()];
      rc.weight = w;
      for (const auto& g : p["grid"]) rc.grid.emplace_back(g[0].get<Index>(), g[1].get<Index>());
      rc.l_n = p["l_n"].get<Index>();
      const double scale = p["c_scale"];
      const double expo = p["c_exponent"];
      rc.c = [scale, expo](Index n1, Index) { return scale * std::pow(static_cast<double>(n1), expo); };
      rc.reps = p["reps"];
      rc.probe_n = p["probe_n"].get<Index>();
      rc.rng = rng;
      rc.exec = exec;
      r["good"] = rc.good.name;
      r["bad"] = rc.bad.name;
      r["points"] = json::array();
      for (const auto& pt : ranking_probe(rc)) {
        r["points"].push_back({{"n", pt.n},
                               {"n1", pt.n1},
                               {"c", pt.c},
                               {"p_hat", pt.p_hat},
                               {"p_se", pt.p_se},
                               {"mean_loss_good", pt.mean_loss_good},
                               {"mean_loss_bad", pt.mean_loss_bad},
                               {"probe_se", pt.probe_se}});
      }
    } else if (pk == "l4l2") {
      L4L2ProbeConfig lc;
      lc.dgp = dgp;
      lc.candidate = roster[p["candidate"].get<std::size_t>()];
      lc.weight = w;
      lc.n1 = p["n1"].get<Index>();
      lc.reps = p["reps"];
      lc.probe_n = p["probe_n"].get<Index>();
      lc.rng = rng;
      const auto res = l4_l2_ratio_probe(lc);
      r["candidate"] = lc.candidate.name;
      r["n1"] = lc.n1;
      r["mean_ratio"] = res.mean_ratio;
      r["se_ratio"] = res.se_ratio;
      r["max_ratio"] = res.max_ratio;
    } else if (pk == "consistency") {
      ConsistencyConfig cc;
      cc.dgp = dgp;
      cc.roster = roster;
      cc.weight = w;
      for (const auto& n : p["n_grid"]) cc.n_grid.push_back(n.get<Index>());
      cc.plan = parse_plan(c["plan"]);
      cc.reps = p["reps"];
      cc.probe_n = p["probe_n"].get<Index>();
      cc.rng = rng;
      cc.exec = exec;
      r["candidates"] = json::array();
      for (const auto& cand : roster) r["candidates"].push_back(cand.name);
      r["points"] = json::array();
      for (const auto& pt : consistency_curve(cc)) {
        r["points"].push_back({{"n", pt.n},
                               {"hit_average", pt.hit_average},
                               {"hit_average_se", pt.hit_average_se},
                               {"hit_vote", pt.hit_vote},
                               {"hit_vote_se", pt.hit_vote_se},
                               {"pick_average", pt.pick_average},
                               {"pick_vote", pt.pick_vote},
                               {"best_share", pt.best_share}});
      }
    }
    results.push_back(r);
  }
  if (results.empty()) {
    throw Error(ErrorCode::invalid_config, kind.empty() ? std::string("config has no probes")
                                                        : "config has no '" + std::string(kind) + "' probe");
  }
  return results;
}

}  // namespace tcv
