#pragma once
// Run configuration, experiment dispatch, file emission and the regression comparator behind the nct binary.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "vw_experiments.hpp"

namespace nct::cli {

constexpr int kSchemaVersion = 1;

// index = sign * chern for a left module coupled to the untwisted operator
constexpr int kIndexChernSign = +1;

enum Exit : int { ok = 0, config_error = 1, indeterminate = 2, violation = 3 };

using nlohmann::json;

inline AlgebraElement default_h() {
  return 0.4 * cos_u() + 0.25 * cos_v() + 0.05 * (AlgebraElement::monomial(2, 0) + AlgebraElement::monomial(-2, 0));
}

struct RunConfig {
  std::string experiment;
  AlgebraParams params;
  int window = 12;
  std::uint64_t seed = 7;

  Ladder ladder;
  double slack = 0.01;

  std::string projection;  // empty picks the experiment's own module
  Side side = Side::left;
  int band = 16;
  double hopf_amp = 0.6;

  double twist_t = 0.0;
  AlgebraElement twist_h = default_h();

  AlgebraElement h = default_h();
  AlgebraElement h_left = 0.3 * cos_v();
  double t_max = 2.0;
  int steps = 21;
  int m_lambda = 4;
  int m_norm = 6;

  double tf_t = 1.0;
  std::vector<int> tf_windows{12, 16};
  std::vector<int> tf_scan{8, 12, 16};
  std::vector<int> tf_rungs{8, 12};
  std::vector<int> tf_sigma{6};
  int tf_lambda_cap = 8;

  double commutator_amp = 0.5;
  std::vector<int> commutator_windows{8, 12, 16};

  double gns_amp = 0.5;
  int gns_pairs = 16;
  int gns_margin = 8;

  SweepConfig sweep() const {
    SweepConfig c;
    c.h = h;
    c.h_left = h_left;
    c.t_grid = uniform_grid(t_max, steps);
    c.theta = params.theta;
    c.hopf_amp = hopf_amp;
    c.m_lambda = m_lambda;
    c.m_norm = m_norm;
    c.slack = slack;
    return c;
  }
};

// ---------------------------------------------------------------- parsing

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError("'" + path + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + (path.empty() ? "" : path + ".") + it.key() + "'");
}

template <class T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + path + "'");
  }
}

// {"cos_u": a, "cos_v": b, "terms": [[m, n, re, im], ...]}
inline AlgebraElement parse_element(const json& j, const std::string& path) {
  check_keys(j, {"cos_u", "cos_v", "terms"}, path);
  AlgebraElement a;
  if (j.contains("cos_u")) a = a + cos_u(get_as<double>(j["cos_u"], path + ".cos_u"));
  if (j.contains("cos_v")) a = a + cos_v(get_as<double>(j["cos_v"], path + ".cos_v"));
  if (j.contains("terms")) {
    std::vector<std::tuple<int, int, cplx>> t;
    for (auto& x : j["terms"]) {
      if (!x.is_array() || x.size() != 4) throw ConfigError("'" + path + ".terms' entries are [m, n, re, im]");
      t.emplace_back(get_as<int>(x[0], path), get_as<int>(x[1], path),
                     cplx(get_as<double>(x[2], path), get_as<double>(x[3], path)));
    }
    a = a + AlgebraElement::from_terms(t);
  }
  return a;
}

inline Side parse_side(const json& j, const std::string& path) {
  auto s = get_as<std::string>(j, path);
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  throw ConfigError("'" + path + "' must be left or right");
}

inline RunConfig parse_config(const json& j) {
  check_keys(j, {"schema_version", "experiment", "algebra", "window", "seed", "ladder", "tolerances", "module", "twist",
                 "sweep", "tf", "commutator", "gns"},
             "");
  if (!j.contains("schema_version")) throw ConfigError("missing 'schema_version'");
  if (get_as<int>(j["schema_version"], "schema_version") != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + j["schema_version"].dump());
  RunConfig c;
  if (j.contains("experiment")) c.experiment = get_as<std::string>(j["experiment"], "experiment");
  if (j.contains("algebra")) {
    const json& a = j["algebra"];
    check_keys(a, {"theta", "tau"}, "algebra");
    if (a.contains("theta")) c.params.theta = get_as<double>(a["theta"], "algebra.theta");
    if (a.contains("tau")) {
      auto t = get_as<std::vector<double>>(a["tau"], "algebra.tau");
      if (t.size() != 2) throw ConfigError("'algebra.tau' is [re, im]");
      c.params.tau = {t[0], t[1]};
    }
  }
  if (j.contains("window")) c.window = get_as<int>(j["window"], "window");
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("ladder")) {
    const json& l = j["ladder"];
    check_keys(l, {"rungs", "reference"}, "ladder");
    if (l.contains("rungs")) c.ladder.rungs = get_as<std::vector<int>>(l["rungs"], "ladder.rungs");
    if (l.contains("reference")) c.ladder.reference = get_as<int>(l["reference"], "ladder.reference");
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    check_keys(t, {"kernel_cutoff", "bound_slack"}, "tolerances");
    if (t.contains("kernel_cutoff")) c.ladder.cutoff = get_as<double>(t["kernel_cutoff"], "tolerances.kernel_cutoff");
    if (t.contains("bound_slack")) c.slack = get_as<double>(t["bound_slack"], "tolerances.bound_slack");
  }
  if (j.contains("module")) {
    const json& m = j["module"];
    check_keys(m, {"projection", "side", "band", "hopf_amp"}, "module");
    if (m.contains("projection")) c.projection = get_as<std::string>(m["projection"], "module.projection");
    if (m.contains("side")) c.side = parse_side(m["side"], "module.side");
    if (m.contains("band")) c.band = get_as<int>(m["band"], "module.band");
    if (m.contains("hopf_amp")) c.hopf_amp = get_as<double>(m["hopf_amp"], "module.hopf_amp");
  }
  if (j.contains("twist")) {
    const json& t = j["twist"];
    check_keys(t, {"t", "h"}, "twist");
    if (t.contains("t")) c.twist_t = get_as<double>(t["t"], "twist.t");
    if (t.contains("h")) c.twist_h = parse_element(t["h"], "twist.h");
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, {"h", "h_left", "t_max", "steps", "m_lambda", "m_norm"}, "sweep");
    if (s.contains("h")) c.h = parse_element(s["h"], "sweep.h");
    if (s.contains("h_left")) c.h_left = parse_element(s["h_left"], "sweep.h_left");
    if (s.contains("t_max")) c.t_max = get_as<double>(s["t_max"], "sweep.t_max");
    if (s.contains("steps")) c.steps = get_as<int>(s["steps"], "sweep.steps");
    if (s.contains("m_lambda")) c.m_lambda = get_as<int>(s["m_lambda"], "sweep.m_lambda");
    if (s.contains("m_norm")) c.m_norm = get_as<int>(s["m_norm"], "sweep.m_norm");
  }
  if (j.contains("tf")) {
    const json& t = j["tf"];
    check_keys(t, {"t", "windows", "scan", "rungs", "sigma_windows", "lambda_cap"}, "tf");
    if (t.contains("sigma_windows")) c.tf_sigma = get_as<std::vector<int>>(t["sigma_windows"], "tf.sigma_windows");
    if (t.contains("lambda_cap")) c.tf_lambda_cap = get_as<int>(t["lambda_cap"], "tf.lambda_cap");
    if (t.contains("t")) c.tf_t = get_as<double>(t["t"], "tf.t");
    if (t.contains("windows")) c.tf_windows = get_as<std::vector<int>>(t["windows"], "tf.windows");
    if (t.contains("scan")) c.tf_scan = get_as<std::vector<int>>(t["scan"], "tf.scan");
    if (t.contains("rungs")) c.tf_rungs = get_as<std::vector<int>>(t["rungs"], "tf.rungs");
  }
  if (j.contains("commutator")) {
    const json& t = j["commutator"];
    check_keys(t, {"amp", "windows"}, "commutator");
    if (t.contains("amp")) c.commutator_amp = get_as<double>(t["amp"], "commutator.amp");
    if (t.contains("windows")) c.commutator_windows = get_as<std::vector<int>>(t["windows"], "commutator.windows");
  }
  if (j.contains("gns")) {
    const json& t = j["gns"];
    check_keys(t, {"amp", "pairs", "margin"}, "gns");
    if (t.contains("amp")) c.gns_amp = get_as<double>(t["amp"], "gns.amp");
    if (t.contains("pairs")) c.gns_pairs = get_as<int>(t["pairs"], "gns.pairs");
    if (t.contains("margin")) c.gns_margin = get_as<int>(t["margin"], "gns.margin");
  }
  c.params.validate();
  if (c.window < 1) throw ConfigError("window must be positive");
  if (c.ladder.rungs.empty()) throw ConfigError("ladder needs at least one rung");
  return c;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------- outputs

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Output {
  std::string experiment;
  json report;
  std::vector<Table> tables;
  int status = Exit::ok;
  std::string message;
};

inline std::string csv_text(const Table& t) {
  std::ostringstream o;
  for (std::size_t i = 0; i < t.header.size(); ++i) o << (i ? "," : "") << t.header[i];
  o << "\n";
  for (auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << r[i];
    o << "\n";
  }
  return o.str();
}

// every numeric column against the first
inline std::string gnuplot_script(const Table& t) {
  std::ostringstream o;
  o << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set xlabel '" << t.header.front() << "'\n"
    << "set terminal pngcairo size 900,600\n"
    << "set output '" << t.name << ".png'\n"
    << "plot for [i=2:" << t.header.size() << "] '" << t.name << ".csv' using 1:i with linespoints\n";
  return o.str();
}

inline void write_outputs(const Output& out, const std::string& dir, bool plot) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream(fs::path(dir) / (out.experiment + ".json")) << out.report.dump(2) << "\n";
  for (auto& t : out.tables) {
    std::ofstream(fs::path(dir) / (t.name + ".csv")) << csv_text(t);
    if (plot && t.header.size() > 1) std::ofstream(fs::path(dir) / (t.name + ".gp")) << gnuplot_script(t);
  }
}

// ---------------------------------------------------------------- experiments

inline Idempotent make_projection(const std::string& name, Side side, const RunConfig& c) {
  if (name == "unit") return Idempotent::unit(1, side);
  if (name == "pr") return with_side(powers_rieffel(c.params.theta, c.band), side);
  if (name == "hopf") return hopf_line(c.hopf_amp, c.params, side);
  if (name == "bott") {
    if (c.params.theta != 0.0) throw ConfigError("bott projection needs theta = 0");
    return with_side(bott_projection(8), side);
  }
  throw ConfigError("unknown projection '" + name + "'");
}

inline TwistSpec right_twist(double t, const AlgebraElement& h) {
  TwistSpec tw;
  tw.side = Side::right;
  if (t != 0.0) tw.k_plus = WeylFactor{t * h};
  return tw;
}

inline json algebra_json(const AlgebraParams& p) { return {{"theta", p.theta}, {"tau", {p.tau.real(), p.tau.imag()}}}; }

inline Table report_table(const std::string& name, const BoundReport& r) {
  Table t{name, {"t", "lambda1", "norm_k", "norm_k_inv", "tf_norm", "bound_rhs"}, {}};
  std::vector<std::string> keys;
  if (!r.records.empty())
    for (auto& [k, v] : r.records.front().factors) keys.push_back(k);
  for (auto& k : keys) t.header.push_back(k);
  t.header.push_back("ratio");
  for (auto& x : r.records) {
    std::vector<std::string> row{num(x.t), num(x.lambda1), num(x.norm_k), num(x.norm_k_inv), num(x.tf_norm),
                                 num(x.bound_rhs)};
    for (auto& k : keys) row.push_back(num(x.factors.count(k) ? x.factors.at(k) : 0.0));
    row.push_back(num(x.ratio));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Output run_spectrum(const RunConfig& c) {
  TruncationWindow w{c.window, 0};
  SpectralReport s = hermitian_eigen(build_dirac(w, c.params));
  mark_stability(s, hermitian_eigen(build_dirac(TruncationWindow{c.window + 2, 0}, c.params)));
  std::vector<double> v = s.values;
  std::sort(v.begin(), v.end());
  Output o{"spectrum", {}, {}, Exit::ok, ""};
  o.report = {{"experiment", "spectrum"}, {"algebra", algebra_json(c.params)}, {"window", c.window},
              {"count", v.size()}, {"values", v}, {"max_residual", s.residual}, {"stable", s.stable}};
  Table t{"spectrum", {"index", "value"}, {}};
  for (std::size_t i = 0; i < v.size(); ++i) t.rows.push_back({std::to_string(i), num(v[i])});
  o.tables.push_back(std::move(t));
  return o;
}

inline Output run_commutator_sweep(const RunConfig& c) {
  CommutatorSweep s = commutator_sweep(WeylFactor{c.commutator_amp * (cos_u() + cos_v())}, c.commutator_windows, c.params);
  Output o{"commutator-sweep", {}, {}, Exit::ok, ""};
  o.report = {{"experiment", "commutator-sweep"}, {"algebra", algebra_json(c.params)}, {"amp", c.commutator_amp},
              {"windows", s.windows},        {"untwisted", s.untwisted},          {"twisted", s.twisted}};
  Table t{"commutator-sweep", {"window", "untwisted", "twisted"}, {}};
  for (std::size_t i = 0; i < s.windows.size(); ++i)
    t.rows.push_back({std::to_string(s.windows[i]), num(s.untwisted[i]), num(s.twisted[i])});
  o.tables.push_back(std::move(t));
  return o;
}

inline Output run_gns_check(const RunConfig& c) {
  WeylFactor k{c.gns_amp * cos_u()};
  TruncationWindow w{c.window, c.window};
  double unit = verify_gns_unitarity(k, w, c.params, c.seed, c.gns_pairs);
  double probe = verify_gns_unitarity(k, w, c.params, c.seed, c.gns_pairs, true);
  double inter = intertwiner_deviation(k, c.gns_margin, c.params);
  Output o{"gns-check", {}, {}, Exit::ok, ""};
  o.report = {{"experiment", "gns-check"}, {"algebra", algebra_json(c.params)}, {"amp", c.gns_amp},
              {"window", c.window},        {"seed", c.seed},                    {"unitarity", unit},
              {"probe", probe},            {"intertwiner_margin", c.gns_margin}, {"intertwiner", inter}};
  o.tables.push_back({"gns-check",
                      {"quantity", "value"},
                      {{"unitarity", num(unit)}, {"probe", num(probe)}, {"intertwiner", num(inter)}}});
  return o;
}

inline Table index_table(const std::string& name, const IndexResult& r) {
  Table t{name, {"window", "ker_plus", "ker_minus", "gap_plus", "gap_minus"}, {}};
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    auto& [a, b] = r.history[i];
    t.rows.push_back({std::to_string(r.windows_used[i]), std::to_string(a.dim), std::to_string(b.dim),
                      num(to_json(a)["gap_ratio"].get<double>()), num(to_json(b)["gap_ratio"].get<double>())});
  }
  return t;
}

inline Output run_index(const RunConfig& c) {
  std::string name = c.projection.empty() ? "pr" : c.projection;
  Idempotent e = make_projection(name, c.side, c);
  IndexResult r = c.twist_t == 0.0 ? index_ordinary(e, c.params, c.ladder)
                                   : index_twisted(e, right_twist(c.twist_t, c.twist_h), c.params, c.ladder);
  double chern = chern_number(e, c.params);
  Output o{"index", {}, {}, Exit::ok, ""};
  o.report = to_json(r);
  o.report["experiment"] = "index";
  o.report["algebra"] = algebra_json(c.params);
  o.report["projection"] = name;
  o.report["side"] = side_name(c.side);
  o.report["twist_t"] = c.twist_t;
  o.report["chern"] = chern;
  o.report["index_chern_sign"] = kIndexChernSign;
  o.tables.push_back(index_table("index", r));
  if (!r.certified) {
    o.status = Exit::indeterminate;
    o.message = "index not certified";
  }
  return o;
}

inline Output run_pairing(const RunConfig& c) {
  std::string name = c.projection.empty() ? "pr" : c.projection;
  std::vector<Idempotent> lefts{Idempotent::unit(1, Side::left), make_projection(name, Side::left, c)};
  std::vector<Idempotent> rights{Idempotent::unit(1, Side::right), make_projection(name, Side::right, c)};
  PairingMatrix pm = pairing_matrix(lefts, rights, right_twist(c.twist_t, c.twist_h), c.params, c.ladder);
  Output o{"pairing", {}, {}, Exit::ok, ""};
  json entries = json::array(), values = json::array();
  Table t{"pairing", {"left", "right", "value", "certified"}, {}};
  const char* labels[] = {"unit", "p"};
  for (std::size_t i = 0; i < 2; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < 2; ++j) {
      json e = to_json(pm.entries[i][j]);
      e["left"] = labels[i];
      e["right"] = labels[j];
      entries.push_back(e);
      row.push_back(pm.values(Eigen::Index(i), Eigen::Index(j)));
      t.rows.push_back({labels[i], labels[j], num(pm.values(Eigen::Index(i), Eigen::Index(j))),
                        pm.entries[i][j].certified ? "1" : "0"});
    }
    values.push_back(row);
  }
  o.report = {{"experiment", "pairing"}, {"algebra", algebra_json(c.params)}, {"projection", name},
              {"twist_t", c.twist_t},    {"values", values},                  {"determinant", pm.determinant},
              {"certified", pm.certified}, {"entries", entries}};
  o.tables.push_back(std::move(t));
  if (!pm.certified) {
    o.status = Exit::indeterminate;
    o.message = "pairing matrix not certified";
  }
  return o;
}

inline Output run_tf_check(const RunConfig& c) {
  std::string name = c.projection.empty() ? "pr" : c.projection;
  MechanismSetup S{c.params, right_twist(c.tf_t, c.h), hopf_line(c.hopf_amp, c.params, Side::right),
                   make_projection(name, Side::left, c)};
  Ladder L = c.ladder;
  L.rungs = c.tf_rungs;
  MechanismReport r = tf_mechanism_check(S, c.tf_windows, c.tf_scan, L, c.slack, c.tf_lambda_cap, c.tf_sigma);
  Output o{"tf-check", {}, {}, Exit::ok, ""};
  o.report = {{"experiment", "tf-check"},
              {"algebra", algebra_json(c.params)},
              {"projection", name},
              {"t", c.tf_t},
              {"pairing", to_json(r.pairing)},
              {"bounds", to_json(r.bounds)},
              {"sigma_windows", r.sigma_windows},
              {"sigma_tf", r.sigma_tf},
              {"scan_windows", r.scan_windows},
              {"scan_smallest", r.scan_smallest},
              {"scan_monotone", r.scan_monotone}};
  Table t = report_table("tf-check", r.bounds);
  t.header.front() = "window";
  o.tables.push_back(std::move(t));
  Table s{"tf-check-scan", {"window", "smallest_sv"}, {}};
  for (std::size_t i = 0; i < r.scan_windows.size(); ++i)
    s.rows.push_back({std::to_string(r.scan_windows[i]), num(r.scan_smallest[i])});
  o.tables.push_back(std::move(s));
  if (!r.bounds.violations.empty() || !r.scan_monotone) {
    o.status = Exit::violation;
    o.message = r.scan_monotone ? "bound violated" : "kernel scan not monotone";
  }
  return o;
}

inline Output sweep_output(const std::string& name, const BoundReport& r, const RunConfig& c) {
  Output o{name, to_json(r), {}, Exit::ok, ""};
  o.report["experiment"] = name;
  o.report["algebra"] = algebra_json(c.params);
  o.report["t_max"] = c.t_max;
  o.report["steps"] = c.steps;
  o.tables.push_back(report_table(name, r));
  if (!r.violations.empty()) {
    o.status = Exit::violation;
    o.message = std::to_string(r.violations.size()) + " bound violations";
  }
  return o;
}

inline Output run_vw_sweep(const RunConfig& c) {
  Idempotent F = make_projection(c.projection.empty() ? "pr" : c.projection, Side::left, c);
  return sweep_output("vw-sweep", nc_torus_vw_sweep(c.sweep(), F), c);
}

inline Output run_conformal_sweep(const RunConfig& c) {
  Idempotent F = make_projection(c.projection.empty() ? "pr" : c.projection, Side::left, c);
  return sweep_output("conformal-sweep", conformal_deformation_sweep(c.sweep(), F), c);
}

inline Output run_commutative_sweep(const RunConfig& c) {
  RunConfig c0 = c;
  c0.params.theta = 0.0;
  Idempotent F = make_projection(c.projection.empty() ? "bott" : c.projection, Side::left, c0);
  return sweep_output("commutative-sweep", commutative_conformal_sweep(c0.sweep(), F), c0);
}

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> n{"spectrum", "commutator-sweep", "gns-check", "index", "pairing",
                                          "tf-check", "vw-sweep",         "conformal-sweep", "commutative-sweep"};
  return n;
}

inline Output run_experiment(const std::string& name, const RunConfig& c) {
  if (name == "spectrum") return run_spectrum(c);
  if (name == "commutator-sweep") return run_commutator_sweep(c);
  if (name == "gns-check") return run_gns_check(c);
  if (name == "index") return run_index(c);
  if (name == "pairing") return run_pairing(c);
  if (name == "tf-check") return run_tf_check(c);
  if (name == "vw-sweep") return run_vw_sweep(c);
  if (name == "conformal-sweep") return run_conformal_sweep(c);
  if (name == "commutative-sweep") return run_commutative_sweep(c);
  throw ConfigError("unknown experiment '" + name + "'");
}

// ---------------------------------------------------------------- regression

struct Tolerance {
  double rel = 1e-9;
  double abs = 1e-12;
};

struct ToleranceTable {
  Tolerance fallback;
  std::map<std::string, Tolerance> fields;  // by leaf key

  const Tolerance& at(const std::string& key) const {
    auto it = fields.find(key);
    return it == fields.end() ? fallback : it->second;
  }
};

inline ToleranceTable parse_tolerances(const json& j) {
  ToleranceTable t;
  if (j.is_null()) return t;
  check_keys(j, {"rel", "abs", "fields"}, "tolerances");
  if (j.contains("rel")) t.fallback.rel = get_as<double>(j["rel"], "tolerances.rel");
  if (j.contains("abs")) t.fallback.abs = get_as<double>(j["abs"], "tolerances.abs");
  if (j.contains("fields"))
    for (auto it = j["fields"].begin(); it != j["fields"].end(); ++it) {
      check_keys(it.value(), {"rel", "abs"}, "tolerances.fields." + it.key());
      Tolerance f = t.fallback;
      if (it.value().contains("rel")) f.rel = get_as<double>(it.value()["rel"], "rel");
      if (it.value().contains("abs")) f.abs = get_as<double>(it.value()["abs"], "abs");
      t.fields[it.key()] = f;
    }
  return t;
}

// structural comparison: object key order is irrelevant, numbers compare within the tolerance of their key
inline void compare_json(const json& expected, const json& actual, const ToleranceTable& tol, const std::string& path,
                         const std::string& key, std::vector<std::string>& diffs) {
  if (expected.is_number() && actual.is_number()) {
    double e = expected.get<double>(), a = actual.get<double>();
    const Tolerance& t = tol.at(key);
    bool same = (std::isnan(e) && std::isnan(a)) || e == a || std::abs(a - e) <= t.abs + t.rel * std::abs(e);
    if (!same) diffs.push_back(path + ": expected " + num(e) + " got " + num(a));
    return;
  }
  if (expected.type() != actual.type()) {
    diffs.push_back(path + ": type differs");
    return;
  }
  if (expected.is_object()) {
    for (auto it = expected.begin(); it != expected.end(); ++it) {
      if (!actual.contains(it.key())) {
        diffs.push_back(path + "." + it.key() + ": missing");
        continue;
      }
      compare_json(it.value(), actual[it.key()], tol, path + "." + it.key(), it.key(), diffs);
    }
    for (auto it = actual.begin(); it != actual.end(); ++it)
      if (!expected.contains(it.key())) diffs.push_back(path + "." + it.key() + ": unexpected");
    return;
  }
  if (expected.is_array()) {
    if (expected.size() != actual.size()) {
      diffs.push_back(path + ": length " + std::to_string(expected.size()) + " vs " + std::to_string(actual.size()));
      return;
    }
    for (std::size_t i = 0; i < expected.size(); ++i)
      compare_json(expected[i], actual[i], tol, path + "[" + std::to_string(i) + "]", key, diffs);
    return;
  }
  if (expected != actual) diffs.push_back(path + ": expected " + expected.dump() + " got " + actual.dump());
}

// one corpus case: {"experiment", "config", "expected", "tolerances"}
inline std::vector<std::string> replay_case(const json& c) {
  check_keys(c, {"experiment", "config", "expected", "tolerances"}, "case");
  std::string name = get_as<std::string>(c.at("experiment"), "experiment");
  Output out = run_experiment(name, parse_config(c.at("config")));
  std::vector<std::string> diffs;
  compare_json(c.at("expected"), out.report, parse_tolerances(c.value("tolerances", json())), name, "", diffs);
  return diffs;
}

inline std::vector<std::filesystem::path> corpus_files(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) throw ConfigError("no regression corpus at " + dir);
  for (auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("empty regression corpus at " + dir);
  return files;
}

inline std::string default_corpus() {
#ifdef NCT_DATA_DIR
  return std::string(NCT_DATA_DIR) + "/regression";
#else
  return "data/regression";
#endif
}

}  // namespace nct::cli
