// Regenerates data/: polished projections, the frozen index sign and the regression corpus.
// usage: nct_gen_data [data-dir]
#include <chrono>
#include <fstream>
#include <iostream>

#include <nct/cli.hpp>

using namespace nct;
using namespace nct::cli;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json projection_entry(const Idempotent& e, const AlgebraParams& p) {
  return {{"theta", p.theta},
          {"idempotent", to_json(e, p)},
          {"defect", idempotent_defect(e, p)},
          {"chern", chern_number(e, p)}};
}

json base(const std::string& experiment) {
  return {{"schema_version", kSchemaVersion}, {"experiment", experiment}};
}

// cheap configurations; the whole corpus replays well under a minute
std::vector<json> corpus_configs() {
  std::vector<json> v;
  json c;

  c = base("spectrum");
  c["window"] = 6;
  v.push_back(c);

  c = base("spectrum");
  c["window"] = 5;
  c["algebra"] = {{"theta", 0.2}, {"tau", {0.3, 1.1}}};
  v.push_back(c);

  c = base("commutator-sweep");
  c["commutator"] = {{"amp", 0.5}, {"windows", {3, 4, 6}}};
  v.push_back(c);

  c = base("gns-check");
  c["window"] = 6;
  c["gns"] = {{"amp", 0.5}, {"pairs", 8}, {"margin", 4}};
  v.push_back(c);

  c = base("index");
  c["module"] = {{"projection", "pr"}};
  c["ladder"] = {{"rungs", {8, 12}}};
  v.push_back(c);

  c = base("index");
  c["module"] = {{"projection", "pr"}, {"side", "right"}};
  c["ladder"] = {{"rungs", {8, 12}}};
  c["twist"] = {{"t", 0.5}};
  v.push_back(c);

  c = base("tf-check");
  c["tf"] = {{"t", 1.0}, {"windows", {6}}, {"scan", {4, 6}}, {"rungs", {6, 8}}, {"sigma_windows", {4}}, {"lambda_cap", 4}};
  v.push_back(c);

  for (std::string name : {"vw-sweep", "conformal-sweep", "commutative-sweep"}) {
    c = base(name);
    c["sweep"] = {{"t_max", 1.0}, {"steps", 2}, {"m_lambda", 3}, {"m_norm", 4}};
    v.push_back(c);
  }
  return v;
}

std::string case_name(std::size_t i, const json& c) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu_", i);
  return buf + c["experiment"].get<std::string>() + ".json";
}

}  // namespace

int main(int argc, char** argv) {
  try {
    fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path(NCT_DATA_DIR);
    fs::create_directories(dir / "regression");

    AlgebraParams pr_params{0.37, {0.0, 1.0}}, bott_params{0.0, {0.0, 1.0}};
    Idempotent pr = powers_rieffel(0.37), bott = bott_projection();
    write(dir / "projections.json",
          {{"schema_version", kSchemaVersion},
           {"powers_rieffel", projection_entry(pr, pr_params)},
           {"bott", projection_entry(bott, bott_params)}});

    write(dir / "conventions.json",
          {{"schema_version", kSchemaVersion},
           {"index_chern_sign", kIndexChernSign},
           {"calibrated_on", "powers_rieffel theta=0.37, left module, untwisted"}});

    for (auto& old : fs::directory_iterator(dir / "regression"))
      if (old.path().extension() == ".json") fs::remove(old.path());
    auto configs = corpus_configs();
    for (std::size_t i = 0; i < configs.size(); ++i) {
      auto t0 = std::chrono::steady_clock::now();
      const json& cfg = configs[i];
      Output out = run_experiment(cfg["experiment"], parse_config(cfg));
      json entry = {{"experiment", cfg["experiment"]},
                    {"config", cfg},
                    {"expected", out.report},
                    {"tolerances", {{"rel", 1e-9}, {"abs", 1e-12}}}};
      write(dir / "regression" / case_name(i, cfg), entry);
      double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cerr << case_name(i, cfg) << "  status " << out.status << "  " << s << " s" << std::endl;
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << std::endl;
    return 1;
  }
  return 0;
}
