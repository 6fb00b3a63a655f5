#include <CLI11.hpp>
#include <iostream>

#include <nct/cli.hpp>

using namespace nct;
using namespace nct::cli;

namespace {

struct Flags {
  std::string config, out, corpus = default_corpus();
  std::uint64_t seed = 0;
  int window = 0, steps = 0;
  double t_max = -1.0, kernel_cutoff = 0.0, bound_slack = 0.0;
  bool plot = false;
};

RunConfig resolve(const Flags& f, CLI::App& app, const std::string& experiment) {
  RunConfig c;
  if (!f.config.empty()) {
    c = parse_config(load_json_file(f.config));
    if (!c.experiment.empty() && c.experiment != experiment)
      throw ConfigError("config is for '" + c.experiment + "', not '" + experiment + "'");
  }
  if (app.count("--seed")) c.seed = f.seed;
  if (app.count("--window")) c.window = f.window;
  if (app.count("--t-max")) c.t_max = f.t_max;
  if (app.count("--steps")) c.steps = f.steps;
  if (app.count("--kernel-cutoff")) c.ladder.cutoff = f.kernel_cutoff;
  if (app.count("--bound-slack")) c.slack = f.bound_slack;
  if (!(c.ladder.cutoff > 0)) throw ConfigError("kernel cutoff must be positive");
  if (!(c.slack >= 0)) throw ConfigError("bound slack must be nonnegative");
  if (c.window < 1) throw ConfigError("window must be positive");
  return c;
}

int run_one(const Flags& f, CLI::App& app, const std::string& experiment) {
  Output out = run_experiment(experiment, resolve(f, app, experiment));
  if (f.out.empty())
    std::cout << out.report.dump(2) << std::endl;
  else
    write_outputs(out, f.out, f.plot);
  if (out.status != Exit::ok) std::cerr << experiment << ": " << out.message << std::endl;
  return out.status;
}

int run_regression(const Flags& f) {
  int failed = 0;
  for (auto& file : corpus_files(f.corpus)) {
    auto diffs = replay_case(load_json_file(file.string()));
    std::cerr << (diffs.empty() ? "match    " : "MISMATCH ") << file.filename().string() << std::endl;
    for (std::size_t i = 0; i < diffs.size() && i < 20; ++i) std::cerr << "  " << diffs[i] << std::endl;
    if (diffs.size() > 20) std::cerr << "  ... " << diffs.size() - 20 << " more" << std::endl;
    failed += diffs.empty() ? 0 : 1;
  }
  if (failed) std::cerr << failed << " case(s) differ" << std::endl;
  return failed ? Exit::violation : Exit::ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical experiments on the noncommutative two-torus"};
  Flags f;
  app.add_option("--config", f.config, "JSON run configuration");
  app.add_option("--seed", f.seed, "seed for randomized checks");
  app.add_option("--window", f.window, "truncation window N");
  app.add_option("--out", f.out, "output directory; JSON goes to stdout when absent");
  app.add_option("--t-max", f.t_max, "largest sweep parameter");
  app.add_option("--steps", f.steps, "number of sweep points");
  app.add_option("--corpus", f.corpus, "regression corpus directory");
  app.add_option("--kernel-cutoff", f.kernel_cutoff, "kernel cutoff at the reference ladder rung");
  app.add_option("--bound-slack", f.bound_slack, "relative slack allowed in bound checks");
  app.add_flag("--plot", f.plot, "write a gnuplot script next to every CSV");
  app.require_subcommand(1);

  std::string chosen;
  for (const auto& name : experiment_names()) {
    auto* sub = app.add_subcommand(name, "run " + name);
    sub->fallthrough();
    sub->callback([&chosen, name] { chosen = name; });
  }
  auto* reg = app.add_subcommand("regression", "replay the bundled corpus");
  reg->fallthrough();
  reg->add_flag("--all", "replay every case (default)");
  reg->callback([&chosen] { chosen = "regression"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return Exit::config_error;
  }

  try {
    if (chosen == "regression") return run_regression(f);
    return run_one(f, app, chosen);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << std::endl;
    return Exit::config_error;
  } catch (const NonSelfAdjointInput& e) {
    std::cerr << e.what() << std::endl;
    return Exit::config_error;
  } catch (const Indeterminate& e) {
    std::cerr << e.what() << std::endl;
    return Exit::indeterminate;
  } catch (const PairingNotCertified& e) {
    std::cerr << e.what() << std::endl;
    return Exit::indeterminate;
  } catch (const NctError& e) {
    std::cerr << e.what() << std::endl;
    return Exit::violation;
  } catch (const std::exception& e) {
    std::cerr << e.what() << std::endl;
    return Exit::config_error;
  }
}
