// superrad: declarative runner for collective-emission experiments.
//
//   superrad simulate --config exp.json [--seed N] [--jobs N] [--out-dir DIR] [--keep-realizations]
//   superrad sweep    --config exp.json ...
//   superrad analyze  --config exp.json --input DIR/trajectory.csv [--out-dir DIR]
//
// Exit codes: 0 ok, 1 other failure, 2 config, 3 numerics, 4 I/O.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "superrad/config.hpp"
#include "superrad/error.hpp"
#include "superrad/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kNumerics = 3, kIo = 4 };

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw superrad::IoError("cannot open config " + path);
  }
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 0;
  std::string out_dir;
  bool keep_realizations = false;
  std::string input;
  bool echo = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON) or a run manifest")->required();
  cmd->add_option("--seed", o.seed, "Override ensemble.seed");
  cmd->add_option("--jobs", o.jobs, "Worker threads (0: all cores)");
  cmd->add_option("--out-dir", o.out_dir, "Override outputs.dir");
  cmd->add_flag("--echo-config", o.echo, "Print the resolved config and exit");
}

int run(superrad::Verb verb, const Options& o) {
  using namespace superrad;
  ExperimentConfig cfg = parse_config(read_text(o.config));
  if (o.seed) {
    cfg.scenario.ensemble.seed = *o.seed;
  }
  if (o.keep_realizations) {
    cfg.outputs.keep_realizations = true;
  }
  if (o.echo) {
    std::cout << echo_config(cfg);
    return kOk;
  }
  RunRequest req;
  req.verb = verb;
  req.jobs = o.jobs;
  req.out_dir = o.out_dir;
  req.input = o.input;
  const RunSummary s = run_experiment(cfg, req);
  std::cerr << verb_name(verb) << ": wrote " << s.data_files.size() + 1 << " files to "
            << s.out_dir.string();
  if (s.failed_rows > 0) {
    std::cerr << " (" << s.failed_rows << " analysis rows failed)";
  }
  std::cerr << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective emission of driven two-level atoms"};
  app.set_version_flag("--version", std::string(SUPERRAD_VERSION));
  app.require_subcommand(1);

  Options opts;
  superrad::Verb verb = superrad::Verb::Simulate;
  auto* simulate = app.add_subcommand("simulate", "One ensemble run: trajectory and analysis");
  add_common(simulate, opts);
  simulate->add_flag("--keep-realizations", opts.keep_realizations,
                     "Also write every realization's trajectory");
  simulate->callback([&] { verb = superrad::Verb::Simulate; });

  auto* sweep = app.add_subcommand("sweep", "Pulse-duration sweep: one analysis row per duration");
  add_common(sweep, opts);
  sweep->callback([&] { verb = superrad::Verb::Sweep; });

  auto* analyze = app.add_subcommand("analyze", "Re-run windows and fits on a stored trajectory");
  add_common(analyze, opts);
  analyze->add_option("--input", opts.input, "trajectory.csv from an earlier run")->required();
  analyze->callback([&] { verb = superrad::Verb::Analyze; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    return run(verb, opts);
  } catch (const superrad::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const superrad::InputError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const superrad::NumericsError& e) {
    std::cerr << "numerics error: " << e.what() << '\n';
    return kNumerics;
  } catch (const superrad::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}
