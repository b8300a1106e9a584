// forenlab: synthetic-field super-resolution workbench.
//
// Subcommands cover the full loop: gen (synthetic dataset), train, eval,
// sweep (hyperparameter scan), infer (single grid) and spectrum (radial band
// energy comparison). Every knob is a key=value pair; --config loads a file
// of them, --set overrides single keys and the dedicated flags are sugar for
// the most common ones. Precedence: flag > --set > config file > environment
// seed > built-in default.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "forenlab/commands.hpp"

namespace {

using forenlab::cli::RunConfig;

struct CliArgs {
  std::string config_file;
  std::vector<std::string> sets;
  // direct flags, applied last; each maps onto one config key
  std::vector<std::pair<std::string, std::string>> flags;
};

void add_flag_option(CLI::App* cmd, CliArgs& args, const std::string& flag,
                     const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&args, key](const std::string& v) { args.flags.emplace_back(key, v); }, help);
}

void add_common_options(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("--config", args.config_file, "key=value config file");
  cmd->add_option("--set", args.sets, "override a single key=value pair (repeatable)");
  add_flag_option(cmd, args, "--seed", "seed", "master RNG seed");
  add_flag_option(cmd, args, "--arch", "arch", "model architecture");
  add_flag_option(cmd, args, "--epochs", "epochs", "training epochs");
  add_flag_option(cmd, args, "--manifest", "manifest", "dataset manifest path");
  add_flag_option(cmd, args, "--checkpoint", "checkpoint", "checkpoint path");
  add_flag_option(cmd, args, "--report", "report", "CSV report path");
  add_flag_option(cmd, args, "--out-dir", "out_dir", "output directory for gen");
  add_flag_option(cmd, args, "--input", "input", "LR input grid path");
  add_flag_option(cmd, args, "--output", "output", "SR output grid path");
  add_flag_option(cmd, args, "--pgm", "pgm", "also write a 16-bit PGM preview");
  add_flag_option(cmd, args, "--target", "target", "HR target grid path");
  add_flag_option(cmd, args, "--recon", "recon", "reconstruction grid path");
  add_flag_option(cmd, args, "--param", "sweep_param", "sweep parameter name");
  add_flag_option(cmd, args, "--values", "sweep_values", "comma-separated sweep values");
  add_flag_option(cmd, args, "--bands", "bands", "number of radial bands");
  add_flag_option(cmd, args, "--workers", "workers", "parallel sweep workers");
}

RunConfig resolve(const CliArgs& args) {
  RunConfig cfg = RunConfig::defaults();
  if (!args.config_file.empty()) cfg.load_file(args.config_file);
  for (const std::string& kv : args.sets) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw forenlab::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [key, value] : args.flags) cfg.set(key, value);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frequency-aware super-resolution workbench"};
  app.require_subcommand(1);

  CliArgs args;
  int (*run)(const RunConfig&) = nullptr;
  auto bind = [&](const char* name, const char* help, int (*fn)(const RunConfig&)) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common_options(cmd, args);
    cmd->callback([&run, fn] { run = fn; });
    return cmd;
  };
  bind("gen", "generate a synthetic dataset with a manifest", forenlab::cli::cmd_gen);
  bind("train", "train a model on a manifest dataset", forenlab::cli::cmd_train);
  bind("eval", "evaluate a checkpoint against HR fields", forenlab::cli::cmd_eval);
  bind("sweep", "train across one hyperparameter and tabulate PSNR", forenlab::cli::cmd_sweep);
  bind("infer", "super-resolve one LR grid with a checkpoint", forenlab::cli::cmd_infer);
  bind("spectrum", "compare radial band energies of two grids", forenlab::cli::cmd_spectrum);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    // treat any command-line parse failure as a configuration error
    return code == 0 ? 0 : 2;
  }

  try {
    return run(resolve(args));
  } catch (const forenlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const forenlab::ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return 3;
  } catch (const forenlab::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const forenlab::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
