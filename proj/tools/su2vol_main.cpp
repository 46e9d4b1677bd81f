#include <algorithm>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "su2vol/cli.hpp"

namespace {

using su2vol::cli::ConfigSource;

struct CommonFlags {
  std::string config;
  std::vector<std::pair<std::string, std::string>> overrides;
};

/// Registers the shared flags; each given flag becomes a config override.
void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "key = value configuration file")->check(CLI::ExistingFile);
  auto override_of = [&flags](const char* key) {
    return [&flags, key](const std::string& v) { flags.overrides.emplace_back(key, v); };
  };
  cmd->add_option_function<std::string>("--seed", override_of("seed"), "master seed");
  cmd->add_option_function<std::string>("--samples", override_of("samples"), "Monte Carlo samples per ball");
  cmd->add_option_function<std::string>("--out", override_of("out"), "output directory");
  cmd->add_option_function<std::string>("--format", override_of("format"), "csv or json");
  cmd->add_option_function<std::string>("--tolerance", override_of("tolerance"), "identity residual tolerance");
  cmd->add_option_function<std::string>("--threads", override_of("threads"), "worker threads for sweeps");
}

su2vol::Config resolve(const CommonFlags& flags) { return su2vol::cli::resolve_config({flags.config, flags.overrides}); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volumes of metric balls on SU(2) x R^n: identities, reduction, estimator and sweeps"};
  app.require_subcommand(1);

  CommonFlags verify_flags, estimate_flags, ball_flags, sweep_flags;
  auto* verify = app.add_subcommand("verify-identities", "run the identity suite and write a residual table");
  add_common_flags(verify, verify_flags);

  std::string metric_path;
  auto* reduce = app.add_subcommand("reduce", "print the canonical parameters of a Gram matrix");
  reduce->add_option("metric", metric_path, "file with (3+n)^2 numbers or a JSON array; '-' for stdin")->required();

  auto* estimate = app.add_subcommand("estimate", "tabulate the closed-form estimator over the config grid");
  add_common_flags(estimate, estimate_flags);

  std::vector<double> a_values;
  double d = 0.0;
  double r = 0.0;
  auto* ball = app.add_subcommand("ball-volume", "certified Monte Carlo bracket for one ball");
  add_common_flags(ball, ball_flags);
  ball->add_option("--a", a_values, "a1 a2 a3 (sorted on input)")->expected(3)->required();
  ball->add_option("--d", d, "coupling d >= 0");
  ball->add_option("--r", r, "radius")->required();

  auto* sweep = app.add_subcommand("sweep", "sandwich and doubling sweep over the config grid");
  add_common_flags(sweep, sweep_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return su2vol::cli::kExitUsage;
  }

  try {
    if (*verify) return su2vol::cli::cmd_verify_identities(resolve(verify_flags), std::cout);
    if (*reduce) return su2vol::cli::cmd_reduce(metric_path, std::cout);
    if (*estimate) return su2vol::cli::cmd_estimate(resolve(estimate_flags), std::cout);
    if (*ball) {
      std::sort(a_values.begin(), a_values.end());
      const su2vol::Parameters p{{a_values[0], a_values[1], a_values[2]}, d};
      return su2vol::cli::cmd_ball_volume(resolve(ball_flags), p, r, std::cout);
    }
    if (*sweep) return su2vol::cli::cmd_sweep(resolve(sweep_flags), std::cout);
  } catch (const su2vol::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return su2vol::cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return su2vol::cli::kExitCheckFailed;
  }
  return su2vol::cli::kExitUsage;
}
