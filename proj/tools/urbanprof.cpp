// urbanprof: command-line driver for the area-profiling pipeline.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "urbanprof/csv.hpp"
#include "urbanprof/errors.hpp"
#include "urbanprof/pipeline.hpp"

namespace {

void apply_thread_cap() {
  const char* env = std::getenv("URBANPROF_THREADS");
  if (!env) return;
  const auto n = urbanprof::csv::parse_int(env);
  if (!n || *n < 1) throw urbanprof::ConfigError("URBANPROF_THREADS must be a positive integer");
  omp_set_num_threads(static_cast<int>(*n));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-cell activity profiling, clustering and validation"};
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool quiet = false;

  std::string commands;
  for (const auto& c : urbanprof::pipeline_commands()) commands += (commands.empty() ? "" : ", ") + c;
  app.add_option("command", command, "One of: " + commands)
      ->required()
      ->check(CLI::IsMember(urbanprof::pipeline_commands()));
  app.add_option("--config", config_path, "Pipeline config file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed for every stochastic stage (overrides the config)");
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  app.add_flag("--quiet", quiet, "Suppress progress messages");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    apply_thread_cap();
    urbanprof::ConfigOverrides overrides;
    overrides.seed = seed;
    if (out_dir) overrides.out_dir = *out_dir;
    const auto config = urbanprof::load_config(config_path, overrides);
    urbanprof::RunOptions options;
    if (!quiet) options.log = &std::cerr;
    urbanprof::run_command(command, config, options);
    return 0;
  } catch (const urbanprof::ConfigError& e) {
    std::cerr << "urbanprof: config error: " << e.what() << '\n';
    return 2;
  } catch (const urbanprof::DataError& e) {
    std::cerr << "urbanprof: data error: " << e.what() << '\n';
    return 3;
  } catch (const urbanprof::NumericError& e) {
    std::cerr << "urbanprof: numeric failure: " << e.what() << '\n';
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "urbanprof: " << e.what() << '\n';
    return 3;
  }
}
