#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dpdopt/commands.hpp"

int main(int argc, char** argv) {
  using namespace dpdopt::cli;

  CLI::App app{"Differentially private decentralized optimization simulator"};
  app.require_subcommand(1);

  Options opts;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t record_every = 0;

  auto add_common = [&](CLI::App* cmd, bool with_record_every) {
    cmd->add_option("--config", opts.config_path, "JSON config file")->required();
    cmd->add_option("--out", out_dir, "output directory (overrides $DPDOPT_OUT_DIR)");
    cmd->add_option("--seed", seed, "master seed (overrides the config)");
    cmd->add_option("--jobs", opts.jobs, "worker threads for repeated runs")
        ->check(CLI::PositiveNumber);
    if (with_record_every)
      cmd->add_option("--record-every", record_every, "trace row spacing (overrides the config)");
  };

  auto* run = app.add_subcommand("run", "single run: trace CSV and summary JSON");
  add_common(run, true);
  auto* table1 = app.add_subcommand("table1", "noise-variance sweep of the final error");
  add_common(table1, false);
  auto* coupling = app.add_subcommand("coupling", "coupled saddle-escape experiment");
  add_common(coupling, false);
  auto* privacy = app.add_subcommand("privacy-report", "per-iteration epsilon CSV");
  add_common(privacy, false);
  auto* verify = app.add_subcommand("verify", "fast built-in property checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  for (CLI::App* cmd : {run, table1, coupling, privacy}) {
    if (!cmd->parsed()) continue;
    if (cmd->count("--out") > 0) opts.out_dir = out_dir;
    if (cmd->count("--seed") > 0) opts.seed = seed;
  }
  if (run->parsed() && run->count("--record-every") > 0) opts.record_every = record_every;

  return guarded(
      [&] {
        if (run->parsed()) return cmd_run(opts, std::cout, std::cerr);
        if (table1->parsed()) return cmd_table1(opts, std::cout, std::cerr);
        if (coupling->parsed()) return cmd_coupling(opts, std::cout, std::cerr);
        if (privacy->parsed()) return cmd_privacy_report(opts, std::cout, std::cerr);
        if (verify->parsed()) return cmd_verify(std::cout, std::cerr);
        return kExitConfig;
      },
      std::cerr);
}
