#include "exitbsde/cli_commands.hpp"
#include "exitbsde/mc.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo loss experiments for stopped diffusions on bounded domains"};
  app.require_subcommand(1);

  std::string config_path;
  std::string outdir;
  int threads = exitbsde::default_thread_count();

  const std::vector<std::string> commands = {
      "simulate",  "loss-eval", "rate-study", "exit-study", "decompose-check",
      "wald",      "train",     "validate",   "verify-all"};
  for (const auto& name : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("-o,--out", outdir, "output directory (overrides output.directory)");
    sub->add_option("-t,--threads", threads, "worker count cap (results do not depend on it)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  return exitbsde::run_command(command, config_path, outdir, threads, std::cout, std::cerr);
}
