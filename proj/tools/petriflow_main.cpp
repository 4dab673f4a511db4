// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "petriflow/commands.hpp"
#include "petriflow/config.hpp"

namespace {

void print_error(const petriflow::Error& e) {
  nlohmann::json j = {{"error",
                       {{"code", petriflow::to_string(e.code())},
                        {"location", e.location()},
                        {"message", e.what()}}}};
  std::cerr << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace petriflow;

  CLI::App app{"petriflow: Petri-net runtime for DAG-structured reasoning"};
  app.require_subcommand(1);

  cli::ValidateOptions vopt;
  std::optional<std::string> vconfig;
  bool no_replay = false;
  CLI::App* validate = app.add_subcommand(
      "validate", "Check a trace file (or a directory of *.txt traces) and "
                  "replay each valid trace against its compiled net");
  validate->add_option("input", vopt.input, "trace file or directory")->required();
  validate->add_option("--config", vconfig, "JSON config file");
  validate->add_option("--policy", vopt.policy,
                       "conclusion policy: single, multi, merge")
      ->capture_default_str();
  validate->add_option("--workers", vopt.workers, "parallel files for directories")
      ->capture_default_str();
  validate->add_flag("--no-replay", no_replay, "skip re-execution, syntax only");

  cli::CompileOptions copt;
  std::optional<std::string> cconfig;
  bool collapse_repeats = false;
  CLI::App* compile = app.add_subcommand(
      "compile", "Merge a reasoning-chain corpus into a DAG and emit its plan");
  compile->add_option("--chains", copt.chains, "chain corpus file")->required();
  compile->add_option("--config", cconfig, "JSON config file");
  compile->add_option("--out", copt.out, "plan destination (stdout if omitted)");
  compile->add_option("--dot", copt.dot, "write the merged DAG as DOT");
  compile->add_option("--net-dot", copt.net_dot, "write the compiled net as DOT");
  compile->add_flag("--stats", copt.stats,
                    "print merge statistics JSON to stdout instead of the plan");
  compile->add_option("--cap", copt.cap, "max chains kept after dedup")
      ->capture_default_str();
  compile->add_flag("--collapse-repeats", collapse_repeats,
                    "fold consecutive duplicate entities instead of rejecting");

  cli::RunCommandOptions ropt;
  std::optional<std::string> rconfig;
  std::string producer, endpoint, policy;
  int workers = 0;
  std::uint64_t seed = 0;
  std::size_t min_tokens = 0, max_tokens = 0, chunk = 0;
  CLI::App* run = app.add_subcommand(
      "run", "Execute a plan through the two-phase engine and print the run report");
  run->add_option("--plan", ropt.plan, "planning-stream file (synthetic producer)");
  run->add_option("--chains", ropt.chains, "compile this chain corpus into the plan");
  run->add_option("--script", ropt.script, "scripted producer JSON file");
  run->add_option("--goal", ropt.goal, "goal text seeding the run")
      ->capture_default_str();
  run->add_option("--out", ropt.out, "report destination (stdout if omitted)");
  run->add_option("--trace-out", ropt.trace_out, "write the emitted trace here");
  run->add_flag("--serial", ropt.serial, "one transition per round (reference mode)");
  run->add_option("--config", rconfig, "JSON config file");
  run->add_option("--producer", producer, "synthetic, scripted, or remote");
  run->add_option("--endpoint", endpoint, "remote producer host:port");
  run->add_option("--workers", workers, "concurrent producers");
  run->add_option("--seed", seed, "synthetic producer seed");
  run->add_option("--policy", policy, "conclusion policy: single, multi, merge");
  run->add_option("--min-tokens", min_tokens, "synthetic minimum step length");
  run->add_option("--max-tokens", max_tokens, "synthetic maximum step length");
  run->add_option("--chunk", chunk, "plan-scan decode chunk size");

  cli::MaskOptions mopt;
  CLI::App* mask = app.add_subcommand(
      "mask", "Export the attention mask runs and position indices of a trace");
  mask->add_option("--trace", mopt.trace, "trace file")->required();
  mask->add_option("--json", mopt.json_out, "JSON destination (stdout if omitted)");
  mask->add_option("--bin", mopt.bin_out, "binary destination");
  mask->add_option("--policy", mopt.policy, "conclusion policy for the trace")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      if (vconfig) {
        const cfg::Config c = cfg::load_config(vconfig);
        if (!validate->count("--policy")) vopt.policy = c.conclusion_policy;
        if (!validate->count("--workers")) vopt.workers = c.workers;
      }
      vopt.replay = !no_replay;
      return cli::cmd_validate(vopt, std::cout, std::cerr);
    }
    if (*compile) {
      if (cconfig) {
        const cfg::Config c = cfg::load_config(cconfig);
        if (!compile->count("--cap")) copt.cap = c.chain_cap;
        if (!compile->count("--collapse-repeats")) {
          copt.strict_dedup = c.strict_dedup;
        }
      }
      if (collapse_repeats) copt.strict_dedup = false;
      return cli::cmd_compile(copt, std::cout, std::cerr);
    }
    if (*run) {
      cfg::Config c = cfg::load_config(rconfig);
      if (run->count("--producer")) c.producer = producer;
      if (run->count("--endpoint")) cfg::set_endpoint(c, endpoint);
      if (run->count("--workers")) c.workers = workers;
      if (run->count("--seed")) c.seed = seed;
      if (run->count("--policy")) c.conclusion_policy = policy;
      if (run->count("--min-tokens")) c.min_step_tokens = min_tokens;
      if (run->count("--max-tokens")) c.max_step_tokens = max_tokens;
      if (run->count("--chunk")) c.phase1_chunk = chunk;
      ropt.config = std::move(c);
      return cli::cmd_run(ropt, std::cout, std::cerr);
    }
    return cli::cmd_mask(mopt, std::cout, std::cerr);
  } catch (const Error& e) {
    print_error(e);
    return 1;
  }
}
