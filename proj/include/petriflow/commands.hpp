// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "petriflow/config.hpp"

namespace petriflow::cli {

// Command implementations behind the executable, stream-injected so they are
// directly testable. Each catches its own errors, prints a JSON error object
// to `err`, and returns the process exit code.
//
// Exit codes: 0 success; validate/compile/mask fail with 1; run distinguishes
// 2 (parse failure) and 3 (producer failure) from 1 (config or I/O).

struct ValidateOptions {
  std::string input;             // trace file or directory of *.txt traces
  std::string policy = "single";
  int workers = 1;               // parallel files for directory input
  bool replay = true;            // re-execute valid traces against their net
};

struct CompileOptions {
  std::string chains;                 // chain corpus file
  std::optional<std::string> out;     // plan text destination (stdout if unset)
  std::optional<std::string> dot;     // merged DAG in DOT
  std::optional<std::string> net_dot; // compiled net in DOT
  bool stats = false;                 // print merge stats JSON to stdout
  int cap = 10;
  bool strict_dedup = true;
};

struct RunCommandOptions {
  std::optional<std::string> plan;    // phase-one stream file (synthetic)
  std::optional<std::string> chains;  // compile chains into the plan instead
  std::optional<std::string> script;  // scripted producer JSON
  std::optional<std::string> out;     // run report destination (stdout if unset)
  std::optional<std::string> trace_out;
  std::string goal = "task";
  bool serial = false;
  cfg::Config config;
};

struct MaskOptions {
  std::string trace;                  // trace file
  std::optional<std::string> json_out;  // JSON export (stdout if unset)
  std::optional<std::string> bin_out;   // binary export
  std::string policy = "merge";
};

int cmd_validate(const ValidateOptions& options, std::ostream& out,
                 std::ostream& err);
int cmd_compile(const CompileOptions& options, std::ostream& out,
                std::ostream& err);
int cmd_run(const RunCommandOptions& options, std::ostream& out,
            std::ostream& err);
int cmd_mask(const MaskOptions& options, std::ostream& out, std::ostream& err);

// Throws IoError with the path as location.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& data);
void write_file(const std::string& path, const std::vector<std::uint8_t>& data);

}  // namespace petriflow::cli
