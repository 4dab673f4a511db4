// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#include "petriflow/commands.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "petriflow/attention.hpp"
#include "petriflow/chain_compiler.hpp"
#include "petriflow/engine.hpp"
#include "petriflow/graph.hpp"
#include "petriflow/plan_format.hpp"
#include "petriflow/producers.hpp"

namespace petriflow::cli {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, path, "cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, path, "read failed");
  return buf.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, path, "cannot open for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, path, "write failed");
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& data) {
  write_file(path,
             std::string(reinterpret_cast<const char*>(data.data()), data.size()));
}

namespace {

// run=true applies the run command's exit contract (2 parse, 3 producer);
// every other command maps any failure to 1.
int guarded(std::ostream& err, bool run, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    nlohmann::json j = {{"error",
                         {{"code", to_string(e.code())},
                          {"location", e.location()},
                          {"message", e.what()}}}};
    err << j.dump(2) << "\n";
    if (!run) return 1;
    if (e.code() == ErrorCode::ProducerFailure) return 3;
    if (e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::IoError) return 1;
    return 2;
  } catch (const std::exception& e) {
    nlohmann::json j = {{"error", {{"code", "Internal"}, {"message", e.what()}}}};
    err << j.dump(2) << "\n";
    return 1;
  }
}

void emit(const std::optional<std::string>& path, const std::string& data,
          std::ostream& out) {
  if (path) {
    write_file(*path, data);
  } else {
    out << data;
  }
}

Report validate_text(const std::string& text, plan::ConclusionPolicy policy,
                     bool replay) {
  auto [doc, report] = plan::check_trace(text, policy);
  if (doc && report.ok() && replay) {
    try {
      engine::replay_trace(*doc, policy);
    } catch (const Error& e) {
      report.add(e.code(), e.location(), e.what());
    }
  }
  return report;
}

std::vector<std::string> trace_files(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Directed cycle as [a, ..., a]; empty when the adjacency is acyclic.
std::vector<std::string> find_entity_cycle(
    const std::map<std::string, std::set<std::string>>& adj) {
  std::map<std::string, int> color;  // 0 unseen, 1 on stack, 2 done
  std::map<std::string, std::string> parent;
  std::vector<std::string> cycle;
  std::function<bool(const std::string&)> dfs = [&](const std::string& u) {
    color[u] = 1;
    if (auto it = adj.find(u); it != adj.end()) {
      for (const std::string& v : it->second) {
        if (color[v] == 1) {
          std::vector<std::string> path;
          for (std::string w = u; w != v; w = parent.at(w)) path.push_back(w);
          path.push_back(v);
          std::reverse(path.begin(), path.end());
          path.push_back(v);
          cycle = std::move(path);
          return true;
        }
        if (color[v] == 0) {
          parent[v] = u;
          if (dfs(v)) return true;
        }
      }
    }
    color[u] = 2;
    return false;
  };
  for (const auto& [node, targets] : adj) {
    if (color[node] == 0 && dfs(node)) return cycle;
  }
  return {};
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

int cmd_validate(const ValidateOptions& options, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, false, [&]() -> int {
    const plan::ConclusionPolicy policy = cfg::policy_of(options.policy);
    if (!fs::exists(options.input)) {
      throw Error(ErrorCode::IoError, options.input, "no such file or directory");
    }
    if (!fs::is_directory(options.input)) {
      const Report report =
          validate_text(read_file(options.input), policy, options.replay);
      out << report.to_json().dump(2) << "\n";
      return report.ok() ? 0 : 1;
    }

    const std::vector<std::string> files = trace_files(options.input);
    std::vector<Report> reports(files.size());
    const int workers =
        std::max(1, std::min<int>(options.workers, static_cast<int>(files.size())));
    if (workers <= 1) {
      for (std::size_t i = 0; i < files.size(); ++i) {
        reports[i] = validate_text(read_file(files[i]), policy, options.replay);
      }
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t i = next.fetch_add(1); i < files.size();
               i = next.fetch_add(1)) {
            try {
              reports[i] = validate_text(read_file(files[i]), policy, options.replay);
            } catch (const Error& e) {
              reports[i].add(e.code(), e.location(), e.what());
            }
          }
        });
      }
      for (std::thread& t : pool) t.join();
    }

    std::size_t ok_count = 0;
    nlohmann::json per_file = nlohmann::json::array();
    for (std::size_t i = 0; i < files.size(); ++i) {
      nlohmann::json row = reports[i].to_json();
      row["path"] = files[i];
      per_file.push_back(std::move(row));
      if (reports[i].ok()) ++ok_count;
    }
    nlohmann::json summary = {{"files", files.size()},
                              {"ok", ok_count},
                              {"failed", files.size() - ok_count},
                              {"results", std::move(per_file)}};
    out << summary.dump(2) << "\n";
    return ok_count == files.size() ? 0 : 1;
  });
}

int cmd_compile(const CompileOptions& options, std::ostream& out,
                std::ostream& err) {
  return guarded(err, false, [&]() -> int {
    const std::string text = read_file(options.chains);
    const chains::RepetitionPolicy rep = options.strict_dedup
                                             ? chains::RepetitionPolicy::Strict
                                             : chains::RepetitionPolicy::Collapse;
    const std::vector<chains::ReasoningChain> parsed = chains::parse_chains(text, rep);

    // Physical line of each chain, for cycle reports. The grammar is strictly
    // line-oriented, so re-parsing single lines cannot disagree with the full
    // parse that just succeeded.
    std::vector<std::size_t> line_of;
    {
      std::istringstream lines(text);
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(lines, line)) {
        ++line_no;
        if (!chains::parse_chains(line, rep).empty()) line_of.push_back(line_no);
      }
    }
    std::map<std::pair<std::string, std::string>, std::size_t> edge_line;
    for (std::size_t k = 0; k < parsed.size(); ++k) {
      const auto& ents = parsed[k].entities;
      for (std::size_t i = 0; i + 1 < ents.size(); ++i) {
        edge_line.try_emplace({ents[i], ents[i + 1]}, line_of[k]);
      }
    }

    const std::vector<chains::ReasoningChain> kept =
        chains::dedup_chains(parsed, static_cast<std::size_t>(options.cap));
    graph::ReasoningDag dag;
    try {
      dag = chains::merge_chains(kept);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CycleDetected) throw;
      std::map<std::string, std::set<std::string>> adj;
      for (const auto& chain : kept) {
        for (std::size_t i = 0; i + 1 < chain.entities.size(); ++i) {
          adj[chain.entities[i]].insert(chain.entities[i + 1]);
        }
        adj.try_emplace(chain.entities.back());
      }
      const std::vector<std::string> cycle = find_entity_cycle(adj);
      std::set<std::size_t> cycle_lines;
      for (std::size_t i = 0; i + 1 < cycle.size(); ++i) {
        if (auto it = edge_line.find({cycle[i], cycle[i + 1]}); it != edge_line.end()) {
          cycle_lines.insert(it->second);
        }
      }
      std::string where = "lines";
      for (std::size_t line : cycle_lines) where += " " + std::to_string(line);
      throw Error(ErrorCode::CycleDetected, where,
                  "entity cycle: " + join(cycle, "->"));
    }

    const plan::PlanDocument plan = chains::compile_to_plan(dag);
    const std::string plan_text = plan::serialize_plan(plan);
    if (options.out) {
      write_file(*options.out, plan_text);
    } else if (!options.stats) {
      out << plan_text;
    }
    if (options.dot) write_file(*options.dot, graph::to_dot(dag));
    if (options.net_dot) write_file(*options.net_dot, graph::to_dot(graph::dag_to_petri(dag)));
    if (options.stats) {
      out << chains::merge_stats(kept, dag).to_json().dump(2) << "\n";
    }
    return 0;
  });
}

int cmd_run(const RunCommandOptions& options, std::ostream& out,
            std::ostream& err) {
  return guarded(err, true, [&]() -> int {
    const cfg::Config& config = options.config;
    cfg::validate(config);

    std::unique_ptr<engine::StepProducer> producer;
    if (config.producer == "synthetic") {
      std::string plan_text;
      if (options.plan) {
        plan_text = read_file(*options.plan);
      } else if (options.chains) {
        const auto parsed = chains::parse_chains(
            read_file(*options.chains), config.strict_dedup
                                            ? chains::RepetitionPolicy::Strict
                                            : chains::RepetitionPolicy::Collapse);
        const auto kept =
            chains::dedup_chains(parsed, static_cast<std::size_t>(config.chain_cap));
        plan_text = plan::serialize_plan(
            chains::compile_to_plan(chains::merge_chains(kept)));
      } else {
        throw Error(ErrorCode::ConfigError, "run",
                    "the synthetic producer needs --plan or --chains");
      }
      producer = std::make_unique<engine::SyntheticProducer>(
          std::move(plan_text), config.seed, config.min_step_tokens,
          config.max_step_tokens);
    } else if (config.producer == "scripted") {
      if (!options.script) {
        throw Error(ErrorCode::ConfigError, "run",
                    "the scripted producer needs --script");
      }
      nlohmann::json script;
      try {
        script = nlohmann::json::parse(read_file(*options.script));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, *options.script, e.what());
      }
      producer = std::make_unique<engine::ScriptedProducer>(std::move(script));
    } else {
      producer = std::make_unique<engine::RemoteProducer>(config.remote_host,
                                                          config.remote_port);
    }

    engine::RunOptions run_options;
    run_options.policy = cfg::policy_of(config);
    run_options.workers = config.workers;
    run_options.phase1_chunk = config.phase1_chunk;
    run_options.serial = options.serial;
    const engine::RunReport report =
        engine::run_inference(options.goal, *producer, run_options);

    emit(options.out, report.to_json().dump(2) + "\n", out);
    if (options.trace_out) {
      write_file(*options.trace_out, plan::serialize_trace(report.trace));
    }
    return 0;
  });
}

int cmd_mask(const MaskOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, false, [&]() -> int {
    const plan::ConclusionPolicy policy = cfg::policy_of(options.policy);
    const plan::TraceDocument doc = plan::parse_trace(read_file(options.trace), policy);
    const attn::SegmentLayout layout = attn::layout_from_trace(doc);
    emit(options.json_out, attn::export_json(layout).dump(2) + "\n", out);
    if (options.bin_out) write_file(*options.bin_out, attn::export_binary(layout));
    return 0;
  });
}

}  // namespace petriflow::cli
