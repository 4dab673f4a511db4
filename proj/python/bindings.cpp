// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "petriflow/attention.hpp"
#include "petriflow/chain_compiler.hpp"
#include "petriflow/config.hpp"
#include "petriflow/engine.hpp"
#include "petriflow/graph.hpp"
#include "petriflow/kv_cache.hpp"
#include "petriflow/plan_format.hpp"
#include "petriflow/producers.hpp"

namespace py = pybind11;
using namespace petriflow;

namespace {

py::object json_to_py(const nlohmann::json& j) {
  using value_t = nlohmann::json::value_t;
  switch (j.type()) {
    case value_t::null:
      return py::none();
    case value_t::boolean:
      return py::bool_(j.get<bool>());
    case value_t::number_integer:
      return py::int_(j.get<long long>());
    case value_t::number_unsigned:
      return py::int_(j.get<unsigned long long>());
    case value_t::number_float:
      return py::float_(j.get<double>());
    case value_t::string:
      return py::str(j.get<std::string>());
    case value_t::array: {
      py::list out;
      for (const auto& item : j) out.append(json_to_py(item));
      return out;
    }
    case value_t::object: {
      py::dict out;
      for (const auto& [key, value] : j.items()) {
        out[py::str(key)] = json_to_py(value);
      }
      return out;
    }
    default:
      return py::none();
  }
}

nlohmann::json trace_json(const plan::TraceDocument& doc) {
  nlohmann::json outlines = nlohmann::json::array();
  for (const auto& o : doc.plan.outlines) {
    outlines.push_back(
        {{"id", o.index}, {"deps", o.deps}, {"description", o.description}});
  }
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : doc.steps) {
    steps.push_back({{"i", s.index}, {"text", s.text}});
  }
  return {{"preamble", doc.preamble},
          {"outlines", std::move(outlines)},
          {"steps", std::move(steps)},
          {"conclusion", doc.conclusion}};
}

engine::RunOptions run_options(const std::string& policy, int workers,
                               bool serial) {
  engine::RunOptions options;
  options.policy = cfg::policy_of(policy);
  options.workers = workers;
  options.serial = serial;
  return options;
}

py::dict run_and_convert(const std::string& goal, engine::StepProducer& producer,
                         const engine::RunOptions& options) {
  nlohmann::json report;
  {
    py::gil_scoped_release release;
    report = engine::run_inference(goal, producer, options).to_json();
  }
  return json_to_py(report);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Petri-net runtime for DAG-structured reasoning traces";

  py::register_exception<Error>(m, "PetriflowError");

  py::class_<kv::Handle>(m, "Handle")
      .def_readonly("id", &kv::Handle::id)
      .def("__repr__",
           [](const kv::Handle& h) {
             return "Handle(" + std::to_string(h.id) + ")";
           })
      .def("__eq__",
           [](const kv::Handle& a, const kv::Handle& b) { return a == b; },
           py::is_operator())
      .def("__hash__", [](const kv::Handle& h) { return py::hash(py::int_(h.id)); });

  py::class_<kv::RadixStore>(m, "RadixStore")
      .def(py::init<>())
      .def("new_sequence", &kv::RadixStore::new_sequence)
      .def("append", &kv::RadixStore::append, py::arg("handle"), py::arg("tokens"))
      .def(
          "append_text",
          [](kv::RadixStore& s, kv::Handle h, const std::string& text) {
            return s.append(h, kv::RadixStore::tokenize(text));
          },
          py::arg("handle"), py::arg("text"))
      .def("fork", &kv::RadixStore::fork, py::arg("handle"), py::arg("n"))
      .def("prefix_view", &kv::RadixStore::prefix_view, py::arg("handle"),
           py::arg("length"))
      .def("join_merge", &kv::RadixStore::join_merge, py::arg("branches"),
           py::arg("shared_prefix"))
      .def("release", &kv::RadixStore::release, py::arg("handle"))
      .def("live", &kv::RadixStore::live, py::arg("handle"))
      .def("materialize", &kv::RadixStore::materialize, py::arg("handle"))
      .def(
          "materialize_text",
          [](const kv::RadixStore& s, kv::Handle h) {
            return kv::RadixStore::detokenize(s.materialize(h));
          },
          py::arg("handle"))
      .def("length", &kv::RadixStore::length, py::arg("handle"))
      .def("last_op_node_visits", &kv::RadixStore::last_op_node_visits)
      .def("stats",
           [](const kv::RadixStore& s) {
             const kv::StoreStats st = s.stats();
             py::dict out;
             out["nodes"] = st.nodes;
             out["physicalTokens"] = st.physical_tokens;
             out["liveHandles"] = st.live_handles;
             return out;
           })
      .def("dump", [](const kv::RadixStore& s) { return json_to_py(s.dump()); })
      .def_static("tokenize",
                  [](const std::string& text) { return kv::RadixStore::tokenize(text); })
      .def_static("detokenize", &kv::RadixStore::detokenize);

  m.def(
      "check_trace",
      [](const std::string& text, const std::string& policy) {
        auto [doc, report] = plan::check_trace(text, cfg::policy_of(policy));
        return json_to_py(report.to_json());
      },
      py::arg("text"), py::arg("policy") = "single",
      "Structural and semantic validation report for a trace");

  m.def(
      "parse_trace",
      [](const std::string& text, const std::string& policy) {
        return json_to_py(trace_json(plan::parse_trace(text, cfg::policy_of(policy))));
      },
      py::arg("text"), py::arg("policy") = "single");

  m.def(
      "canonicalize_trace",
      [](const std::string& text, const std::string& policy) {
        return plan::serialize_trace(plan::parse_trace(text, cfg::policy_of(policy)));
      },
      py::arg("text"), py::arg("policy") = "single",
      "Parse, then re-serialize in canonical form");

  m.def(
      "compile_chains",
      [](const std::string& text, std::size_t cap, bool strict) {
        const auto parsed = chains::parse_chains(
            text, strict ? chains::RepetitionPolicy::Strict
                         : chains::RepetitionPolicy::Collapse);
        const auto kept = chains::dedup_chains(parsed, cap);
        const graph::ReasoningDag dag = chains::merge_chains(kept);
        py::dict out;
        out["plan"] = plan::serialize_plan(chains::compile_to_plan(dag));
        out["dot"] = graph::to_dot(dag);
        out["stats"] = json_to_py(chains::merge_stats(kept, dag).to_json());
        return out;
      },
      py::arg("text"), py::arg("cap") = 10, py::arg("strict") = true,
      "Merge a chain corpus into a DAG and compile its plan");

  m.def(
      "replay_trace",
      [](const std::string& text, const std::string& policy) {
        const auto doc = plan::parse_trace(text, cfg::policy_of(policy));
        const auto result = engine::replay_trace(doc, cfg::policy_of(policy));
        py::dict out;
        out["rounds"] = result.rounds;
        out["metrics"] = json_to_py(result.metrics.to_json());
        return out;
      },
      py::arg("text"), py::arg("policy") = "merge",
      "Re-execute a finished trace against its compiled net");

  m.def(
      "run_synthetic",
      [](const std::string& plan_text, const std::string& goal,
         std::uint64_t seed, int workers, bool serial, const std::string& policy,
         std::size_t min_len, std::size_t max_len) {
        engine::SyntheticProducer producer(plan_text, seed, min_len, max_len);
        return run_and_convert(goal, producer, run_options(policy, workers, serial));
      },
      py::arg("plan_text"), py::arg("goal") = "task", py::arg("seed") = 0,
      py::arg("workers") = 1, py::arg("serial") = false,
      py::arg("policy") = "merge", py::arg("min_len") = 40,
      py::arg("max_len") = 160,
      "Run the engine with the hash-deterministic synthetic producer");

  m.def(
      "run_scripted",
      [](const std::string& script_json, const std::string& goal, int workers,
         bool serial, const std::string& policy) {
        engine::ScriptedProducer producer(nlohmann::json::parse(script_json));
        return run_and_convert(goal, producer, run_options(policy, workers, serial));
      },
      py::arg("script_json"), py::arg("goal") = "task", py::arg("workers") = 1,
      py::arg("serial") = false, py::arg("policy") = "merge",
      "Run the engine with a fixture-driven scripted producer");

  m.def(
      "mask_export",
      [](const std::string& text, const std::string& policy) {
        const auto doc = plan::parse_trace(text, cfg::policy_of(policy));
        return json_to_py(attn::export_json(attn::layout_from_trace(doc)));
      },
      py::arg("text"), py::arg("policy") = "merge",
      "Attention mask runs, positions, and segments for a trace");

  m.def(
      "mask_binary",
      [](const std::string& text, const std::string& policy) {
        const auto doc = plan::parse_trace(text, cfg::policy_of(policy));
        const auto bytes = attn::export_binary(attn::layout_from_trace(doc));
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("text"), py::arg("policy") = "merge");

  m.attr("__version__") = "0.1.0";
}
