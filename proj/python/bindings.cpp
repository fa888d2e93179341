#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <wfchain/chain/block.hpp>
#include <wfchain/petrinet/semantics.hpp>
#include <wfchain/sim/generate.hpp>
#include <wfchain/sim/runner.hpp>

namespace py = pybind11;
using namespace wfchain;

namespace {

// JSON crosses the boundary as text; the Python side wraps it with json.loads.

Json result_json(const sim::RunResult& r, bool with_trace)
{
    Json finals = Json::array();
    for (const auto& f : r.finals) {
        finals.push_back({{"name", f.name},
                          {"confirmation_depth", f.confirmation_depth},
                          {"height", f.height},
                          {"head", f.head.hex()},
                          {"state_digest", f.state_digest.hex()},
                          {"visible_digest", f.visible_digest.hex()},
                          {"case_states", f.case_states}});
    }
    Json assertions = Json::array();
    for (const auto& a : r.assertions) assertions.push_back({{"name", a.name}, {"pass", a.pass}, {"evidence", a.evidence}});
    Json out = {{"scenario", r.scenario},
                {"seed", r.seed},
                {"design", std::string(engine::to_string(r.design))},
                {"passed", r.passed()},
                {"quiescent", r.quiescent},
                {"metrics", r.metrics.to_json()},
                {"finals", finals},
                {"assertions", assertions},
                {"errors", r.errors},
                {"reorg_checks", r.reorg_checks},
                {"reorg_mismatches", r.reorg_mismatches},
                {"invalid_confirmed", r.invalid_confirmed}};
    if (with_trace) out["trace"] = r.trace_text();
    return out;
}

sim::Scenario scenario_from(const std::string& text, const std::string& base_dir)
{
    return sim::Scenario::from_json(parse_canonical(text), base_dir);
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "wfchain native core";

    py::register_exception<sim::ScenarioError>(m, "ScenarioError", PyExc_ValueError);

    m.def("canonical", [](const std::string& text) { return canonical_bytes(parse_canonical(text)); },
          py::arg("json_text"));
    m.def("sha256_hex", [](const py::bytes& data) { return digest(std::string(data)).hex(); }, py::arg("data"));
    m.def("genesis_hash", [](const std::string& network) { return chain::Block::genesis(network).hash.hex(); },
          py::arg("network_id"));

    m.def(
        "run_scenario",
        [](const std::string& text, const std::string& base_dir, std::optional<std::uint64_t> seed,
           std::optional<std::string> design, bool trace) {
            const auto sc = scenario_from(text, base_dir);
            sim::RunOptions o;
            o.seed = seed;
            if (design) o.design = engine::design_from_string(*design);
            o.record_trace = trace;
            sim::RunResult r;
            {
                py::gil_scoped_release release;
                r = sim::run(sc, o);
            }
            return canonical_bytes(result_json(r, trace));
        },
        py::arg("scenario_json"), py::arg("base_dir") = "", py::arg("seed") = py::none(),
        py::arg("design") = py::none(), py::arg("trace") = false);

    m.def(
        "designs_equivalent",
        [](const std::string& text, const std::string& base_dir, std::uint64_t seed) {
            const auto sc = scenario_from(text, base_dir);
            const auto r = sim::designs_equivalent(sc, seed);
            return canonical_bytes(Json{{"pass", r.pass}, {"evidence", r.evidence}});
        },
        py::arg("scenario_json"), py::arg("base_dir") = "", py::arg("seed") = 0);

    m.def("generate_scenario", [](std::uint64_t seed) { return canonical_bytes(sim::generate_scenario(seed)); },
          py::arg("seed"));
    m.def("expected_latency", &sim::expected_latency, py::arg("k"), py::arg("p"));

    m.def(
        "is_reachable",
        [](const std::string& model_text, const std::string& from, const std::string& to) {
            const auto model = petri::WorkflowModel::from_json(parse_canonical(model_text));
            const auto r = petri::is_reachable(model, petri::marking_from_json(parse_canonical(from)),
                                               petri::marking_from_json(parse_canonical(to)));
            return std::string(petri::to_string(r));
        },
        py::arg("model_json"), py::arg("from_marking"), py::arg("to_marking"));
}
