#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <wfchain/sim/generate.hpp>
#include <wfchain/sim/runner.hpp>

using namespace wfchain;
using namespace wfchain::sim;

namespace {

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void report(const RunResult& r, std::ostream& os)
{
    os << r.scenario << " seed=" << r.seed << " design=" << engine::to_string(r.design)
       << " ticks=" << r.metrics.ticks << " quiescent=" << (r.quiescent ? "yes" : "no")
       << " blocks=" << r.metrics.blocks_mined << " forks=" << r.metrics.forks << " reorgs=" << r.metrics.reorgs
       << " confirmed=" << r.metrics.confirmed << "/" << r.metrics.transactions << "\n";
    for (const auto& a : r.assertions) {
        os << "  " << (a.pass ? "PASS " : "FAIL ") << a.name;
        if (!a.pass) os << " " << a.evidence.dump();
        os << "\n";
    }
    const auto list = [&](const char* what, const std::vector<std::string>& items) {
        for (const auto& i : items) os << "  " << what << ": " << i << "\n";
    };
    list("error", r.errors);
    list("reorg mismatch", r.reorg_mismatches);
    list("invalid confirmed", r.invalid_confirmed);
    list("pow failure", r.pow_failures);
    os << (r.passed() ? "PASS" : "FAIL") << "\n";
}

std::optional<engine::Design> parse_design(const std::string& s)
{
    if (s.empty()) return std::nullopt;
    return engine::design_from_string(s);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"wfchain scenario runner"};
    app.require_subcommand(1);

    std::string scenario_path, trace_path, metrics_path, design, out_path;
    std::optional<std::uint64_t> seed;

    auto* run_cmd = app.add_subcommand("run", "run one scenario");
    run_cmd->add_option("scenario", scenario_path)->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", seed);
    run_cmd->add_option("--trace", trace_path, "write the JSONL trace here");
    run_cmd->add_option("--metrics", metrics_path, "write a metrics CSV here");
    run_cmd->add_option("--design", design)->check(CLI::IsMember({"actions", "states"}));

    auto* mirror_cmd = app.add_subcommand("mirror", "run a scenario under both designs and compare case states");
    mirror_cmd->add_option("scenario", scenario_path)->required()->check(CLI::ExistingFile);
    mirror_cmd->add_option("--seed", seed);

    std::uint64_t first = 1, count = 100;
    auto* suite_cmd = app.add_subcommand("suite", "run randomly generated scenarios");
    suite_cmd->add_option("--first-seed", first);
    suite_cmd->add_option("--count", count);
    suite_cmd->add_option("--metrics", metrics_path);

    auto* gen_cmd = app.add_subcommand("generate", "print a random scenario");
    std::uint64_t gen_seed = 1;
    gen_cmd->add_option("--seed", gen_seed);
    gen_cmd->add_option("--out", out_path);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const auto sc = Scenario::load(scenario_path);
            RunOptions o;
            o.seed = seed;
            o.design = parse_design(design);
            o.record_trace = !trace_path.empty();
            const auto r = run(sc, o);
            if (!trace_path.empty()) write_file(trace_path, r.trace_text());
            if (!metrics_path.empty()) {
                write_file(metrics_path, Metrics::csv_header() + "\n" +
                                             r.metrics.csv_row(r.scenario, r.seed, sc.nodes.size(), r.quiescent) + "\n");
            }
            report(r, std::cout);
            return r.passed() ? 0 : 1;
        }
        if (*mirror_cmd) {
            const auto sc = Scenario::load(scenario_path);
            RunResult a, s;
            const auto eq = designs_equivalent(sc, seed.value_or(sc.seed), &a, &s);
            report(a, std::cout);
            report(s, std::cout);
            std::cout << (eq.pass ? "PASS " : "FAIL ") << "designs_equivalent " << eq.evidence.dump() << "\n";
            return eq.pass ? 0 : 1;
        }
        if (*suite_cmd) {
            std::string csv = Metrics::csv_header() + "\n";
            std::uint64_t failed = 0;
            const auto start = std::chrono::steady_clock::now();
            for (std::uint64_t s = first; s < first + count; ++s) {
                const auto sc = Scenario::from_json(generate_scenario(s));
                RunOptions o;
                o.record_trace = false;
                const auto r = run(sc, o);
                csv += r.metrics.csv_row(r.scenario, r.seed, sc.nodes.size(), r.quiescent) + "\n";
                if (!r.passed()) {
                    ++failed;
                    report(r, std::cout);
                }
            }
            const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
            if (!metrics_path.empty()) write_file(metrics_path, csv);
            std::cout << count - failed << "/" << count << " scenarios passed in " << took.count() << " s\n";
            return failed == 0 ? 0 : 1;
        }
        if (*gen_cmd) {
            const auto doc = generate_scenario(gen_seed);
            const auto text = doc.dump(2) + "\n";
            if (out_path.empty()) std::cout << text;
            else write_file(out_path, text);
            return 0;
        }
    } catch (const ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
