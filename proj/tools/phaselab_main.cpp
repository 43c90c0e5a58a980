// phaselab command line: run verification scenarios, list built-in presets,
// and diff two reports tolerance-aware.
//
//   phaselab run <config|preset:NAME> [--out DIR] [--seed N] [--format csv|text|both]
//   phaselab list
//   phaselab compare <reportA.csv> <reportB.csv>
//
// Exit code 0 iff every check passes (run) or the reports agree (compare).
// PHASELAB_THREADS is honored as the only environment knob; this build is
// single-threaded and rejects values above 1.

#include "phaselab/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct ReportRow {
    std::string check;
    double value = 0;
    double tolerance = 0;
    bool pass = false;
};

std::vector<ReportRow> read_report_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open report: " + path);
    std::vector<ReportRow> rows;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::stringstream ss(line);
        ReportRow r;
        std::string cell;
        std::getline(ss, r.check, ',');
        std::getline(ss, cell, ',');
        r.value = std::stod(cell);
        std::getline(ss, cell, ',');
        r.tolerance = std::stod(cell);
        std::getline(ss, cell, ',');
        r.pass = cell == "1";
        rows.push_back(std::move(r));
    }
    return rows;
}

int check_thread_env() {
    const char* t = std::getenv("PHASELAB_THREADS");
    if (!t) return 0;
    char* end = nullptr;
    const long n = std::strtol(t, &end, 10);
    if (end == t || n < 1) {
        std::cerr << "PHASELAB_THREADS must be a positive integer\n";
        return 2;
    }
    if (n > 1)
        std::cerr << "note: this build runs single-threaded; PHASELAB_THREADS=" << n
                  << " ignored\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"scenario-driven verification front end"};
    app.require_subcommand(1);

    std::string config_arg, out_dir, format = "csv";
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "run a scenario config and emit a report");
    run->add_option("config", config_arg, "config path or preset:NAME")->required();
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    auto* seed_opt = run->add_option("--seed", seed, "probe seed (overrides the config)");
    run->add_option("--format", format, "report format")
        ->check(CLI::IsMember({"csv", "text", "both"}));

    auto* list = app.add_subcommand("list", "print built-in scenario presets");

    std::string report_a, report_b;
    auto* cmp = app.add_subcommand("compare", "tolerance-aware diff of two report CSVs");
    cmp->add_option("reportA", report_a)->required();
    cmp->add_option("reportB", report_b)->required();

    CLI11_PARSE(app, argc, argv);

    if (int rc = check_thread_env()) return rc;

    try {
        if (list->parsed()) {
            for (const auto& [name, text] : phaselab::builtin_scenarios()) {
                auto cfg = phaselab::ScenarioConfig::parse_text(text, name);
                std::printf("%-26s layer=%-12s", name.c_str(), cfg.layer.c_str());
                if (cfg.entries().count("hamiltonian.preset"))
                    std::printf(" hamiltonian=%s", cfg.text("hamiltonian.preset").c_str());
                std::printf("\n");
            }
            return 0;
        }

        if (run->parsed()) {
            phaselab::ScenarioConfig cfg;
            if (config_arg.rfind("preset:", 0) == 0) {
                const std::string name = config_arg.substr(7);
                const auto& presets = phaselab::builtin_scenarios();
                auto it = presets.find(name);
                if (it == presets.end()) {
                    std::cerr << "unknown preset '" << name << "' (see `phaselab list`)\n";
                    return 2;
                }
                cfg = phaselab::ScenarioConfig::parse_text(it->second, config_arg);
            } else {
                cfg = phaselab::parse_scenario(config_arg);
            }
            if (!out_dir.empty()) cfg.override_output(out_dir);
            if (seed_opt->count() > 0) cfg.override_seed(seed);

            auto rep = phaselab::run_scenario(cfg);
            auto files = phaselab::emit_report(rep, format, cfg.output_dir);
            for (const auto& c : rep.checks)
                std::printf("%s  %-34s %.6g <= %.6g\n", c.pass ? "pass" : "FAIL",
                            c.name.c_str(), c.value, c.tolerance);
            for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
            std::fprintf(stderr, "wall %.2fs\n", rep.wall_seconds);
            return rep.all_pass() ? 0 : 1;
        }

        if (cmp->parsed()) {
            auto a = read_report_csv(report_a);
            auto b = read_report_csv(report_b);
            int mismatches = 0;
            auto find = [&](const std::string& name) -> const ReportRow* {
                for (const auto& r : b)
                    if (r.check == name) return &r;
                return nullptr;
            };
            for (const auto& ra : a) {
                const ReportRow* rb = find(ra.check);
                if (!rb) {
                    std::printf("only in A: %s\n", ra.check.c_str());
                    ++mismatches;
                    continue;
                }
                if (ra.pass != rb->pass || std::abs(ra.value - rb->value) > ra.tolerance) {
                    std::printf("differs: %-34s A=%.6g (%s)  B=%.6g (%s)  tol=%.6g\n",
                                ra.check.c_str(), ra.value, ra.pass ? "pass" : "fail",
                                rb->value, rb->pass ? "pass" : "fail", ra.tolerance);
                    ++mismatches;
                }
            }
            for (const auto& rb : b) {
                bool found = false;
                for (const auto& ra : a)
                    if (ra.check == rb.check) found = true;
                if (!found) {
                    std::printf("only in B: %s\n", rb.check.c_str());
                    ++mismatches;
                }
            }
            if (mismatches == 0) std::printf("reports agree within tolerances\n");
            return mismatches == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
