// Experiment runner: verification suites, single-workload runs, area-parity
// sweeps and the recursive-vs-tabulated basis comparison, with CSV/JSON
// output. Exit codes: 0 ok, 1 verification failure, 2 configuration error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kansim/experiments.hpp"

namespace {

using namespace kansim;

ArrayConfig parse_pe(const std::string& pe, int rows, int cols) {
    ArrayConfig c;
    c.rows = rows;
    c.cols = cols;
    if (pe == "scalar") return c;
    if (pe.rfind("nm:", 0) == 0) {
        int n = 0, m = 0;
        if (std::sscanf(pe.c_str(), "nm:%d:%d", &n, &m) == 2) {
            c.pe = PeKind::VectorNM;
            c.n = n;
            c.m = m;
            c.validate();
            return c;
        }
    }
    throw std::invalid_argument("--pe must be 'scalar' or 'nm:N:M' (got '" + pe + "')");
}

Workload resolve_workload(const std::string& name_or_path) {
    if (const Workload* w = find_builtin(name_or_path)) return *w;
    if (std::filesystem::exists(name_or_path)) return load_workload(name_or_path);
    throw std::invalid_argument("unknown workload '" + name_or_path +
                                "' (not a built-in name or a readable file)");
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(out_path, std::ios::binary);
    require(os.good(), "cannot open output file " + out_path);
    os << text;
}

int cmd_verify(const std::string& inject_fault) {
    VerifyReport rep = verify_all(inject_fault == "lut");
    for (const CheckResult& c : rep.checks) {
        std::cout << (c.passed ? "[ OK ] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
    }
    if (rep.all_passed()) {
        std::cout << "all checks passed\n";
        return 0;
    }
    std::cout << "verification failed\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weight-stationary systolic array model for spline-activation networks"};
    app.require_subcommand(1);

    // verify
    auto* verify = app.add_subcommand("verify", "run the oracle and bit-exactness suites");
    std::string inject_fault;
    verify->add_option("--inject-fault", inject_fault,
                       "test hook: corrupt a component before verifying (lut)");

    // shared run/sweep options
    std::string workload_name = "mnist-kan";
    int rows = 16, cols = 16;
    std::string pe = "scalar";
    long long batch = -1;
    long long seed = -1;
    std::string constants_path, format = "csv", out_path;

    auto* run = app.add_subcommand("run", "simulate one workload on one array");
    run->add_option("--workload", workload_name, "built-in name or workload file path");
    run->add_option("--rows", rows, "array rows");
    run->add_option("--cols", cols, "array columns");
    run->add_option("--pe", pe, "PE kind: scalar or nm:N:M");
    run->add_option("--batch", batch, "override the workload batch size");
    run->add_option("--seed", seed, "override the workload seed");
    run->add_option("--constants", constants_path, "power/area constants file");
    run->add_option("--format", format, "csv or json");
    run->add_option("--out", out_path, "output path (default stdout)");
    bool functional = false;
    run->add_flag("--functional", functional,
                  "also execute the streamed datapath and check it against the integer reference");

    auto* sweep = app.add_subcommand("sweep", "utilization and runtime vs area curves");
    std::string sizes_str = "2,4,8,16,32";
    sweep->add_option("--sizes", sizes_str, "comma-separated square array sizes");
    sweep->add_option("--constants", constants_path, "power/area constants file");
    sweep->add_option("--format", format, "csv or json");
    sweep->add_option("--out", out_path, "output path (default stdout)");

    auto* ark = app.add_subcommand("compare-arkane",
                                   "recursive wavefront evaluation vs the lookup unit");
    int ark_p = 3, ark_g = 5, ark_lat = 4;
    long long ark_m = 1000000;
    ark->add_option("--degree", ark_p, "spline degree P");
    ark->add_option("--grid-size", ark_g, "grid size G");
    ark->add_option("--inputs", ark_m, "number of inputs M");
    ark->add_option("--pe-latency", ark_lat, "FMA pipeline latency in cycles");
    ark->add_option("--constants", constants_path, "power/area constants file");
    ark->add_option("--format", format, "text, csv or json");
    ark->add_option("--out", out_path, "output path (default stdout)");

    auto* list = app.add_subcommand("list-workloads", "print the built-in application suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (verify->parsed()) return cmd_verify(inject_fault);

        PowerAreaTable table =
            constants_path.empty() ? PowerAreaTable::defaults() : load_constants(constants_path);

        if (list->parsed()) {
            for (const Workload& w : builtin_workloads()) {
                std::cout << w.name << "  (" << w.application << ", " << w.layers.size()
                          << " layers, batch " << w.batch << ")\n";
            }
            return 0;
        }

        if (run->parsed()) {
            Workload w = resolve_workload(workload_name);
            if (batch >= 1) w.batch = batch;
            if (seed >= 0) w.seed = static_cast<std::uint64_t>(seed);
            ArrayConfig config = parse_pe(pe, rows, cols);
            std::vector<RunRow> rows_out = run_workload(w, config, table);
            if (functional) {
                RealizedWorkload rw = random_parameters(w, w.seed);
                FunctionalResult fr = simulate_workload_functional(rw, config);
                Mat<std::int32_t> ref = reference_forward(rw);
                bool ok = ref == fr.output;
                std::cerr << "functional check: outputs "
                          << (ok ? "bit-identical to" : "DIFFER from") << " the integer reference\n";
                if (!ok) return 1;
            }
            std::ostringstream os;
            if (format == "json") {
                os << run_rows_json(rows_out).dump(2) << "\n";
            } else {
                write_run_csv(rows_out, os);
            }
            emit(os.str(), out_path);
            return 0;
        }

        if (sweep->parsed()) {
            std::vector<int> sizes;
            std::stringstream ss(sizes_str);
            std::string tok;
            while (std::getline(ss, tok, ',')) sizes.push_back(std::stoi(tok));
            require(!sizes.empty(), "--sizes must name at least one size");
            std::vector<SweepRow> rows_out = sweep_report(sizes, table);
            std::ostringstream os;
            if (format == "json") {
                nlohmann::ordered_json arr = nlohmann::ordered_json::array();
                for (const SweepRow& r : rows_out) {
                    arr.push_back({{"pe_kind", r.pe_kind},
                                   {"rows", r.rows},
                                   {"cols", r.cols},
                                   {"area_mm2", r.area_mm2},
                                   {"avg_utilization", r.avg_utilization},
                                   {"total_cycles", r.total_cycles}});
                }
                os << arr.dump(2) << "\n";
            } else {
                write_sweep_csv(rows_out, os);
            }
            emit(os.str(), out_path);
            return 0;
        }

        if (ark->parsed()) {
            nlohmann::ordered_json j = arkane_report_json(ark_p, ark_g, ark_m, ark_lat, table);
            std::ostringstream os;
            if (format == "json") {
                os << j.dump(2) << "\n";
            } else if (format == "csv") {
                os << "P,G,inputs,pe_latency,recursive_cycles,tabulated_cycles,units_at_parity,"
                      "speedup\n";
                os << ark_p << ',' << ark_g << ',' << ark_m << ',' << ark_lat << ','
                   << j["recursive_cycles"] << ',' << j["tabulated_cycles"] << ','
                   << j["units_at_parity"] << ',' << format_double(j["speedup"]) << "\n";
            } else {
                os << "recursive wavefront: " << j["recursive_cycles"] << " cycles for "
                   << ark_m << " inputs (P=" << ark_p << ", G=" << ark_g << ", PE latency "
                   << ark_lat << ")\n";
                os << "lookup units at area parity: " << j["units_at_parity"] << "\n";
                os << "tabulated: " << j["tabulated_cycles"] << " cycles\n";
                os << "speedup: " << format_double(j["speedup"]) << "x\n";
            }
            emit(os.str(), out_path);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
