// Acceptance suite: runs every agreed end-to-end criterion at its stated
// tolerance and prints one pass/fail line per criterion. Exit code 0 iff all
// criteria hold.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "kansim/experiments.hpp"

using namespace kansim;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
    char buf[4096];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// --- criterion 1: exhaustive unit-vs-oracle equivalence -----------------------

void criterion_1() {
    auto t0 = std::chrono::steady_clock::now();
    CheckResult r = checks::oracle_equivalence();
    double secs = seconds_since(t0);
    bool pass = r.passed && secs < 10.0;
    report(1, pass,
           fmt("basis unit oracle equivalence, G in [2,10] x P in [1,3] x all 256 codes: %s "
               "(%.2fs, limit 10s)",
               r.detail.c_str(), secs));
}

// --- criterion 2: fixed-point table byte values --------------------------------

void criterion_2() {
    QuantParams q;  // defaults: lut_scale 191, 8-bit addresses
    q.x_scale = 1.0;
    BSplineLut lut = build_lut(3, q);
    int direct0 = lut.at(0, 0), direct1 = lut.at(0, 1);
    int mirror0 = lut.at(255, 1), mirror1 = lut.at(255, 0);  // reverse packed
    bool pass = direct0 == 0 && direct1 == 32 && mirror0 == 127 && mirror1 == 32;
    report(2, pass,
           fmt("cubic table row 0 stores (%d, %d) [expect (0, 32)]; mirrored read yields "
               "(%d, %d) [expect (127, 32)] at lut_scale %.0f",
               direct0, direct1, mirror0, mirror1, q.lut_scale));
}

// --- criterion 3: partition of unity, float and quantized ----------------------

void criterion_3() {
    CheckResult f = checks::partition_of_unity(10000);
    Rng rng(123);
    double worst = 0.0;
    bool quant_ok = true;
    for (int s = 0; s < 10000; ++s) {
        int p = static_cast<int>(rng.uniform_int(1, 3));
        int g = static_cast<int>(rng.uniform_int(2, 12));
        UniformGrid grid(rng.uniform_real(-6.0, 2.0), rng.uniform_real(0.05, 3.0), g, p);
        QuantParams q = calibrate_for_grid(grid);
        BSplineLut lut = build_lut(p, q);
        int code = static_cast<int>(rng.uniform_int(0, 255));
        SparseActivationBlock b = evaluate(code, grid, lut, q);
        double sum = 0.0;
        for (int j = 0; j < b.lanes; ++j) sum += b.values[static_cast<size_t>(j)] / q.lut_scale;
        double dev = std::abs(sum - 1.0);
        worst = std::max(worst, dev);
        if (dev > (p + 1) / q.lut_scale) quant_ok = false;
    }
    bool pass = f.passed && quant_ok;
    report(3, pass,
           fmt("float basis rows: %s; quantized blocks: max |sum-1| = %.6f within (P+1)/lut_scale",
               f.detail.c_str(), worst));
}

// --- criterion 4: simulator functional fidelity --------------------------------

void criterion_4() {
    auto t0 = std::chrono::steady_clock::now();
    CheckResult r = checks::simulator_bit_exact(100, 20260809);
    double secs = seconds_since(t0);
    bool pass = r.passed && secs < 60.0;
    report(4, pass, fmt("%s (%.2fs, limit 60s)", r.detail.c_str(), secs));
}

// --- criterion 5: per-PE cycle-ratio law ----------------------------------------

void criterion_5() {
    bool pass = true;
    std::string fail_at;
    for (int p = 1; p <= 3 && pass; ++p) {
        for (int g = 2; g <= 10 && pass; ++g) {
            GemmOp op;
            op.kind = GemmKind::Kan;
            op.grid = UniformGrid(-1.0 - p * (2.0 / g), 2.0 / g, g, p);
            op.k_features = 8;  // K = R: a single row tile on the vector array
            op.n_outputs = 8;
            op.rows = 256;
            ArrayConfig sc;
            sc.rows = sc.cols = 8;
            ArrayConfig nm;
            nm.rows = nm.cols = 8;
            nm.pe = PeKind::VectorNM;
            nm.n = p + 1;
            nm.m = g + p;
            long long s = op_stats(op, sc).compute_cycles;
            long long v = op_stats(op, nm).compute_cycles;
            if (s != static_cast<long long>(g + p) * v) {
                pass = false;
                fail_at = fmt("G=%d P=%d: %lld vs %lld", g, p, s, v);
            }
        }
    }
    report(5, pass,
           pass ? std::string("single-tile KAN op: scalar/vector compute-cycle ratio = G+P "
                              "exactly for all G in [2,10], P in [1,3]")
                : "cycle ratio broke at " + fail_at);
}

// --- criterion 6: utilization bound and the MNIST-shaped figures ----------------

void criterion_6() {
    Rng rng(77);
    bool bound_ok = true;
    for (int trial = 0; trial < 200; ++trial) {
        int g = static_cast<int>(rng.uniform_int(2, 10));
        int p = static_cast<int>(rng.uniform_int(1, 3));
        GemmOp op;
        op.kind = GemmKind::Kan;
        op.grid = UniformGrid(-1.0, 2.0 / g, g, p);
        op.k_features = static_cast<int>(rng.uniform_int(1, 60));
        op.n_outputs = static_cast<int>(rng.uniform_int(1, 60));
        op.rows = rng.uniform_int(1, 512);
        ArrayConfig sc;
        sc.rows = static_cast<int>(rng.uniform_int(1, 32));
        sc.cols = static_cast<int>(rng.uniform_int(1, 32));
        if (op_stats(op, sc).utilization() > static_cast<double>(p + 1) / (g + p) + 1e-12) {
            bound_ok = false;
        }
    }

    const Workload& mnist = *find_builtin("mnist-kan");
    ArrayConfig sc32;
    sc32.rows = sc32.cols = 32;
    double scalar_util = simulate_workload(mnist, sc32).utilization();
    ArrayConfig nm16;
    nm16.rows = nm16.cols = 16;
    nm16.pe = PeKind::VectorNM;
    nm16.n = 4;
    nm16.m = 13;
    double nm_util = simulate_workload(mnist, nm16).utilization();

    bool pass = bound_ok && scalar_util >= 0.28 && scalar_util <= 0.31 && nm_util >= 0.97;
    report(6, pass,
           fmt("scalar KAN utilization bound (P+1)/(G+P): %s; MNIST 32x32 scalar = %.4f "
               "[0.28, 0.31]; MNIST 16x16 4:13 = %.4f [>= 0.97]",
               bound_ok ? "holds" : "VIOLATED", scalar_util, nm_util));
}

// --- criterion 7: area-parity runtime reduction ---------------------------------

void criterion_7() {
    ParityRuntimeReport rep = parity_runtime_report();
    bool pass = rep.mean_reduction >= 1.6 && rep.mean_reduction <= 2.4;
    std::string apps;
    for (const AppRuntime& a : rep.apps) {
        apps += fmt(" %s=%.2f", a.application.c_str(), a.reduction);
    }
    report(7, pass,
           fmt("cycle reduction at area parity (16x16 4:8 vs 32x32 scalar, G=5 P=3, "
               "MNIST-KAN excluded): mean %.3f in [1.6, 2.4] (geomean %.3f);%s",
               rep.mean_reduction, rep.geomean_reduction, apps.c_str()));
}

// --- criterion 8: average utilization improvement -------------------------------

void criterion_8() {
    std::vector<AppUtilization> rows = app_utilization_report();
    double avg_gap = 0.0;
    std::string detail;
    for (const AppUtilization& a : rows) {
        avg_gap += a.gap_pp;
        detail += fmt("\n    %-12s scalar %.4f  vector %.4f  gap %+5.1f pp", a.application.c_str(),
                      a.scalar_util, a.nm_util, a.gap_pp);
    }
    avg_gap /= static_cast<double>(rows.size());
    bool pass = avg_gap >= 30.0 && avg_gap <= 50.0;
    report(8, pass,
           fmt("average utilization gap (16x16 vector vs 32x32 scalar, native grids) = "
               "%.1f pp in [30, 50]; per application:%s",
               avg_gap, detail.c_str()));
}

// --- criterion 9: recursive-evaluation comparison --------------------------------

void criterion_9() {
    bool formula_ok = true;
    for (long long m : {1LL, 10LL, 1000LL, 1000000LL}) {
        long long expect = (3 + 1) * 4 + 5 + 3 - 1 + m;  // independent re-derivation
        if (arkane_cycles(3, 5, m, 4) != expect) formula_ok = false;
    }
    PowerAreaTable t = PowerAreaTable::defaults();
    TabulationComparison c = tabulation_speedup(3, 5, 10000000LL, t);
    bool pass = formula_ok && c.units_at_parity == 72 && c.speedup >= 72.0;
    report(9, pass,
           fmt("recursive cycle formula exact: %s; units at area parity = %lld [expect 72]; "
               "speedup at M=1e7 = %.3f [>= 72]",
               formula_ok ? "yes" : "NO", c.units_at_parity, c.speedup));
}

// --- criterion 10: per-PE normalized energy row ----------------------------------

void criterion_10() {
    PowerAreaTable t = PowerAreaTable::defaults();
    struct Case {
        const char* kind;
        int n, m, g, p;
        double expect;
        bool simulated;
    };
    // 1:2 has no degree with N = P+1 = 1 in the supported range, so its cycle
    // factor M comes from the (separately verified) cycle-ratio law.
    const Case cases[] = {
        {"1:2", 1, 2, 1, 0, 0.57, false}, {"2:4", 2, 4, 3, 1, 0.44, true},
        {"2:6", 2, 6, 5, 1, 0.37, true},  {"4:6", 4, 6, 3, 3, 0.47, true},
        {"4:8", 4, 8, 5, 3, 0.40, true},
    };
    bool pass = true;
    std::string detail;
    for (const Case& c : cases) {
        double norm;
        if (c.simulated) {
            Workload w = detail::mlp_workload("energy", "energy", {16, 16}, c.g, c.p, false);
            w.batch = 64;
            ArrayConfig sc;
            sc.rows = sc.cols = 16;
            ArrayConfig nm;
            nm.rows = nm.cols = 16;
            nm.pe = PeKind::VectorNM;
            nm.n = c.n;
            nm.m = c.m;
            SimStats s_sc = simulate_workload(w, sc);
            SimStats s_nm = simulate_workload(w, nm);
            norm = normalized_energy(s_nm, c.kind, s_sc, t);
        } else {
            SimStats s_sc, s_nm;
            s_nm.total_cycles = 1000;
            s_sc.total_cycles = 1000 * c.m;
            norm = normalized_energy(s_nm, c.kind, s_sc, t);
        }
        if (std::abs(norm - c.expect) > 0.01) pass = false;
        detail += fmt(" %s=%.4f(ref %.2f)", c.kind, norm, c.expect);
    }
    report(10, pass, "normalized energy per PE kind within 0.01 of the reference row:" + detail);
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    if (g_failures == 0) {
        std::printf("all 10 criteria passed\n");
        return 0;
    }
    std::printf("%d criteria FAILED\n", g_failures);
    return 1;
}
