#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "kansim/sim_types.hpp"

namespace kansim {

struct PePowerDelay {
    double power_mw = 0.0;
    double delay_ns = 0.0;
};

// Hardware constants consumed as configuration: per-PE post-synthesis power
// and delay for the supported sparsity patterns, array-level area anchors,
// and the reference single-precision FMA used for the recursive-evaluation
// comparison. All values are overridable from a constants file.
struct PowerAreaTable {
    std::map<std::string, PePowerDelay> pe;  // key "N:M"; "1:1" is the scalar PE
    double scalar_32x32_area_mm2 = 0.50;
    double vector_16x16_area_mm2 = 0.47;
    double bspline_unit_area_mm2 = 450e-6;  // 450 um^2
    double fma_area_mm2 = 0.0081;
    int fma_latency_cycles = 4;

    static PowerAreaTable defaults() {
        PowerAreaTable t;
        t.pe["1:1"] = {0.35, 1.02};
        t.pe["1:2"] = {0.40, 1.05};
        t.pe["2:4"] = {0.62, 1.15};
        t.pe["2:6"] = {0.77, 1.19};
        t.pe["4:6"] = {0.98, 1.28};
        t.pe["4:8"] = {1.12, 1.31};
        return t;
    }

    const PePowerDelay& lookup(const std::string& kind) const {
        auto it = pe.find(kind);
        if (it == pe.end()) {
            throw std::invalid_argument("PowerAreaTable: unknown PE kind " + kind);
        }
        return it->second;
    }
    bool has(const std::string& kind) const { return pe.count(kind) != 0; }
};

inline nlohmann::ordered_json dump_constants(const PowerAreaTable& t) {
    nlohmann::ordered_json j;
    j["format"] = "kansim-constants-v1";
    for (const auto& [kind, pd] : t.pe) {
        j["pe"][kind] = {{"power_mw", pd.power_mw}, {"delay_ns", pd.delay_ns}};
    }
    j["area"]["scalar_32x32_mm2"] = t.scalar_32x32_area_mm2;
    j["area"]["vector_16x16_mm2"] = t.vector_16x16_area_mm2;
    j["area"]["bspline_unit_mm2"] = t.bspline_unit_area_mm2;
    j["area"]["fma_mm2"] = t.fma_area_mm2;
    j["fma_latency_cycles"] = t.fma_latency_cycles;
    return j;
}

// Missing fields keep their defaults, so a constants file may override only
// what it cares about.
inline PowerAreaTable parse_constants(const nlohmann::json& j) {
    PowerAreaTable t = PowerAreaTable::defaults();
    if (j.contains("format") && j["format"] != "kansim-constants-v1") {
        throw std::invalid_argument("constants file: unrecognized format field");
    }
    if (j.contains("pe")) {
        for (const auto& [kind, pd] : j["pe"].items()) {
            PePowerDelay v = t.pe.count(kind) ? t.pe[kind] : PePowerDelay{};
            v.power_mw = pd.value("power_mw", v.power_mw);
            v.delay_ns = pd.value("delay_ns", v.delay_ns);
            require(v.power_mw > 0.0, "constants file: pe." + kind + ".power_mw must be positive");
            t.pe[kind] = v;
        }
    }
    if (j.contains("area")) {
        const auto& a = j["area"];
        t.scalar_32x32_area_mm2 = a.value("scalar_32x32_mm2", t.scalar_32x32_area_mm2);
        t.vector_16x16_area_mm2 = a.value("vector_16x16_mm2", t.vector_16x16_area_mm2);
        t.bspline_unit_area_mm2 = a.value("bspline_unit_mm2", t.bspline_unit_area_mm2);
        t.fma_area_mm2 = a.value("fma_mm2", t.fma_area_mm2);
    }
    t.fma_latency_cycles = j.value("fma_latency_cycles", t.fma_latency_cycles);
    require(t.scalar_32x32_area_mm2 > 0 && t.vector_16x16_area_mm2 > 0 &&
                t.bspline_unit_area_mm2 > 0 && t.fma_area_mm2 > 0 && t.fma_latency_cycles >= 0,
            "constants file: areas and latencies must be positive");
    return t;
}

inline PowerAreaTable load_constants(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "load_constants: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("constants file: malformed JSON: " + std::string(e.what()));
    }
    return parse_constants(j);
}

// --- recursive-evaluation cost model -------------------------------------------

// Wavefront pipeline cost of evaluating all G+P basis functions for each of
// m_inputs inputs with P+1 pipelined floating-point MAC stages.
inline long long arkane_cycles(int p, int g, long long m_inputs, int pe_latency) {
    require(p >= 1 && g >= 1 && m_inputs >= 1 && pe_latency >= 0, "arkane_cycles: bad arguments");
    return static_cast<long long>(p + 1) * pe_latency + g + p - 1 + m_inputs;
}

struct TabulationComparison {
    long long units_at_parity = 0;  // lookup units fitting in the recursive design's area
    long long recursive_cycles = 0;
    long long tabulated_cycles = 0;  // one input per unit per cycle
    double speedup = 0.0;
};

inline TabulationComparison tabulation_speedup(int p, int g, long long m_inputs,
                                               const PowerAreaTable& t) {
    TabulationComparison r;
    double parity_area = static_cast<double>(p + 1) * t.fma_area_mm2;
    r.units_at_parity = static_cast<long long>(std::floor(parity_area / t.bspline_unit_area_mm2 + 1e-9));
    r.units_at_parity = std::max(1LL, r.units_at_parity);
    r.recursive_cycles = arkane_cycles(p, g, m_inputs, t.fma_latency_cycles);
    r.tabulated_cycles = ceil_div(m_inputs, r.units_at_parity);
    r.speedup = static_cast<double>(r.recursive_cycles) / static_cast<double>(r.tabulated_cycles);
    return r;
}

// --- energy ---------------------------------------------------------------------

// Energy proxy: per-PE power times total cycles. Normalization divides by the
// scalar baseline running the same workload.
inline double energy_estimate(const SimStats& stats, const std::string& pe_kind,
                              const PowerAreaTable& t) {
    return t.lookup(pe_kind).power_mw * static_cast<double>(stats.total_cycles);
}

inline double normalized_energy(const SimStats& stats, const std::string& pe_kind,
                                const SimStats& scalar_baseline, const PowerAreaTable& t) {
    double base = energy_estimate(scalar_baseline, "1:1", t);
    return energy_estimate(stats, pe_kind, t) / base;
}

// --- area ------------------------------------------------------------------------

// Linear PE-count scaling from the two synthesis anchors.
inline double array_area_mm2(const ArrayConfig& c, const PowerAreaTable& t) {
    double pes = static_cast<double>(c.rows) * c.cols;
    if (c.pe == PeKind::Scalar) return t.scalar_32x32_area_mm2 * pes / (32.0 * 32.0);
    return t.vector_16x16_area_mm2 * pes / (16.0 * 16.0);
}

struct ParityPair {
    int scalar_rows = 0, scalar_cols = 0;
    int nm_rows = 0, nm_cols = 0;
    double scalar_area_mm2 = 0.0;
    double nm_area_mm2 = 0.0;
};

// Matched (scalar, vector) array geometries of near-equal area: a 2Rx2C
// scalar array pairs with an RxC vector array, scaled from the anchors.
inline std::vector<ParityPair> area_parity_pairs(const PowerAreaTable& t) {
    std::vector<ParityPair> pairs;
    for (int r : {2, 4, 8, 16}) {
        ParityPair p;
        p.nm_rows = p.nm_cols = r;
        p.scalar_rows = p.scalar_cols = 2 * r;
        p.scalar_area_mm2 = t.scalar_32x32_area_mm2 * (4.0 * r * r) / 1024.0;
        p.nm_area_mm2 = t.vector_16x16_area_mm2 * (1.0 * r * r) / 256.0;
        pairs.push_back(p);
    }
    return pairs;
}

}  // namespace kansim
