#pragma once

#include <string>
#include <vector>

#include "kansim/common.hpp"

namespace kansim {

enum class PeKind { Scalar, VectorNM };

// Geometry and PE flavor of one weight-stationary array. VectorNM PEs hold M
// coefficients and issue N MAC lanes per cycle; scalar PEs hold one
// coefficient and issue one lane.
struct ArrayConfig {
    int rows = 16;
    int cols = 16;
    PeKind pe = PeKind::Scalar;
    int n = 1;  // lanes per cycle (VectorNM)
    int m = 1;  // resident coefficients per PE (VectorNM)

    // Weight preload cost per tile. With the default full-width bus a tile
    // loads one PE row per cycle (rows cycles, both PE kinds). A narrower bus
    // (load_bus_rows < coefficient rows per PE) stretches that to
    // rows * ceil(rows_per_pe / load_bus_rows). An explicit override wins.
    int weight_load_cycles_per_tile = -1;  // < 0: derive from the bus model
    int load_bus_rows = 0;                 // 0: full width

    void validate() const {
        require(rows >= 1 && cols >= 1, "ArrayConfig: rows and cols must be >= 1");
        if (pe == PeKind::VectorNM) {
            require(n >= 1 && n <= m, "ArrayConfig: VectorNM requires 1 <= N <= M");
            require(m <= kMaxBlockLanes, "ArrayConfig: M exceeds the block lane capacity");
        }
    }

    int lanes() const { return pe == PeKind::VectorNM ? n : 1; }

    int preload_cycles(int rows_per_pe) const {
        if (weight_load_cycles_per_tile >= 0) return weight_load_cycles_per_tile;
        if (load_bus_rows <= 0) return rows;
        return rows * static_cast<int>(ceil_div(rows_per_pe, load_bus_rows));
    }

    std::string pe_name() const {
        if (pe == PeKind::Scalar) return "1:1";
        return std::to_string(n) + ":" + std::to_string(m);
    }
};

struct TileStats {
    int op_index = 0;
    long long preload_cycles = 0;
    long long compute_cycles = 0;
    long long useful_macs = 0;
    long long issued_mac_slots = 0;
};

// Cycle and MAC-slot accounting for one simulated run.
//
// total_cycles = preload_cycles + compute_cycles, where one tile computes for
// T + R + C - 1 cycles (skewed fill and drain included). The utilization
// denominator counts the slots issued while activations actually stream
// (R*C*lanes per streamed row); fill/drain bubbles cost cycles but no slots.
// A MAC slot is useful when its PE is validly mapped and the streamed operand
// is structurally part of the computation (for basis activations: one of the
// P+1 block positions, whatever its byte value).
struct SimStats {
    long long total_cycles = 0;
    long long preload_cycles = 0;
    long long compute_cycles = 0;
    long long useful_macs = 0;
    long long issued_mac_slots = 0;
    std::vector<TileStats> per_tile;

    double utilization() const {
        return issued_mac_slots == 0 ? 0.0
                                     : static_cast<double>(useful_macs) /
                                           static_cast<double>(issued_mac_slots);
    }

    void add(const TileStats& t) {
        preload_cycles += t.preload_cycles;
        compute_cycles += t.compute_cycles;
        total_cycles += t.preload_cycles + t.compute_cycles;
        useful_macs += t.useful_macs;
        issued_mac_slots += t.issued_mac_slots;
        per_tile.push_back(t);
    }

    void merge(const SimStats& o) {
        total_cycles += o.total_cycles;
        preload_cycles += o.preload_cycles;
        compute_cycles += o.compute_cycles;
        useful_macs += o.useful_macs;
        issued_mac_slots += o.issued_mac_slots;
        per_tile.insert(per_tile.end(), o.per_tile.begin(), o.per_tile.end());
    }
};

}  // namespace kansim
