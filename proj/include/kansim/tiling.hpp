#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kansim/sim_types.hpp"
#include "kansim/spline.hpp"

namespace kansim {

enum class GemmKind { Kan, Dense };

// One lowered matrix multiply. KAN ops stream basis activations against a
// coefficient matrix of K*(G+P) rows; dense ops are plain K-row GEMMs (the
// ReLU bias branch and any MLP workload).
struct GemmOp {
    GemmKind kind = GemmKind::Dense;
    long long rows = 1;   // streamed activation rows (batch, or batch x spatial)
    int k_features = 1;   // K
    int n_outputs = 1;    // N
    std::optional<UniformGrid> grid;  // KAN only
    int layer_index = 0;
    bool is_bias_branch = false;

    long long weight_rows() const {
        if (kind == GemmKind::Kan) {
            require(grid.has_value(), "GemmOp: KAN op requires a grid");
            return static_cast<long long>(k_features) * grid->num_basis();
        }
        return k_features;
    }

    void validate() const {
        require(rows >= 1 && k_features >= 1 && n_outputs >= 1, "GemmOp: dims must be positive");
        if (kind == GemmKind::Kan) require(grid.has_value(), "GemmOp: KAN op requires a grid");
    }
};

// Tiles are expressed in PE-row units: one unit is what a single PE row of the
// array holds — one weight row (scalar), one feature's M coefficients
// (VectorNM + KAN), or N consecutive weight rows (VectorNM + dense). A KAN
// feature band therefore can never straddle two tiles on a VectorNM array.
struct Tile {
    int unit_begin = 0;
    int unit_end = 0;  // exclusive; unit_end - unit_begin <= config.rows
    int col_begin = 0;
    int col_end = 0;

    int mapped_rows() const { return unit_end - unit_begin; }
    int mapped_cols() const { return col_end - col_begin; }
};

struct TileSchedule {
    GemmOp op;
    ArrayConfig config;
    int total_units = 0;       // PE-row units covering the whole weight matrix
    int rows_per_pe = 1;       // coefficient rows resident per PE (preload cost)
    long long stream_rows = 0; // activation rows streamed per tile
    std::vector<Tile> tiles;
};

// Decompose a GEMM into weight tiles for the target array. Column tiles are
// the outer loop, weight-row tiles inner; activations are re-streamed for
// every tile.
inline TileSchedule tile_gemm(const GemmOp& op, const ArrayConfig& config) {
    op.validate();
    config.validate();
    TileSchedule s;
    s.op = op;
    s.config = config;
    s.stream_rows = op.rows;

    if (config.pe == PeKind::VectorNM && op.kind == GemmKind::Kan) {
        const auto& g = *op.grid;
        if (config.m != g.num_basis() || config.n != g.P + 1) {
            throw std::invalid_argument(
                "tile_gemm: VectorNM array needs M = G+P and N = P+1 for a KAN op (have " +
                config.pe_name() + ", need " + std::to_string(g.P + 1) + ":" +
                std::to_string(g.num_basis()) + ")");
        }
        s.total_units = op.k_features;
        s.rows_per_pe = config.m;
    } else if (config.pe == PeKind::VectorNM) {
        s.total_units = static_cast<int>(ceil_div(op.k_features, config.n));
        s.rows_per_pe = config.n;
    } else {
        s.total_units = static_cast<int>(op.weight_rows());
        s.rows_per_pe = 1;
    }

    for (int c0 = 0; c0 < op.n_outputs; c0 += config.cols) {
        int c1 = std::min(op.n_outputs, c0 + config.cols);
        for (int u0 = 0; u0 < s.total_units; u0 += config.rows) {
            int u1 = std::min(s.total_units, u0 + config.rows);
            s.tiles.push_back(Tile{u0, u1, c0, c1});
        }
    }
    return s;
}

// Closed-form mirror of the simulator's timing: every tile costs its preload
// plus T + R + C - 1 compute cycles.
inline long long predict_cycles(const TileSchedule& s, const ArrayConfig& config, long long t_rows) {
    long long per_tile = config.preload_cycles(s.rows_per_pe) + t_rows + config.rows + config.cols - 1;
    return per_tile * static_cast<long long>(s.tiles.size());
}

inline void dump_schedule(const TileSchedule& s, std::ostream& os) {
    os << "schedule: " << (s.op.kind == GemmKind::Kan ? "kan" : "dense") << " K=" << s.op.k_features
       << " N=" << s.op.n_outputs << " rows=" << s.op.rows << " pe=" << s.config.pe_name()
       << " array=" << s.config.rows << "x" << s.config.cols << " tiles=" << s.tiles.size() << "\n";
    for (size_t i = 0; i < s.tiles.size(); ++i) {
        const Tile& t = s.tiles[i];
        os << "  tile " << i << ": units [" << t.unit_begin << ", " << t.unit_end << ") cols ["
           << t.col_begin << ", " << t.col_end << ") mapped " << t.mapped_rows() << "x"
           << t.mapped_cols() << "\n";
    }
}

}  // namespace kansim
