#pragma once

#include <cstdint>

#include "kansim/workloads.hpp"

namespace kansim {

struct MacCounter {
    long long issued = 0;
    long long useful = 0;
};

// One scalar MAC slot. A slot is useful when the PE is validly mapped and the
// streamed operand is structurally part of the computation; fill bubbles and
// structural zeros are issued but not useful.
inline std::int32_t scalar_pe_step(std::int32_t psum, int activation, std::int8_t weight,
                                   bool valid_pe, bool structural, MacCounter& c) {
    c.issued += 1;
    if (!valid_pe) return psum;
    if (structural) c.useful += 1;
    long long acc = psum;
    accumulate_checked(acc, static_cast<long long>(activation) * weight);
    return static_cast<std::int32_t>(acc);
}

inline std::int32_t scalar_pe_step(std::int32_t psum, int activation, std::int8_t weight,
                                   MacCounter& c) {
    return scalar_pe_step(psum, activation, weight, true, activation != 0, c);
}

// One N:M vector MAC: the mux selects N contiguous coefficients out of the M
// resident ones, starting at block.select. Issues one slot per lane;
// valid_lanes of them count useful.
inline std::int32_t nm_pe_step(std::int32_t psum, const SparseActivationBlock& block,
                               const std::int8_t* weights, int m_slots, int valid_lanes,
                               MacCounter& c) {
    require(block.select >= 0 && block.select + block.lanes <= m_slots,
            "nm_pe_step: select outside the resident coefficient window");
    c.issued += block.lanes;
    c.useful += valid_lanes;
    long long acc = psum;
    for (int j = 0; j < block.lanes; ++j) {
        accumulate_checked(acc, static_cast<long long>(weights[block.select + j]) *
                                    block.values[static_cast<size_t>(j)]);
    }
    return static_cast<std::int32_t>(acc);
}

inline std::int32_t nm_pe_step(std::int32_t psum, const SparseActivationBlock& block,
                               const std::int8_t* weights, int m_slots, MacCounter& c) {
    return nm_pe_step(psum, block, weights, m_slots, block.lanes, c);
}

// --- weight preload -----------------------------------------------------------

// Array state for one resident tile. lane_valid[i] == 0 marks an unmapped
// (invalid) PE row; its slots are issued and never useful.
struct LoadedTile {
    ArrayConfig config;
    GemmKind kind = GemmKind::Dense;
    Tile tile;
    int rows_per_pe = 1;
    std::vector<std::int8_t> weights;    // rows * cols * rows_per_pe
    std::vector<std::int8_t> lane_valid; // rows

    std::int8_t w(int i, int j, int s) const {
        return weights[(static_cast<size_t>(i) * config.cols + j) * rows_per_pe + s];
    }
    std::int8_t* w_slots(int i, int j) {
        return &weights[(static_cast<size_t>(i) * config.cols + j) * rows_per_pe];
    }
    const std::int8_t* w_slots(int i, int j) const {
        return &weights[(static_cast<size_t>(i) * config.cols + j) * rows_per_pe];
    }
    long long preload_cycles() const { return config.preload_cycles(rows_per_pe); }
};

// Load one tile of the op's weight matrix into the array. weight_matrix is
// the op's full coefficient matrix (weight_rows x n_outputs).
inline LoadedTile preload_weights(const ArrayConfig& config, const TileSchedule& s,
                                  const Tile& tile, const Mat<std::int8_t>& weight_matrix) {
    config.validate();
    require(tile.mapped_rows() <= config.rows && tile.mapped_cols() <= config.cols,
            "preload_weights: tile does not fit the array");
    require(weight_matrix.rows == s.op.weight_rows() && weight_matrix.cols == s.op.n_outputs,
            "preload_weights: weight matrix shape mismatch");
    LoadedTile lt;
    lt.config = config;
    lt.kind = s.op.kind;
    lt.tile = tile;
    lt.rows_per_pe = s.rows_per_pe;
    lt.weights.assign(static_cast<size_t>(config.rows) * config.cols * s.rows_per_pe, 0);
    lt.lane_valid.assign(static_cast<size_t>(config.rows), 0);

    const bool nm = config.pe == PeKind::VectorNM;
    for (int i = 0; i < tile.mapped_rows(); ++i) {
        int unit = tile.unit_begin + i;
        long long row0;  // first weight-matrix row owned by this PE row
        int lanes_here;
        if (!nm) {
            row0 = unit;
            lanes_here = 1;
        } else if (s.op.kind == GemmKind::Kan) {
            row0 = static_cast<long long>(unit) * s.rows_per_pe;
            lanes_here = config.n;
        } else {
            row0 = static_cast<long long>(unit) * s.rows_per_pe;
            lanes_here = static_cast<int>(
                std::min<long long>(s.rows_per_pe, weight_matrix.rows - row0));
        }
        lt.lane_valid[static_cast<size_t>(i)] = static_cast<std::int8_t>(lanes_here);
        int resident = nm ? static_cast<int>(std::min<long long>(s.rows_per_pe,
                                                                 weight_matrix.rows - row0))
                          : 1;
        for (int j = 0; j < tile.mapped_cols(); ++j) {
            for (int sslot = 0; sslot < resident; ++sslot) {
                lt.w_slots(i, j)[sslot] = weight_matrix(row0 + sslot, tile.col_begin + j);
            }
        }
    }
    return lt;
}

// --- tile execution -----------------------------------------------------------

struct ScalarLane {
    std::uint8_t value = 0;
    bool structural = false;
};

struct RunTileResult {
    Mat<std::int32_t> out;  // stream_rows x mapped_cols
    TileStats stats;
};

namespace detail {
inline TileStats tile_timing(const LoadedTile& lt, long long t_rows) {
    TileStats ts;
    ts.preload_cycles = lt.preload_cycles();
    ts.compute_cycles = t_rows + lt.config.rows + lt.config.cols - 1;
    ts.issued_mac_slots =
        static_cast<long long>(lt.config.rows) * lt.config.cols * lt.config.lanes() * t_rows;
    return ts;
}
}  // namespace detail

// Weight-stationary tile pass, scalar PEs: activations enter row-skewed and
// propagate right, partial sums flow down. One tile computes for
// T + R + C - 1 cycles; outputs are exact int32 accumulations.
inline RunTileResult run_tile(const LoadedTile& lt, const Mat<ScalarLane>& stream) {
    require(lt.config.pe == PeKind::Scalar, "run_tile: scalar stream on a VectorNM array");
    require(stream.cols == lt.config.rows, "run_tile: stream width must match array rows");
    RunTileResult r;
    r.stats = detail::tile_timing(lt, stream.rows);
    r.out = Mat<std::int32_t>(stream.rows, lt.tile.mapped_cols(), 0);
    MacCounter c;
    for (long long t = 0; t < stream.rows; ++t) {
        for (int j = 0; j < lt.tile.mapped_cols(); ++j) {
            std::int32_t psum = 0;
            for (int i = 0; i < lt.tile.mapped_rows(); ++i) {
                const ScalarLane& lane = stream(t, i);
                psum = scalar_pe_step(psum, lane.value, lt.w(i, j, 0), true, lane.structural, c);
            }
            r.out(t, j) = psum;
        }
    }
    r.stats.useful_macs = c.useful;
    return r;
}

// VectorNM variant: one block per (row, PE row) streams in, indices k ride
// along with the activations.
inline RunTileResult run_tile(const LoadedTile& lt, const Mat<SparseActivationBlock>& stream) {
    require(lt.config.pe == PeKind::VectorNM, "run_tile: block stream on a scalar array");
    require(stream.cols == lt.config.rows, "run_tile: stream width must match array rows");
    RunTileResult r;
    r.stats = detail::tile_timing(lt, stream.rows);
    r.out = Mat<std::int32_t>(stream.rows, lt.tile.mapped_cols(), 0);
    MacCounter c;
    for (long long t = 0; t < stream.rows; ++t) {
        for (int j = 0; j < lt.tile.mapped_cols(); ++j) {
            std::int32_t psum = 0;
            for (int i = 0; i < lt.tile.mapped_rows(); ++i) {
                psum = nm_pe_step(psum, stream(t, i), lt.w_slots(i, j), lt.rows_per_pe,
                                  lt.lane_valid[static_cast<size_t>(i)], c);
            }
            r.out(t, j) = psum;
        }
    }
    r.stats.useful_macs = c.useful;
    return r;
}

// --- analytic per-op stats ------------------------------------------------------

namespace detail {
// Structurally useful MAC slots per streamed row for one tile. For a scalar
// array running a KAN op the P+1 live positions of a band that straddles two
// row tiles sit on a data-dependent side; the breakdown attributes them
// cumulatively at density (P+1)/(G+P), which telescopes to the exact op total
// and never exceeds the tile's mapped rows.
inline long long tile_useful_per_row(const GemmOp& op, const ArrayConfig& config, const Tile& t) {
    if (config.pe == PeKind::Scalar) {
        if (op.kind == GemmKind::Dense) {
            return static_cast<long long>(t.mapped_rows()) * t.mapped_cols();
        }
        const int m = op.grid->num_basis();
        const int live = op.grid->P + 1;
        long long rows = static_cast<long long>(t.unit_end) * live / m -
                         static_cast<long long>(t.unit_begin) * live / m;
        return rows * t.mapped_cols();
    }
    if (op.kind == GemmKind::Kan) {
        return static_cast<long long>(t.mapped_rows()) * (op.grid->P + 1) * t.mapped_cols();
    }
    long long rows0 = static_cast<long long>(t.unit_begin) * config.n;
    long long rows1 = std::min<long long>(op.k_features, static_cast<long long>(t.unit_end) * config.n);
    return (rows1 - rows0) * t.mapped_cols();
}
}  // namespace detail

// Past this many tiles per op the breakdown collapses to one aggregate entry
// per op; totals are identical either way.
constexpr long long kTileRecordCap = 4096;

// Closed-form stats for one op; shares its timing definition with run_tile,
// so predict_cycles and the streamed execution agree exactly.
inline SimStats op_stats(const GemmOp& op, const ArrayConfig& config, int op_index = 0) {
    op.validate();
    config.validate();
    SimStats st;
    long long row_tiles, col_tiles, rows_per_pe;
    if (config.pe == PeKind::VectorNM && op.kind == GemmKind::Kan) {
        const auto& g = *op.grid;
        if (config.m != g.num_basis() || config.n != g.P + 1) {
            throw std::invalid_argument("op_stats: VectorNM array needs M = G+P and N = P+1 for a KAN op");
        }
        row_tiles = ceil_div(op.k_features, config.rows);
        rows_per_pe = config.m;
    } else if (config.pe == PeKind::VectorNM) {
        row_tiles = ceil_div(ceil_div(op.k_features, config.n), config.rows);
        rows_per_pe = config.n;
    } else {
        row_tiles = ceil_div(op.weight_rows(), config.rows);
        rows_per_pe = 1;
    }
    col_tiles = ceil_div(op.n_outputs, config.cols);
    long long n_tiles = row_tiles * col_tiles;
    long long preload = config.preload_cycles(static_cast<int>(rows_per_pe));
    long long compute = op.rows + config.rows + config.cols - 1;
    long long issued_per_tile =
        static_cast<long long>(config.rows) * config.cols * config.lanes() * op.rows;

    if (n_tiles > kTileRecordCap) {
        long long density = op.kind == GemmKind::Kan ? op.grid->P + 1 : 1;
        TileStats agg;
        agg.op_index = op_index;
        agg.preload_cycles = preload * n_tiles;
        agg.compute_cycles = compute * n_tiles;
        agg.issued_mac_slots = issued_per_tile * n_tiles;
        agg.useful_macs = op.rows * op.k_features * density * op.n_outputs;
        st.add(agg);
        return st;
    }

    TileSchedule s = tile_gemm(op, config);
    for (const Tile& t : s.tiles) {
        TileStats ts;
        ts.op_index = op_index;
        ts.preload_cycles = preload;
        ts.compute_cycles = compute;
        ts.issued_mac_slots = issued_per_tile;
        ts.useful_macs = detail::tile_useful_per_row(op, config, t) * op.rows;
        st.add(ts);
    }
    return st;
}

// Structural (data-free) stats for a whole workload: timing and utilization
// depend only on shapes, grids and the array, never on tensor values.
inline SimStats simulate_workload(const Workload& w, const ArrayConfig& config) {
    config.validate();
    SimStats st;
    std::vector<GemmOp> ops = lower_to_ops(w);
    for (size_t i = 0; i < ops.size(); ++i) {
        st.merge(op_stats(ops[i], config, static_cast<int>(i)));
    }
    return st;
}

// --- functional execution -------------------------------------------------------

namespace detail {

inline Mat<SparseActivationBlock> make_blocks(const Mat<std::uint8_t>& codes,
                                              const KanLayerParams& p) {
    Mat<SparseActivationBlock> blocks(codes.rows, codes.cols);
    for (long long r = 0; r < codes.rows; ++r) {
        for (long long f = 0; f < codes.cols; ++f) {
            blocks(r, f) = evaluate(codes(r, f), p.grid, p.lut, p.quant);
        }
    }
    return blocks;
}

struct OpRun {
    Mat<std::int32_t> out;
    SimStats stats;
};

// Stream one op through the array tile by tile. For KAN ops `blocks` carries
// the per-(row, feature) activation blocks; for dense ops `acts` carries the
// 8-bit operands (raw codes, or ReLU codes for the bias branch).
inline OpRun run_op_functional(const GemmOp& op, const ArrayConfig& config,
                               const Mat<std::int8_t>& weight_matrix,
                               const Mat<SparseActivationBlock>* blocks,
                               const Mat<std::uint8_t>* acts, int op_index = 0) {
    TileSchedule s = tile_gemm(op, config);
    OpRun run;
    run.out = Mat<std::int32_t>(op.rows, op.n_outputs, 0);
    const bool nm = config.pe == PeKind::VectorNM;
    const int m = op.kind == GemmKind::Kan ? op.grid->num_basis() : 0;

    for (const Tile& tile : s.tiles) {
        LoadedTile lt = preload_weights(config, s, tile, weight_matrix);
        RunTileResult r;
        if (!nm) {
            Mat<ScalarLane> stream(op.rows, config.rows);
            for (long long t = 0; t < op.rows; ++t) {
                for (int i = 0; i < tile.mapped_rows(); ++i) {
                    long long wr = tile.unit_begin + i;
                    ScalarLane lane;
                    if (op.kind == GemmKind::Kan) {
                        long long f = wr / m;
                        int bi = static_cast<int>(wr % m);
                        const SparseActivationBlock& b = (*blocks)(t, f);
                        if (bi >= b.select && bi < b.select + b.lanes) {
                            lane.value = b.values[static_cast<size_t>(bi - b.select)];
                            lane.structural = true;
                        }
                    } else {
                        lane.value = (*acts)(t, wr);
                        lane.structural = true;
                    }
                    stream(t, i) = lane;
                }
            }
            r = run_tile(lt, stream);
        } else {
            Mat<SparseActivationBlock> stream(op.rows, config.rows);
            for (long long t = 0; t < op.rows; ++t) {
                for (int i = 0; i < tile.mapped_rows(); ++i) {
                    int unit = tile.unit_begin + i;
                    if (op.kind == GemmKind::Kan) {
                        stream(t, i) = (*blocks)(t, unit);
                    } else {
                        SparseActivationBlock b;
                        b.lanes = config.n;
                        b.select = 0;
                        int valid = lt.lane_valid[static_cast<size_t>(i)];
                        for (int l = 0; l < valid; ++l) {
                            b.values[static_cast<size_t>(l)] =
                                (*acts)(t, static_cast<long long>(unit) * config.n + l);
                        }
                        stream(t, i) = b;
                    }
                }
                for (int i = tile.mapped_rows(); i < config.rows; ++i) {
                    SparseActivationBlock b;
                    b.lanes = config.n;
                    stream(t, i) = b;
                }
            }
            r = run_tile(lt, stream);
        }
        for (long long t = 0; t < op.rows; ++t) {
            for (int j = 0; j < tile.mapped_cols(); ++j) {
                long long acc = run.out(t, tile.col_begin + j);
                accumulate_checked(acc, r.out(t, j));
                run.out(t, tile.col_begin + j) = static_cast<std::int32_t>(acc);
            }
        }
        r.stats.op_index = op_index;
        run.stats.add(r.stats);
    }
    return run;
}

}  // namespace detail

struct FunctionalResult {
    Mat<std::int32_t> output;  // last layer's accumulators
    SimStats stats;
};

// Cycle-level execution of a realized workload; outputs must match
// reference_forward bit for bit, stats must match simulate_workload.
inline FunctionalResult simulate_workload_functional(const RealizedWorkload& rw,
                                                     const ArrayConfig& config) {
    config.validate();
    FunctionalResult res;
    Mat<std::uint8_t> codes = rw.input;
    int op_index = 0;
    for (size_t li = 0; li < rw.layers.size(); ++li) {
        const RealizedLayer& rl = rw.layers[li];
        Mat<std::int32_t> acc;
        if (rl.spec.kind == LayerSpec::Kind::Dense) {
            GemmOp op;
            op.kind = GemmKind::Dense;
            op.rows = codes.rows;
            op.k_features = rl.spec.in;
            op.n_outputs = rl.spec.out;
            op.layer_index = static_cast<int>(li);
            detail::OpRun r = detail::run_op_functional(op, config, rl.dense_weights, nullptr,
                                                        &codes, op_index++);
            acc = std::move(r.out);
            res.stats.merge(r.stats);
            if (li + 1 < rw.layers.size()) codes = requantize_matrix(acc, rl.dense_requant);
        } else {
            const KanLayerParams& p = rl.kan;
            Mat<std::uint8_t> gemm_in =
                (rl.spec.kind == LayerSpec::Kind::ConvKan)
                    ? im2col_codes(codes, rl.spec.conv,
                                   static_cast<std::uint8_t>(p.zero_input_code))
                    : codes;
            Mat<SparseActivationBlock> blocks = detail::make_blocks(gemm_in, p);

            GemmOp op;
            op.kind = GemmKind::Kan;
            op.grid = p.grid;
            op.rows = gemm_in.rows;
            op.k_features = p.in_features;
            op.n_outputs = p.out_features;
            op.layer_index = static_cast<int>(li);
            detail::OpRun r =
                detail::run_op_functional(op, config, p.coeffs, &blocks, nullptr, op_index++);
            acc = std::move(r.out);
            res.stats.merge(r.stats);

            if (p.has_bias()) {
                Mat<std::uint8_t> relu(gemm_in.rows, gemm_in.cols);
                for (size_t i = 0; i < gemm_in.data.size(); ++i) {
                    relu.data[i] = static_cast<std::uint8_t>(relu_code(p, gemm_in.data[i]));
                }
                GemmOp bop;
                bop.kind = GemmKind::Dense;
                bop.rows = gemm_in.rows;
                bop.k_features = p.in_features;
                bop.n_outputs = p.out_features;
                bop.layer_index = static_cast<int>(li);
                bop.is_bias_branch = true;
                detail::OpRun br = detail::run_op_functional(bop, config, p.bias_weights, nullptr,
                                                             &relu, op_index++);
                for (size_t i = 0; i < acc.data.size(); ++i) {
                    long long v = acc.data[i];
                    accumulate_checked(v, br.out.data[i]);
                    acc.data[i] = static_cast<std::int32_t>(v);
                }
                res.stats.merge(br.stats);
            }
            if (li + 1 < rw.layers.size()) {
                Mat<std::uint8_t> next = requantize_matrix(acc, p.requant);
                if (rl.spec.kind == LayerSpec::Kind::ConvKan) {
                    next = rows_to_image(next, rw.workload.batch, rl.spec.conv.out_height(),
                                         rl.spec.conv.out_width());
                }
                codes = std::move(next);
            }
        }
        res.output = std::move(acc);
    }
    return res;
}

}  // namespace kansim
