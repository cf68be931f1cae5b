#pragma once

#include <cstdint>
#include <optional>

#include "kansim/bspline_unit.hpp"
#include "kansim/common.hpp"
#include "kansim/tiling.hpp"

namespace kansim {

// int32 -> 8-bit code requantization between layers, computed offline and
// stored with the layer. Integer-only so the chain is bit-exact everywhere.
struct Requant {
    std::int32_t mult = 1;
    int shift = 0;
    int zero = 128;

    std::uint8_t apply(std::int32_t acc) const {
        long long v = static_cast<long long>(acc) * mult;
        if (shift > 0) v = (v + (1LL << (shift - 1))) >> shift;
        v += zero;
        return static_cast<std::uint8_t>(std::clamp(v, 0LL, 255LL));
    }
};

// One KAN layer lowered to GEMM form. Coefficient rows are band-major: the
// (G+P) rows of input feature f occupy [f*(G+P), (f+1)*(G+P)), so the M
// coefficients a VectorNM PE holds for one (feature, output) pair are
// contiguous.
struct KanLayerParams {
    int in_features = 1;   // K
    int out_features = 1;  // N
    UniformGrid grid;
    QuantParams quant;
    BSplineLut lut;
    Mat<std::int8_t> coeffs;        // ((G+P)*K, N)
    Mat<std::int8_t> bias_weights;  // (K, N); empty when the layer has no bias branch
    double coeff_scale = 1.0 / 64.0;
    double bias_scale = 1.0 / 64.0;
    int zero_input_code = 0;  // code of x = 0, used by the ReLU branch and conv padding
    Requant requant;

    bool has_bias() const { return !bias_weights.empty(); }

    void validate() const {
        require(in_features >= 1 && out_features >= 1, "KanLayerParams: dims must be positive");
        require(coeffs.rows == static_cast<long long>(grid.num_basis()) * in_features &&
                    coeffs.cols == out_features,
                "KanLayerParams: coefficient matrix must be ((G+P)*K, N) band-major");
        if (has_bias()) {
            require(bias_weights.rows == in_features && bias_weights.cols == out_features,
                    "KanLayerParams: bias weights must be (K, N)");
        }
    }
};

// ReLU branch in code space: codes at or below the zero code contribute 0.
inline int relu_code(const KanLayerParams& p, int x_q) {
    return std::max(0, x_q - p.zero_input_code);
}

inline void accumulate_checked(long long& acc, long long term) {
    acc += term;
    if (acc > INT32_MAX || acc < INT32_MIN) {
        throw std::overflow_error("kan_gemm: int32 accumulator overflow");
    }
}

// Scatter each input's P+1 block values into its feature band; everything
// else in the (BS, (G+P)*K) matrix stays zero.
inline Mat<std::uint8_t> build_activation_matrix(const Mat<std::uint8_t>& inputs,
                                                 const KanLayerParams& p) {
    p.validate();
    require(inputs.cols == p.in_features, "build_activation_matrix: input width != K");
    const int nb = p.grid.num_basis();
    Mat<std::uint8_t> b(inputs.rows, static_cast<long long>(nb) * p.in_features);
    for (long long r = 0; r < inputs.rows; ++r) {
        for (int f = 0; f < p.in_features; ++f) {
            SparseActivationBlock blk = evaluate(inputs(r, f), p.grid, p.lut, p.quant);
            for (int j = 0; j < blk.lanes; ++j) {
                b(r, static_cast<long long>(f) * nb + blk.select + j) = blk.values[static_cast<size_t>(j)];
            }
        }
    }
    return b;
}

// Floating-point reference of the layer: spline term via the recursive basis,
// plus the optional ReLU bias branch.
inline Mat<double> kan_layer_forward_float(const Mat<double>& inputs, const KanLayerParams& p) {
    p.validate();
    require(inputs.cols == p.in_features, "kan_layer_forward_float: input width != K");
    const int nb = p.grid.num_basis();
    Mat<double> out(inputs.rows, p.out_features, 0.0);
    for (long long r = 0; r < inputs.rows; ++r) {
        for (int f = 0; f < p.in_features; ++f) {
            double x = inputs(r, f);
            std::vector<double> row = basis_row(p.grid, clamp_to_domain(p.grid, x));
            for (int n = 0; n < p.out_features; ++n) {
                double acc = 0.0;
                for (int i = 0; i < nb; ++i) {
                    acc += row[static_cast<size_t>(i)] *
                           static_cast<double>(p.coeffs(static_cast<long long>(f) * nb + i, n));
                }
                out(r, n) += acc * p.coeff_scale;
                if (p.has_bias()) {
                    out(r, n) += p.bias_scale * static_cast<double>(p.bias_weights(f, n)) *
                                 std::max(0.0, x);
                }
            }
        }
    }
    return out;
}

// Integer reference the simulator must reproduce bit-exactly: block bytes
// times int8 coefficients, int32 accumulation, overflow reported.
inline Mat<std::int32_t> kan_layer_forward_quant(const Mat<std::uint8_t>& inputs,
                                                 const KanLayerParams& p) {
    p.validate();
    require(inputs.cols == p.in_features, "kan_layer_forward_quant: input width != K");
    const int nb = p.grid.num_basis();
    Mat<std::int32_t> out(inputs.rows, p.out_features, 0);
    std::vector<SparseActivationBlock> blocks(static_cast<size_t>(p.in_features));
    for (long long r = 0; r < inputs.rows; ++r) {
        for (int f = 0; f < p.in_features; ++f) {
            blocks[static_cast<size_t>(f)] = evaluate(inputs(r, f), p.grid, p.lut, p.quant);
        }
        for (int n = 0; n < p.out_features; ++n) {
            long long acc = 0;
            for (int f = 0; f < p.in_features; ++f) {
                const SparseActivationBlock& blk = blocks[static_cast<size_t>(f)];
                long long base = static_cast<long long>(f) * nb + blk.select;
                for (int j = 0; j < blk.lanes; ++j) {
                    accumulate_checked(acc, static_cast<long long>(p.coeffs(base + j, n)) *
                                                blk.values[static_cast<size_t>(j)]);
                }
                if (p.has_bias()) {
                    accumulate_checked(acc, static_cast<long long>(p.bias_weights(f, n)) *
                                                relu_code(p, inputs(r, f)));
                }
            }
            out(r, n) = static_cast<std::int32_t>(acc);
        }
    }
    return out;
}

// --- convolution lowering ----------------------------------------------------

struct ConvShape {
    int in_channels = 1;
    int out_channels = 1;
    int kernel_h = 3;
    int kernel_w = 3;
    int height = 32;
    int width = 32;
    int stride = 1;
    int pad = 1;

    void validate() const {
        require(in_channels >= 1 && out_channels >= 1, "ConvShape: channels must be positive");
        require(kernel_h >= 1 && kernel_w >= 1 && stride >= 1 && pad >= 0,
                "ConvShape: bad kernel geometry");
        require(height + 2 * pad >= kernel_h && width + 2 * pad >= kernel_w,
                "ConvShape: kernel larger than padded input");
    }
    int out_height() const { return (height + 2 * pad - kernel_h) / stride + 1; }
    int out_width() const { return (width + 2 * pad - kernel_w) / stride + 1; }

    bool operator==(const ConvShape&) const = default;
};

// im2col lowering: K = C_in*kh*kw, one GEMM row per output pixel.
inline GemmOp conv_to_gemm(const ConvShape& c, const UniformGrid& grid, long long batch) {
    c.validate();
    require(batch >= 1, "conv_to_gemm: batch must be positive");
    GemmOp op;
    op.kind = GemmKind::Kan;
    op.grid = grid;
    op.k_features = c.in_channels * c.kernel_h * c.kernel_w;
    op.rows = batch * c.out_height() * c.out_width();
    op.n_outputs = c.out_channels;
    return op;
}

// im2col over quantized codes. Input layout (batch, C*H*W) row-major per
// image; out-of-bounds taps read the code of x = 0.
inline Mat<std::uint8_t> im2col_codes(const Mat<std::uint8_t>& images, const ConvShape& c,
                                      std::uint8_t pad_code) {
    c.validate();
    require(images.cols == static_cast<long long>(c.in_channels) * c.height * c.width,
            "im2col_codes: image width != C*H*W");
    const int ho = c.out_height(), wo = c.out_width();
    Mat<std::uint8_t> cols(images.rows * ho * wo,
                           static_cast<long long>(c.in_channels) * c.kernel_h * c.kernel_w);
    long long out_r = 0;
    for (long long b = 0; b < images.rows; ++b) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox, ++out_r) {
                long long out_c = 0;
                for (int ch = 0; ch < c.in_channels; ++ch) {
                    for (int ky = 0; ky < c.kernel_h; ++ky) {
                        for (int kx = 0; kx < c.kernel_w; ++kx, ++out_c) {
                            int iy = oy * c.stride + ky - c.pad;
                            int ix = ox * c.stride + kx - c.pad;
                            std::uint8_t v = pad_code;
                            if (iy >= 0 && iy < c.height && ix >= 0 && ix < c.width) {
                                v = images(b, (static_cast<long long>(ch) * c.height + iy) * c.width + ix);
                            }
                            cols(out_r, out_c) = v;
                        }
                    }
                }
            }
        }
    }
    return cols;
}

}  // namespace kansim
