#include <catch2/catch_amalgamated.hpp>

#include "kansim/kan_gemm.hpp"
#include "kansim/workloads.hpp"

using namespace kansim;

namespace {

KanLayerParams make_params(int k, int n, int g, int p, bool bias, std::uint64_t seed) {
    KanLayerParams params;
    params.grid = UniformGrid(-1.0 - p * (2.0 / g), 2.0 / g, g, p);
    params.quant = calibrate_for_grid(params.grid);
    params.lut = build_lut(p, params.quant);
    params.in_features = k;
    params.out_features = n;
    params.coeffs = Mat<std::int8_t>(static_cast<long long>(params.grid.num_basis()) * k, n);
    Rng rng(seed);
    for (auto& v : params.coeffs.data) v = rng.next_int8();
    if (bias) {
        params.bias_weights = Mat<std::int8_t>(k, n);
        for (auto& v : params.bias_weights.data) v = rng.next_int8();
    }
    params.zero_input_code = quantize_input(params.grid, params.quant, 0.0);
    return params;
}

Mat<std::uint8_t> random_codes(long long rows, long long cols, std::uint64_t seed) {
    Mat<std::uint8_t> m(rows, cols);
    Rng rng(seed);
    for (auto& v : m.data) v = rng.next_uint8();
    return m;
}

}  // namespace

TEST_CASE("activation matrix shape and band structure") {
    KanLayerParams p = make_params(2, 1, 3, 3, false, 5);
    Mat<std::uint8_t> inputs = random_codes(1, 2, 6);
    Mat<std::uint8_t> b = build_activation_matrix(inputs, p);
    CHECK(b.rows == 1);
    CHECK(b.cols == 12);

    const int nb = p.grid.num_basis();
    Mat<std::uint8_t> many = build_activation_matrix(random_codes(64, 2, 7), p);
    for (long long r = 0; r < many.rows; ++r) {
        for (int f = 0; f < 2; ++f) {
            int nonzeros = 0;
            long long sum = 0;
            for (int i = 0; i < nb; ++i) {
                std::uint8_t v = many(r, static_cast<long long>(f) * nb + i);
                if (v != 0) ++nonzeros;
                sum += v;
            }
            // local support bounds the non-zero fraction of each band
            CHECK(nonzeros <= p.grid.P + 1);
            // dequantized band sums to ~1
            CHECK(std::abs(sum / p.quant.lut_scale - 1.0) <=
                  (p.grid.P + 1) / p.quant.lut_scale);
        }
    }
}

TEST_CASE("float forward: zero coefficients and partition of unity") {
    KanLayerParams p = make_params(3, 2, 4, 2, false, 8);
    for (auto& v : p.coeffs.data) v = 0;
    Mat<double> x(5, 3);
    Rng rng(9);
    for (auto& v : x.data) v = rng.uniform_real(-1.0, 1.0);
    Mat<double> out = kan_layer_forward_float(x, p);
    for (double v : out.data) CHECK(v == 0.0);

    // constant coefficients per feature: partition of unity makes each
    // feature contribute exactly that constant
    for (auto& v : p.coeffs.data) v = 37;
    out = kan_layer_forward_float(x, p);
    for (double v : out.data) {
        CHECK(v == Catch::Approx(3 * 37 * p.coeff_scale).epsilon(1e-9));
    }
}

TEST_CASE("float forward: toy [2,1] layer against a hand-built sum") {
    KanLayerParams p = make_params(2, 1, 3, 3, false, 11);
    Mat<double> x(1, 2);
    x(0, 0) = 0.31;
    x(0, 1) = -0.62;
    Mat<double> out = kan_layer_forward_float(x, p);
    double expect = 0.0;
    const int nb = p.grid.num_basis();
    for (int f = 0; f < 2; ++f) {
        double u = (x(0, f) - p.grid.t0) / p.grid.delta;
        for (int i = 0; i < nb; ++i) {
            expect += cardinal_bspline(3, u - i) * p.coeffs(f * nb + i, 0) * p.coeff_scale;
        }
    }
    CHECK(out(0, 0) == Catch::Approx(expect).margin(1e-9));
}

TEST_CASE("quant forward: single input, single output") {
    KanLayerParams p = make_params(1, 1, 3, 3, false, 13);
    Mat<std::uint8_t> in(1, 1);
    in(0, 0) = 137;
    Mat<std::int32_t> out = kan_layer_forward_quant(in, p);
    SparseActivationBlock b = evaluate(137, p.grid, p.lut, p.quant);
    std::int32_t expect = 0;
    for (int j = 0; j <= 3; ++j) {
        expect += static_cast<std::int32_t>(p.coeffs(b.select + j, 0)) * b.values[j];
    }
    CHECK(out(0, 0) == expect);
}

TEST_CASE("quant forward agrees with the float forward") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        Rng rng(seed);
        int k = static_cast<int>(rng.uniform_int(1, 12));
        int n = static_cast<int>(rng.uniform_int(1, 6));
        int g = static_cast<int>(rng.uniform_int(2, 8));
        int pdeg = static_cast<int>(rng.uniform_int(1, 3));
        bool bias = rng.uniform_int(0, 1) == 1;
        KanLayerParams p = make_params(k, n, g, pdeg, bias, seed * 77);
        Mat<std::uint8_t> codes = random_codes(16, k, seed * 101);
        Mat<double> x(16, k);
        for (size_t i = 0; i < codes.data.size(); ++i) {
            x.data[i] = dequantize_input(p.grid, p.quant, codes.data[i]);
        }
        Mat<std::int32_t> q_out = kan_layer_forward_quant(codes, p);
        Mat<double> f_out = kan_layer_forward_float(x, p);

        // spline term: per-lane LUT rounding; bias term: zero-code rounding
        double tol = k * (pdeg + 1) * 128.0 * p.coeff_scale * (1.5 / p.quant.lut_scale);
        if (bias) tol += k * 128.0 * p.bias_scale * p.quant.x_scale;
        for (long long r = 0; r < 16; ++r) {
            for (int c = 0; c < n; ++c) {
                double deq = q_out(r, c) * p.coeff_scale / p.quant.lut_scale;
                if (bias) {
                    // bias accumulators carry a different scale; undo it
                    long long bias_acc = 0;
                    for (int f = 0; f < k; ++f) {
                        bias_acc += static_cast<long long>(p.bias_weights(f, c)) *
                                    relu_code(p, codes(r, f));
                    }
                    deq += bias_acc * (p.bias_scale * p.quant.x_scale -
                                       p.coeff_scale / p.quant.lut_scale);
                }
                CHECK(deq == Catch::Approx(f_out(r, c)).margin(tol));
            }
        }
    }
}

TEST_CASE("quant forward: ReLU branch zeroes negative inputs") {
    KanLayerParams p = make_params(1, 1, 4, 2, true, 17);
    for (auto& v : p.coeffs.data) v = 0;  // isolate the bias branch
    p.bias_weights(0, 0) = 3;
    Mat<std::uint8_t> in(2, 1);
    in(0, 0) = 10;   // well below the zero code -> negative input
    in(1, 0) = 200;  // above the zero code
    REQUIRE(10 < p.zero_input_code);
    REQUIRE(200 > p.zero_input_code);
    Mat<std::int32_t> out = kan_layer_forward_quant(in, p);
    CHECK(out(0, 0) == 0);
    CHECK(out(1, 0) == 3 * (200 - p.zero_input_code));
}

TEST_CASE("GEMM equivalence: float layer equals activation matrix times coefficients") {
    KanLayerParams p = make_params(5, 4, 4, 3, false, 23);
    Mat<std::uint8_t> codes = random_codes(8, 5, 29);
    Mat<double> x(8, 5);
    for (size_t i = 0; i < codes.data.size(); ++i) {
        x.data[i] = dequantize_input(p.grid, p.quant, codes.data[i]);
    }
    Mat<double> direct = kan_layer_forward_float(x, p);

    const int nb = p.grid.num_basis();
    Mat<double> bmat(8, static_cast<long long>(nb) * 5, 0.0);
    for (long long r = 0; r < 8; ++r) {
        for (int f = 0; f < 5; ++f) {
            std::vector<double> row = basis_row(p.grid, clamp_to_domain(p.grid, x(r, f)));
            for (int i = 0; i < nb; ++i) bmat(r, static_cast<long long>(f) * nb + i) = row[i];
        }
    }
    for (long long r = 0; r < 8; ++r) {
        for (int c = 0; c < 4; ++c) {
            double acc = 0.0;
            for (long long i = 0; i < bmat.cols; ++i) {
                acc += bmat(r, i) * p.coeffs(i, c) * p.coeff_scale;
            }
            CHECK(acc == Catch::Approx(direct(r, c)).margin(1e-9));
        }
    }
}

TEST_CASE("quant forward is deterministic") {
    KanLayerParams p = make_params(4, 3, 5, 3, true, 31);
    Mat<std::uint8_t> codes = random_codes(6, 4, 37);
    CHECK(kan_layer_forward_quant(codes, p) == kan_layer_forward_quant(codes, p));
}

TEST_CASE("conv lowering arithmetic") {
    UniformGrid grid(-2.0, 0.5, 3, 3);
    ConvShape c;
    c.in_channels = 64;
    c.out_channels = 64;
    c.kernel_h = c.kernel_w = 3;
    c.height = c.width = 8;
    c.stride = 1;
    c.pad = 1;
    GemmOp op = conv_to_gemm(c, grid, 1);
    CHECK(op.k_features == 576);
    CHECK(op.rows == 64);
    CHECK(op.n_outputs == 64);

    c.stride = 2;
    CHECK(c.out_height() == 4);  // stride 2 halves each spatial dimension
    GemmOp op2 = conv_to_gemm(c, grid, 1);
    CHECK(op2.rows == 16);

    ConvShape bad;
    bad.kernel_h = 9;
    bad.height = 4;
    bad.pad = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("im2col tap indexing against direct index arithmetic") {
    ConvShape c;
    c.in_channels = 2;
    c.out_channels = 1;
    c.kernel_h = c.kernel_w = 3;
    c.height = c.width = 5;
    c.stride = 2;
    c.pad = 1;
    Mat<std::uint8_t> img = random_codes(2, 2 * 5 * 5, 41);
    std::uint8_t pad_code = 99;
    Mat<std::uint8_t> cols = im2col_codes(img, c, pad_code);
    REQUIRE(cols.rows == 2 * 3 * 3);
    REQUIRE(cols.cols == 18);
    for (long long b = 0; b < 2; ++b) {
        for (int oy = 0; oy < 3; ++oy) {
            for (int ox = 0; ox < 3; ++ox) {
                for (int ch = 0; ch < 2; ++ch) {
                    for (int ky = 0; ky < 3; ++ky) {
                        for (int kx = 0; kx < 3; ++kx) {
                            int iy = oy * 2 + ky - 1;
                            int ix = ox * 2 + kx - 1;
                            std::uint8_t expect =
                                (iy >= 0 && iy < 5 && ix >= 0 && ix < 5)
                                    ? img(b, (ch * 5 + iy) * 5 + ix)
                                    : pad_code;
                            long long r = (b * 3 + oy) * 3 + ox;
                            long long cc = (ch * 3 + ky) * 3 + kx;
                            REQUIRE(cols(r, cc) == expect);
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("requantization: rounding, zero point and saturation") {
    Requant r{3, 4, 128};
    CHECK(r.apply(0) == 128);
    CHECK(r.apply(16) == 131);    // 48 >> 4 = 3
    CHECK(r.apply(8) == 130);     // 24+8 >> 4 = 2
    CHECK(r.apply(-16) == 125);
    CHECK(r.apply(1 << 20) == 255);   // saturates high
    CHECK(r.apply(-(1 << 20)) == 0);  // saturates low
}

TEST_CASE("accumulator overflow is reported, never wrapped") {
    long long acc = INT32_MAX;
    CHECK_THROWS_AS(accumulate_checked(acc, 1), std::overflow_error);
}
