#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kansim/kan_gemm.hpp"

namespace kansim {

constexpr const char* kWorkloadFormat = "kansim-workload-v1";
constexpr long long kDefaultBatch = 256;

struct LayerSpec {
    enum class Kind { Kan, Dense, ConvKan };
    Kind kind = Kind::Kan;
    int in = 1;   // Kan/Dense input features
    int out = 1;  // Kan/Dense output features
    ConvShape conv;
    int G = 3;
    int P = 3;
    bool bias = false;  // extra ReLU branch, scheduled as its own dense GEMM

    bool operator==(const LayerSpec&) const = default;
};

// A benchmark application lowered to a sequence of layers with synthetic
// (seeded) parameters.
struct Workload {
    std::string name;
    std::string application;  // grouping key for per-application reports
    long long batch = kDefaultBatch;
    std::uint64_t seed = 0;
    std::vector<LayerSpec> layers;

    bool operator==(const Workload&) const = default;
};

inline UniformGrid layer_grid(const LayerSpec& l) {
    // Synthetic layers live on the domain [-1, 1].
    double delta = 2.0 / l.G;
    return UniformGrid(-1.0 - l.P * delta, delta, l.G, l.P);
}

// --- lowering to GEMM ops ----------------------------------------------------

inline std::vector<GemmOp> lower_to_ops(const Workload& w) {
    std::vector<GemmOp> ops;
    for (size_t li = 0; li < w.layers.size(); ++li) {
        const LayerSpec& l = w.layers[li];
        GemmOp op;
        op.layer_index = static_cast<int>(li);
        switch (l.kind) {
            case LayerSpec::Kind::Kan:
                op.kind = GemmKind::Kan;
                op.grid = layer_grid(l);
                op.rows = w.batch;
                op.k_features = l.in;
                op.n_outputs = l.out;
                break;
            case LayerSpec::Kind::Dense:
                op.kind = GemmKind::Dense;
                op.rows = w.batch;
                op.k_features = l.in;
                op.n_outputs = l.out;
                break;
            case LayerSpec::Kind::ConvKan:
                op = conv_to_gemm(l.conv, layer_grid(l), w.batch);
                op.layer_index = static_cast<int>(li);
                break;
        }
        ops.push_back(op);
        if (l.bias && l.kind != LayerSpec::Kind::Dense) {
            GemmOp b;
            b.kind = GemmKind::Dense;
            b.rows = op.rows;
            b.k_features = op.k_features;
            b.n_outputs = op.n_outputs;
            b.layer_index = static_cast<int>(li);
            b.is_bias_branch = true;
            ops.push_back(b);
        }
    }
    return ops;
}

// --- built-in application suite ----------------------------------------------

namespace detail {
inline Workload mlp_workload(const std::string& name, const std::string& app,
                             const std::vector<int>& dims, int G, int P, bool bias) {
    Workload w;
    w.name = name;
    w.application = app;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        LayerSpec l;
        l.kind = LayerSpec::Kind::Kan;
        l.in = dims[i];
        l.out = dims[i + 1];
        l.G = G;
        l.P = P;
        l.bias = bias;
        w.layers.push_back(l);
    }
    return w;
}

inline void append_kan_layers(Workload& w, const std::vector<int>& dims, int G, int P, bool bias) {
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        LayerSpec l;
        l.kind = LayerSpec::Kind::Kan;
        l.in = dims[i];
        l.out = dims[i + 1];
        l.G = G;
        l.P = P;
        l.bias = bias;
        w.layers.push_back(l);
    }
}

inline LayerSpec conv_layer(int cin, int cout, int k, int hw, int stride, int G, int P, bool bias) {
    LayerSpec l;
    l.kind = LayerSpec::Kind::ConvKan;
    l.conv.in_channels = cin;
    l.conv.out_channels = cout;
    l.conv.kernel_h = k;
    l.conv.kernel_w = k;
    l.conv.height = hw;
    l.conv.width = hw;
    l.conv.stride = stride;
    l.conv.pad = (k == 3) ? 1 : 0;
    l.G = G;
    l.P = P;
    l.bias = bias;
    return l;
}
}  // namespace detail

// ResNet18 topology at 32x32 input: 3x3 stem, sixteen 3x3 stage convolutions,
// and three 1x1 downsample shortcuts -- 20 spline convolutions total.
inline Workload reskan18_workload(int G = 3, int P = 3, bool bias = true) {
    Workload w;
    w.name = "reskan18";
    w.application = "ResKAN18";
    w.layers.push_back(detail::conv_layer(3, 64, 3, 32, 1, G, P, bias));
    struct StageConv { int cin, cout, hw, stride; };
    const StageConv stages[] = {
        {64, 64, 32, 1},  {64, 64, 32, 1},  {64, 64, 32, 1},  {64, 64, 32, 1},
        {64, 128, 32, 2}, {128, 128, 16, 1}, {128, 128, 16, 1}, {128, 128, 16, 1},
        {128, 256, 16, 2}, {256, 256, 8, 1}, {256, 256, 8, 1}, {256, 256, 8, 1},
        {256, 512, 8, 2},  {512, 512, 4, 1}, {512, 512, 4, 1}, {512, 512, 4, 1},
    };
    for (const auto& s : stages) {
        w.layers.push_back(detail::conv_layer(s.cin, s.cout, 3, s.hw, s.stride, G, P, bias));
    }
    w.layers.push_back(detail::conv_layer(64, 128, 1, 32, 2, G, P, bias));
    w.layers.push_back(detail::conv_layer(128, 256, 1, 16, 2, G, P, bias));
    w.layers.push_back(detail::conv_layer(256, 512, 1, 8, 2, G, P, bias));
    return w;
}

// The collected application suite. Every application carries the MLP-style
// ReLU branch except MNIST-KAN, which is a pure spline stack.
inline std::vector<Workload> builtin_workloads() {
    std::vector<Workload> all;
    all.push_back(detail::mlp_workload("5g-stardust", "5G-STARDUST", {168, 40, 40, 40, 24}, 5, 3, true));
    all.push_back(detail::mlp_workload("catch22-kan", "Catch22-KAN", {22, 10}, 3, 3, true));
    for (int x : {2810, 34395, 6969}) {
        all.push_back(detail::mlp_workload("cf-kan-x" + std::to_string(x), "CF-KAN",
                                           {x, 512, x}, 2, 3, true));
    }
    {
        Workload w;
        w.name = "u-kan";
        w.application = "U-KAN";
        detail::append_kan_layers(w, {512, 1024, 512}, 5, 3, true);
        detail::append_kan_layers(w, {512, 512}, 5, 3, true);
        all.push_back(w);
    }
    for (int g : {2, 3}) {
        for (int p : {1, 2, 3}) {
            Workload w;
            w.name = "gkan-g" + std::to_string(g) + "-p" + std::to_string(p);
            w.application = "GKAN";
            detail::append_kan_layers(w, {200, 16, 7}, g, p, true);
            detail::append_kan_layers(w, {100, 20, 7}, g, p, true);
            all.push_back(w);
        }
    }
    all.push_back(detail::mlp_workload("prefetcher", "Prefetcher", {5, 64, 128}, 4, 3, true));
    all.push_back(detail::mlp_workload("mnist-kan", "MNIST-KAN", {784, 64, 10}, 10, 3, false));
    all.push_back(reskan18_workload());
    return all;
}

inline const Workload* find_builtin(const std::string& name) {
    static const std::vector<Workload> all = builtin_workloads();
    for (const auto& w : all) {
        if (w.name == name) return &w;
    }
    return nullptr;
}

// --- file format ---------------------------------------------------------------

inline nlohmann::ordered_json dump_workload(const Workload& w) {
    nlohmann::ordered_json j;
    j["format"] = kWorkloadFormat;
    j["name"] = w.name;
    j["application"] = w.application;
    j["batch"] = w.batch;
    j["seed"] = w.seed;
    j["layers"] = nlohmann::ordered_json::array();
    for (const LayerSpec& l : w.layers) {
        nlohmann::ordered_json lj;
        switch (l.kind) {
            case LayerSpec::Kind::Kan: lj["kind"] = "kan"; break;
            case LayerSpec::Kind::Dense: lj["kind"] = "dense"; break;
            case LayerSpec::Kind::ConvKan: lj["kind"] = "conv_kan"; break;
        }
        if (l.kind == LayerSpec::Kind::ConvKan) {
            lj["in_channels"] = l.conv.in_channels;
            lj["out_channels"] = l.conv.out_channels;
            lj["kernel"] = l.conv.kernel_h;
            lj["height"] = l.conv.height;
            lj["width"] = l.conv.width;
            lj["stride"] = l.conv.stride;
            lj["pad"] = l.conv.pad;
        } else {
            lj["in"] = l.in;
            lj["out"] = l.out;
        }
        if (l.kind != LayerSpec::Kind::Dense) {
            lj["G"] = l.G;
            lj["P"] = l.P;
            lj["bias"] = l.bias;
        }
        j["layers"].push_back(lj);
    }
    return j;
}

inline Workload parse_workload(const nlohmann::json& j) {
    auto fail = [](const std::string& field, const std::string& why) {
        throw std::invalid_argument("workload file: " + field + ": " + why);
    };
    if (!j.contains("format") || j["format"] != kWorkloadFormat) {
        fail("format", std::string("expected \"") + kWorkloadFormat + "\"");
    }
    Workload w;
    if (!j.contains("name") || !j["name"].is_string()) fail("name", "missing or not a string");
    w.name = j["name"];
    w.application = j.value("application", w.name);
    w.batch = j.value("batch", kDefaultBatch);
    if (w.batch < 1) fail("batch", "must be >= 1");
    w.seed = j.value("seed", 0ULL);
    if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty()) {
        fail("layers", "missing or empty");
    }
    int idx = 0;
    for (const auto& lj : j["layers"]) {
        std::string where = "layers[" + std::to_string(idx++) + "]";
        LayerSpec l;
        std::string kind = lj.value("kind", "");
        if (kind == "kan") l.kind = LayerSpec::Kind::Kan;
        else if (kind == "dense") l.kind = LayerSpec::Kind::Dense;
        else if (kind == "conv_kan") l.kind = LayerSpec::Kind::ConvKan;
        else fail(where + ".kind", "must be one of kan, dense, conv_kan");
        if (l.kind == LayerSpec::Kind::ConvKan) {
            l.conv.in_channels = lj.value("in_channels", 0);
            l.conv.out_channels = lj.value("out_channels", 0);
            l.conv.kernel_h = l.conv.kernel_w = lj.value("kernel", 0);
            l.conv.height = lj.value("height", 0);
            l.conv.width = lj.value("width", 0);
            l.conv.stride = lj.value("stride", 1);
            l.conv.pad = lj.value("pad", 0);
            if (l.conv.in_channels < 1) fail(where + ".in_channels", "must be >= 1");
            if (l.conv.out_channels < 1) fail(where + ".out_channels", "must be >= 1");
            if (l.conv.kernel_h < 1) fail(where + ".kernel", "must be >= 1");
            if (l.conv.height < 1 || l.conv.width < 1) fail(where + ".height/width", "must be >= 1");
        } else {
            l.in = lj.value("in", 0);
            l.out = lj.value("out", 0);
            if (l.in < 1) fail(where + ".in", "must be >= 1");
            if (l.out < 1) fail(where + ".out", "must be >= 1");
        }
        if (l.kind != LayerSpec::Kind::Dense) {
            l.G = lj.value("G", 0);
            l.P = lj.value("P", 0);
            l.bias = lj.value("bias", false);
            if (l.G < 1) fail(where + ".G", "must be >= 1");
            if (l.P < 1 || l.P > 3) {
                fail(where + ".P", "unsupported degree " + std::to_string(l.P) +
                                       " (supported: 1 <= P <= 3)");
            }
        }
        w.layers.push_back(l);
    }
    return w;
}

inline Workload load_workload(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "load_workload: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("workload file: malformed JSON: " + std::string(e.what()));
    }
    return parse_workload(j);
}

// --- synthetic parameter realization -------------------------------------------

struct RealizedLayer {
    LayerSpec spec;
    KanLayerParams kan;               // Kan / ConvKan layers
    Mat<std::int8_t> dense_weights;   // Dense layers
    Requant dense_requant;
};

struct RealizedWorkload {
    Workload workload;
    std::vector<RealizedLayer> layers;
    Mat<std::uint8_t> input;  // (batch, K0) or (batch, C*H*W) codes
};

namespace detail {
inline Requant pick_requant(int k_features, int p, double lut_scale) {
    // Keep requantized codes spread over the 8-bit range for typical random
    // int8 coefficients: scale ~ 127 / (3 sigma) with
    // sigma ~ 74 * lut_scale * sqrt(K / (P+1)).
    double sigma = 74.0 * lut_scale * std::sqrt(static_cast<double>(k_features) / (p + 1));
    double scale = 127.0 / (3.0 * sigma);
    Requant r;
    r.shift = 15;
    r.mult = std::max(1, static_cast<int>(std::lround(scale * 32768.0)));
    r.zero = 128;
    return r;
}

inline void fill_int8(Mat<std::int8_t>& m, Rng& rng) {
    for (auto& v : m.data) v = rng.next_int8();
}
}  // namespace detail

// Deterministic pseudo-random parameters: same seed, same bytes.
inline RealizedWorkload random_parameters(const Workload& w, std::uint64_t seed) {
    RealizedWorkload rw;
    rw.workload = w;
    Rng rng(seed ^ 0xabcdef0123456789ULL);
    for (const LayerSpec& l : w.layers) {
        RealizedLayer rl;
        rl.spec = l;
        if (l.kind == LayerSpec::Kind::Dense) {
            rl.dense_weights = Mat<std::int8_t>(l.in, l.out);
            detail::fill_int8(rl.dense_weights, rng);
            rl.dense_requant = detail::pick_requant(l.in, 1, 255.0);
        } else {
            KanLayerParams p;
            p.grid = layer_grid(l);
            p.quant = calibrate_for_grid(p.grid);
            p.lut = build_lut(l.P, p.quant);
            int k = (l.kind == LayerSpec::Kind::ConvKan)
                        ? l.conv.in_channels * l.conv.kernel_h * l.conv.kernel_w
                        : l.in;
            int n = (l.kind == LayerSpec::Kind::ConvKan) ? l.conv.out_channels : l.out;
            p.in_features = k;
            p.out_features = n;
            p.coeffs = Mat<std::int8_t>(static_cast<long long>(p.grid.num_basis()) * k, n);
            detail::fill_int8(p.coeffs, rng);
            if (l.bias) {
                p.bias_weights = Mat<std::int8_t>(k, n);
                detail::fill_int8(p.bias_weights, rng);
            }
            p.zero_input_code = quantize_input(p.grid, p.quant, 0.0);
            p.requant = detail::pick_requant(k, l.P, p.quant.lut_scale);
            rl.kan = std::move(p);
        }
        rw.layers.push_back(std::move(rl));
    }
    const LayerSpec& first = w.layers.front();
    long long k0 = (first.kind == LayerSpec::Kind::ConvKan)
                       ? static_cast<long long>(first.conv.in_channels) * first.conv.height *
                             first.conv.width
                       : first.in;
    rw.input = Mat<std::uint8_t>(w.batch, k0);
    for (auto& v : rw.input.data) v = rng.next_uint8();
    return rw;
}

// Plain integer GEMM for dense layers (codes x int8 weights).
inline Mat<std::int32_t> dense_forward_quant(const Mat<std::uint8_t>& codes,
                                             const Mat<std::int8_t>& weights) {
    require(codes.cols == weights.rows, "dense_forward_quant: shape mismatch");
    Mat<std::int32_t> out(codes.rows, weights.cols, 0);
    for (long long r = 0; r < codes.rows; ++r) {
        for (long long n = 0; n < weights.cols; ++n) {
            long long acc = 0;
            for (long long f = 0; f < codes.cols; ++f) {
                accumulate_checked(acc, static_cast<long long>(codes(r, f)) * weights(f, n));
            }
            out(r, n) = static_cast<std::int32_t>(acc);
        }
    }
    return out;
}

inline Mat<std::uint8_t> requantize_matrix(const Mat<std::int32_t>& acc, const Requant& rq) {
    Mat<std::uint8_t> out(acc.rows, acc.cols);
    for (size_t i = 0; i < acc.data.size(); ++i) out.data[i] = rq.apply(acc.data[i]);
    return out;
}

// (batch*ho*wo, C_out) GEMM rows back to (batch, C_out*ho*wo) image codes.
inline Mat<std::uint8_t> rows_to_image(const Mat<std::uint8_t>& rows_mat, long long batch, int ho,
                                       int wo) {
    long long spatial = static_cast<long long>(ho) * wo;
    require(rows_mat.rows == batch * spatial, "rows_to_image: row count mismatch");
    Mat<std::uint8_t> img(batch, rows_mat.cols * spatial);
    for (long long b = 0; b < batch; ++b) {
        for (long long s = 0; s < spatial; ++s) {
            for (long long ch = 0; ch < rows_mat.cols; ++ch) {
                img(b, ch * spatial + s) = rows_mat(b * spatial + s, ch);
            }
        }
    }
    return img;
}

// Golden functional model of a whole workload: per layer the spline GEMM plus
// optional ReLU branch, int32 sums, then requantization into the next layer's
// code space. Returns the last layer's accumulators.
inline Mat<std::int32_t> reference_forward(const RealizedWorkload& rw) {
    Mat<std::uint8_t> codes = rw.input;
    Mat<std::int32_t> acc;
    for (size_t li = 0; li < rw.layers.size(); ++li) {
        const RealizedLayer& rl = rw.layers[li];
        if (rl.spec.kind == LayerSpec::Kind::Dense) {
            acc = dense_forward_quant(codes, rl.dense_weights);
            if (li + 1 < rw.layers.size()) codes = requantize_matrix(acc, rl.dense_requant);
        } else {
            Mat<std::uint8_t> gemm_in =
                (rl.spec.kind == LayerSpec::Kind::ConvKan)
                    ? im2col_codes(codes, rl.spec.conv,
                                   static_cast<std::uint8_t>(rl.kan.zero_input_code))
                    : codes;
            acc = kan_layer_forward_quant(gemm_in, rl.kan);
            if (li + 1 < rw.layers.size()) {
                Mat<std::uint8_t> next = requantize_matrix(acc, rl.kan.requant);
                if (rl.spec.kind == LayerSpec::Kind::ConvKan) {
                    next = rows_to_image(next, rw.workload.batch, rl.spec.conv.out_height(),
                                         rl.spec.conv.out_width());
                }
                codes = std::move(next);
            }
        }
    }
    return acc;
}

}  // namespace kansim
