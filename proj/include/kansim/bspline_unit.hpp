#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "kansim/spline.hpp"

namespace kansim {

constexpr double kDefaultLutScale = 191.0;

// Affine quantization of the unit's inputs and of the tabulated basis values.
// Calibration aligns the code space with the extended knot range, so x_zero is
// simultaneously the input zero point and the code of the leftmost knot t0.
// With that alignment the address arithmetic below is exact in integers.
struct QuantParams {
    double x_scale = 1.0;   // input units per code step
    int x_zero = 0;         // code of t0, folded zero point, in [0, 255]
    double lut_scale = kDefaultLutScale;  // stored byte = round(value * lut_scale)
    int addr_bits = 8;

    int depth() const { return 1 << addr_bits; }
    int addr_max() const { return depth() - 1; }

    void validate() const {
        require(x_scale > 0.0, "QuantParams: x_scale must be positive");
        require(lut_scale > 0.0, "QuantParams: lut_scale must be positive");
        require(x_zero >= 0 && x_zero <= 255, "QuantParams: x_zero must be an 8-bit code");
        require(addr_bits >= 1 && addr_bits <= 8, "QuantParams: addr_bits must be in [1, 8]");
    }
};

// Min/max calibration over the extended knot range: codes 0..2^addr_bits-1
// span [t0, t0 + (G+2P)*delta] exactly, so code(t0) = 0.
inline QuantParams calibrate_for_grid(const UniformGrid& g, int addr_bits = 8,
                                      double lut_scale = kDefaultLutScale) {
    QuantParams q;
    q.addr_bits = addr_bits;
    q.lut_scale = lut_scale;
    q.x_zero = 0;
    q.x_scale = static_cast<double>(g.G + 2 * g.P) * g.delta / static_cast<double>(q.addr_max());
    q.validate();
    return q;
}

inline double dequantize_input(const UniformGrid& g, const QuantParams& q, int x_q) {
    return g.t0 + q.x_scale * static_cast<double>(x_q - q.x_zero);
}

inline int quantize_input(const UniformGrid& g, const QuantParams& q, double x) {
    long long code = std::llround((x - g.t0) / q.x_scale) + q.x_zero;
    return static_cast<int>(std::clamp(code, 0LL, 255LL));
}

// Half-tabulation of the cardinal B-spline. Row a samples u = a/(depth-1)+j
// for bank j; the banks cover [0, ceil((P+1)/2)] and the mirrored half is
// recovered by reading the bitwise-inverted address, since the sample points
// satisfy inv(a)/(depth-1) = 1 - a/(depth-1) exactly.
struct BSplineLut {
    int degree = 3;
    int addr_bits = 8;
    double lut_scale = kDefaultLutScale;
    std::vector<std::uint8_t> bytes;  // depth rows x num_banks

    int depth() const { return 1 << addr_bits; }
    int num_banks() const { return (degree + 2) / 2; }
    std::uint8_t at(int addr, int bank) const {
        return bytes[static_cast<size_t>(addr) * num_banks() + bank];
    }

    bool operator==(const BSplineLut&) const = default;
};

inline BSplineLut build_lut(int p, const QuantParams& q) {
    require(p >= 1 && p <= 3, "build_lut: supported degrees are 1 <= p <= 3");
    q.validate();
    BSplineLut lut;
    lut.degree = p;
    lut.addr_bits = q.addr_bits;
    lut.lut_scale = q.lut_scale;
    const int depth = lut.depth();
    const int banks = lut.num_banks();
    lut.bytes.resize(static_cast<size_t>(depth) * banks);
    for (int a = 0; a < depth; ++a) {
        for (int j = 0; j < banks; ++j) {
            double u = static_cast<double>(a) / static_cast<double>(depth - 1) + j;
            long long byte = std::llround(cardinal_bspline(p, u) * q.lut_scale);
            require(byte >= 0 && byte <= 255,
                    "build_lut: quantized value overflows one unsigned byte; lower lut_scale");
            lut.bytes[static_cast<size_t>(a) * banks + j] = static_cast<std::uint8_t>(byte);
        }
    }
    return lut;
}

// The P+1 contiguous non-zero quantized basis values for one input, plus the
// interval index k they attach to. values[j] quantizes basis k-P+j (ascending
// basis order); select = k-P drives the coefficient multiplexer.
struct SparseActivationBlock {
    std::array<std::uint8_t, kMaxBlockLanes> values{};
    int lanes = 0;
    int k = 0;
    int select = 0;

    bool operator==(const SparseActivationBlock&) const = default;
};

// Integer interval search: k = floor((G+2P)(x_q - t_q0) / addr_max), clamped
// into the input domain. Equivalent to interval_index on the dequantized x.
inline int compare_unit(int x_q, const UniformGrid& g, const QuantParams& q) {
    require(x_q >= 0 && x_q <= 255, "compare_unit: x_q must be an 8-bit code");
    long long num = static_cast<long long>(g.G + 2 * g.P) * (x_q - q.x_zero);
    int k = static_cast<int>(floor_div(num, q.addr_max()));
    return std::clamp(k, g.P, g.G + g.P - 1);
}

// LUT address: clip((G+2P)(x_q - t_q0) - addr_max*k, 0, addr_max). Saturates
// for inputs outside the domain so they read the nearest edge entry.
inline int align_unit(int x_q, int k, const UniformGrid& g, const QuantParams& q) {
    long long v = static_cast<long long>(g.G + 2 * g.P) * (x_q - q.x_zero) -
                  static_cast<long long>(q.addr_max()) * k;
    return static_cast<int>(std::clamp(v, 0LL, static_cast<long long>(q.addr_max())));
}

// One direct read plus one read at the bitwise-inverted address, reverse
// packed. Lane j holds the sample at x_a + P - j; offsets beyond the stored
// half fold through B(u) = B(P+1-u). For even degrees the middle lane picks
// direct vs inverted by comparing the address against depth/2 (both routes
// store identical bytes, which models the halved ROM).
inline SparseActivationBlock lookup(const BSplineLut& lut, int x_addr) {
    require(x_addr >= 0 && x_addr < lut.depth(), "lookup: address out of range");
    const int p = lut.degree;
    const int banks = lut.num_banks();
    const int inv = (lut.depth() - 1) - x_addr;  // ~x_addr over addr_bits
    SparseActivationBlock b;
    b.lanes = p + 1;
    for (int j = 0; j <= p; ++j) {
        int m = p - j;  // offset of this lane's sample point
        std::uint8_t v;
        if (m < banks) {
            bool folded = (p % 2 == 0) && (m == banks - 1) && (x_addr >= lut.depth() / 2);
            v = folded ? lut.at(inv, m) : lut.at(x_addr, m);
        } else {
            v = lut.at(inv, p - m);
        }
        b.values[static_cast<size_t>(j)] = v;
    }
    return b;
}

// Compare -> Align -> Lookup; single-cycle model of the unit.
inline SparseActivationBlock evaluate(int x_q, const UniformGrid& g, const BSplineLut& lut,
                                      const QuantParams& q) {
    require(lut.degree == g.P, "evaluate: LUT degree does not match the grid degree");
    int k = compare_unit(x_q, g, q);
    int addr = align_unit(x_q, k, g, q);
    SparseActivationBlock b = lookup(lut, addr);
    b.k = k;
    b.select = k - g.P;
    return b;
}

// --- hex text dump: one row per address, "aa b0 [b1]" -----------------------

inline void dump_lut(const BSplineLut& lut, std::ostream& os) {
    os << "kansim-lut v1\n";
    os << "degree " << lut.degree << " addr_bits " << lut.addr_bits << " lut_scale "
       << lut.lut_scale << "\n";
    os << std::hex << std::setfill('0');
    for (int a = 0; a < lut.depth(); ++a) {
        os << std::setw(2) << a;
        for (int j = 0; j < lut.num_banks(); ++j) {
            os << ' ' << std::setw(2) << static_cast<int>(lut.at(a, j));
        }
        os << '\n';
    }
    os << std::dec;
}

inline BSplineLut load_lut(std::istream& is) {
    std::string magic, version;
    is >> magic >> version;
    require(magic == "kansim-lut" && version == "v1", "load_lut: unrecognized header");
    std::string key;
    BSplineLut lut;
    is >> key >> lut.degree;
    require(key == "degree", "load_lut: expected 'degree'");
    is >> key >> lut.addr_bits;
    require(key == "addr_bits", "load_lut: expected 'addr_bits'");
    is >> key >> lut.lut_scale;
    require(key == "lut_scale", "load_lut: expected 'lut_scale'");
    require(lut.degree >= 1 && lut.degree <= 3, "load_lut: bad degree");
    lut.bytes.resize(static_cast<size_t>(lut.depth()) * lut.num_banks());
    for (int a = 0; a < lut.depth(); ++a) {
        int addr = 0;
        is >> std::hex >> addr;
        require(addr == a, "load_lut: addresses must be dense and in order");
        for (int j = 0; j < lut.num_banks(); ++j) {
            int v = 0;
            is >> std::hex >> v;
            require(v >= 0 && v <= 255, "load_lut: byte out of range");
            lut.bytes[static_cast<size_t>(a) * lut.num_banks() + j] = static_cast<std::uint8_t>(v);
        }
    }
    is >> std::dec;
    return lut;
}

}  // namespace kansim
