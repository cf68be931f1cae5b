#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kansim {

// Capacity of one streamed activation block (>= largest supported G+P).
constexpr int kMaxBlockLanes = 16;

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Row-major dense matrix, just enough for the functional models.
template <typename T>
struct Mat {
    long long rows = 0;
    long long cols = 0;
    std::vector<T> data;

    Mat() = default;
    Mat(long long r, long long c, T fill = T{}) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    T& operator()(long long r, long long c) { return data[static_cast<size_t>(r) * cols + c]; }
    const T& operator()(long long r, long long c) const { return data[static_cast<size_t>(r) * cols + c]; }

    bool empty() const { return data.empty(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    friend bool operator==(const Mat& a, const Mat& b) {
        return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
    }
};

// Deterministic RNG used for synthetic tensors and property tests. The draws
// below avoid std::uniform_* so the generated values do not depend on the
// standard library implementation.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed + 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64() {
        // splitmix64
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint32_t next_u32() { return static_cast<std::uint32_t>(next_u64() >> 32); }

    // inclusive bounds
    long long uniform_int(long long lo, long long hi) {
        return lo + static_cast<long long>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double uniform_real(double lo, double hi) {
        double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

    std::int8_t next_int8() { return static_cast<std::int8_t>(static_cast<int>(next_u64() >> 56) - 128); }
    std::uint8_t next_uint8() { return static_cast<std::uint8_t>(next_u64() >> 56); }
};

inline long long ceil_div(long long a, long long b) { return (a + b - 1) / b; }

inline long long floor_div(long long a, long long b) {
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace kansim
