#include "gfluct/rng.hpp"

#include <cmath>
#include <numbers>

namespace gfluct {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// Uniform in (0, 1) from 53 random bits.
inline double to_open_unit(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t k = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
    return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter c, PhiloxKey k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, c[0], hi0, lo0);
        mulhilo(kM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kW0;
        k[1] += kW1;
    }
    return c;
}

void standard_normals(std::uint64_t seed, std::uint32_t stream, std::uint64_t index, std::span<double> out) {
    const PhiloxKey key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const std::size_t n = out.size();
    for (std::size_t i = 0; 2 * i < n; ++i) {
        const PhiloxCounter ctr{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(index),
                                static_cast<std::uint32_t>(index >> 32), stream};
        const PhiloxCounter r = philox4x32(ctr, key);
        const double u1 = to_open_unit(r[0], r[1]);
        const double u2 = to_open_unit(r[2], r[3]);
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        out[2 * i] = rad * std::cos(ang);
        if (2 * i + 1 < n) out[2 * i + 1] = rad * std::sin(ang);
    }
}

}  // namespace gfluct
