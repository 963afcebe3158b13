#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace gfluct {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key);

// Standard normals for draw `index` of stream `stream` under `seed`.
// Each (seed, stream, index) triple fixes out bit-for-bit regardless of
// which thread produces it.
void standard_normals(std::uint64_t seed, std::uint32_t stream, std::uint64_t index, std::span<double> out);

}  // namespace gfluct
