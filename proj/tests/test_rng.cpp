#include "gfluct/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace gfluct;

// Known-answer vectors published with the Random123 reference library.
TEST_CASE("philox4x32-10 known answers") {
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normals depend only on (seed, stream, index)") {
    std::vector<double> a(7), b(7), c(7);
    standard_normals(42, 0, 1234, a);
    standard_normals(42, 0, 1234, b);
    standard_normals(42, 0, 1235, c);
    CHECK(a == b);
    CHECK(a != c);
    standard_normals(42, 1, 1234, c);
    CHECK(a != c);
    standard_normals(43, 0, 1234, c);
    CHECK(a != c);
    // A shorter request is a prefix of a longer one.
    std::vector<double> p(3);
    standard_normals(42, 0, 1234, p);
    CHECK(std::equal(p.begin(), p.end(), a.begin()));
}

TEST_CASE("normal moments") {
    const int n = 200000;
    double s1 = 0, s2 = 0, s4 = 0;
    std::vector<double> z(2);
    for (int i = 0; i < n / 2; ++i) {
        standard_normals(9, 0, static_cast<std::uint64_t>(i), z);
        for (double x : z) {
            s1 += x;
            s2 += x * x;
            s4 += x * x * x * x;
        }
    }
    CHECK(std::abs(s1 / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(s4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));
}
