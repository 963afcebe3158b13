#pragma once

#include "gfluct/model.hpp"
#include "gfluct/models.hpp"

#include <doctest.h>

#include <random>

namespace fixtures {

using namespace gfluct;

// Harmonic oscillator: L skew, D = I, θ = diag(−1, 1).
inline Model oscillator() {
    Matrix l(2, 2);
    l << 0, -1, 1, 0;
    Matrix th(2, 2);
    th << -1, 0, 0, 1;
    return Model(l, Matrix::Identity(2, 2), th, "oscillator");
}

inline ChainModel small_chain(int side = 12, double tl = 2.0, double tc = 1.0, double tr = 1.0) {
    ChainSpec s;
    s.n_left = side;
    s.n_right = side;
    s.t_left = tl;
    s.t_center = tc;
    s.t_right = tr;
    return build_chain(s);
}

inline ToyModel small_toy(int n = 64, double lam = 1.0, bool doubled = true) {
    ToySpec s;
    s.n = n;
    s.lam = lam;
    s.doubled = doubled;
    return build_toy(s);
}

inline Matrix random_matrix(std::mt19937_64& rng, Index n, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Matrix a(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) a(i, j) = nd(rng);
    return a;
}

inline Matrix random_spd(std::mt19937_64& rng, Index n, double floor = 0.5) {
    Matrix a = random_matrix(rng, n, 1.0 / std::sqrt(static_cast<double>(n)));
    return symmetrize(a * a.transpose()) + floor * Matrix::Identity(n, n);
}

inline Matrix random_symmetric(std::mt19937_64& rng, Index n) {
    return symmetrize(random_matrix(rng, n));
}

// Generic model without time reversal: damped-free random generator.
inline Model generic_model(std::uint64_t seed = 7, Index n = 6) {
    std::mt19937_64 rng(seed);
    return Model(random_matrix(rng, n, 0.4), random_spd(rng, n), std::nullopt, "generic");
}

// L = S D⁻¹ with S skew, so LD + DLᵀ = 0 and D is invariant.
inline Model invariant_model(std::uint64_t seed = 11, Index n = 8) {
    std::mt19937_64 rng(seed);
    Matrix a = random_matrix(rng, n);
    Matrix d = random_spd(rng, n);
    Matrix skew = a - a.transpose();
    return Model(skew * d.inverse(), d, std::nullopt, "invariant");
}

}  // namespace fixtures
