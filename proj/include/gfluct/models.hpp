#pragma once

#include "gfluct/asymptotics.hpp"
#include "gfluct/model.hpp"
#include "gfluct/renyi.hpp"

#include <optional>

namespace gfluct {

struct ToySpec {
    int n = 1024;
    double lam = 1.0;
    bool doubled = true;
    std::optional<int> phi_index;  // default n/2
};

// Closed forms for the rank-one toy model, evaluated with the overlap
// c(t) = (φ, e^{tL} φ) of the finite lattice.
class ToyOracle {
public:
    ToyOracle(int n, double lam, int phi);

    // Spectral evaluation of (e^{tL})_{φφ}: L = U (iT) U⁻¹ with T the
    // free tridiagonal matrix, so the overlap is a cosine sum.
    double overlap(double t) const;
    double delta_t(double t) const;
    double plus_radius(double t) const;  // J_t⁺ = (−r, r)
    double e_t(double t, double alpha) const;
    double e_t_plus(double t, double alpha) const;

    double delta() const;       // |½ + 1/λ| − ½
    double delta_plus() const;  // (1+λ)/|λ|
    double rate(double s) const;
    double rate_plus(double s) const;

    // Limit functionals: identically zero on (−δ, 1+δ) and (−δ⁺, δ⁺).
    EntropicFunctional limit_functional() const;
    EntropicFunctional limit_functional_ness() const;

    double lam() const { return lam_; }
    int phi() const { return phi_; }

private:
    int n_;
    double lam_;
    int phi_;
};

struct ToyModel {
    Model model;
    ToyOracle oracle;
};

ToyModel build_toy(const ToySpec& spec);

struct ChainSpec {
    int n_left = 128;
    int n_right = 128;
    double t_left = 2.0;
    double t_center = 1.0;
    double t_right = 1.0;
    // Site frequencies ω_n (length N) and bond constants κ_n (length N+1,
    // κ_n couples sites n−1 and n, the outer two tie to the walls).
    std::optional<Vector> omega;
    std::optional<Vector> kappa;
};

class ChainOracle {
public:
    ChainOracle(double t_left, double t_right);
    static double kappa();
    double r() const { return r_; }
    double e_of_alpha(double alpha) const;  // −κ log(1 + r α(1−α))
    double omega_plus_sigma() const;
    double delta_o() const;
    double clt_variance() const;  // e″(0) = e″(1) = κ r (2 + r)
    std::vector<Atom> nu_atoms() const;
    EntropicFunctional functional() const;

private:
    double t_left_;
    double t_right_;
    double r_;
};

struct ChainModel {
    Model model;
    std::optional<ChainOracle> oracle;  // homogeneous chains only
    Matrix j;                           // Dirichlet operator on the whole lattice
    int n_sites = 0;
    int center = 0;  // index of site 0
};

ChainModel build_chain(const ChainSpec& spec);

// Coupling operator j on the truncated lattice.
Matrix chain_operator(const ChainSpec& spec);

// Largest group velocity for the homogeneous chain, (√5 − 1)/2.
double chain_group_velocity();
// Time before waves from the center reach the nearer truncation edge.
double chain_echo_horizon(const ChainSpec& spec);

// The reference perturbation P with D⁻¹ + P = β_r h − (β_r − β_ℓ) h_ℓ.
// Requires β_r ≥ β_ℓ; equality gives the Gibbs state T h⁻¹.
Matrix build_chain_perturbation(const ChainSpec& spec);

// β_r h − (β_r − β_ℓ) h_ℓ with h_ℓ the Neumann-cut energy of Λ_ℓ ∪ Λ_c.
Matrix chain_perturbed_precision(const ChainSpec& spec);

}  // namespace gfluct
