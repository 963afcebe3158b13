#pragma once

#include "gfluct/renyi.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace gfluct {

struct LimitOptions {
    int grid_points = 65;           // minimum
    bool antialias = true;          // refine so the step is ≤ π/(2‖L‖₁)
    bool use_time_reversal = true;  // D₋ = θD₊θ when θ is present
    bool record_delta = true;       // sample δ_t over the window
    std::optional<double> m_est;    // SPD floor reference; default: λ_min over the window
};

struct LimitCovariances {
    Matrix d_plus;
    Matrix d_minus;
    std::pair<double, double> window{0.0, 0.0};
    double plateau_residual = 0.0;
    double stationarity_defect = 0.0;
    double conjugacy_defect = 0.0;  // ‖D₋ − θD₊θ‖ when θ is present
    bool floored = false;
    std::vector<std::pair<double, double>> delta_series;  // (t, δ_t)
};

// Cesàro average of D_t over [horizon/2, horizon]; throws
// NonConvergenceError when the plateau residual exceeds tol.
LimitCovariances estimate_limit_covariance(const Model& model, double horizon, double tol,
                                           const LimitOptions& opts = {});

// Analytic D± supplied by the caller.
LimitCovariances exact_limit_covariance(const Model& model, Matrix d_plus,
                                        std::optional<Matrix> d_minus = std::nullopt);

struct SteadyEntropyProduction {
    double omega_plus = 0.0;
    std::optional<double> omega_minus;
    double balance_defect = 0.0;  // |ω₊ + ω₋|
};

SteadyEntropyProduction steady_entropy_production(const SigmaMatrix& sigma, const Matrix& d,
                                                  const Matrix& d_plus,
                                                  const Matrix* d_minus = nullptr);

struct QOperator {
    Matrix matrix;
    Vector spectrum;
    Matrix eigenvectors;
    Matrix weights_root;  // D₋^{1/2}
    double delta_bar = kInf;
    double lower_bound = -kInf;
    double upper_bound = kInf;
    bool bounds_checked = false;
    bool bounds_ok = true;
};

// δ̄ defaults to the largest δ_t recorded in lims.
QOperator q_operator(const LimitCovariances& lims, std::optional<double> delta_bar = std::nullopt,
                     double tol = 1e-2);

// e(α) = −Σ α g(α q_k) m_k with m_k = tr(Π_k D₋^{1/2} ς D₋^{1/2}).
class LimitFunctional {
public:
    LimitFunctional(const QOperator& q, const SigmaMatrix& sigma);
    double operator()(double alpha) const;
    double derivative(double alpha) const;
    double second_derivative(double alpha) const;
    const Vector& q() const { return q_; }
    const Vector& m() const { return m_; }
    DomainInterval natural_domain() const;

private:
    Vector q_;
    Vector m_;
};

double e_limit(const QOperator& q, const SigmaMatrix& sigma, double alpha);

// α tr(D₋(1−α)ς) with D₋(1−α) = (αD⁻¹ + (1−α)D₋⁻¹)⁻¹; +inf if not SPD.
double e_limit_resolvent(const Matrix& d, const Matrix& d_minus, const SigmaMatrix& sigma, double alpha);

// Functional whose domain is the natural one of Q, optionally cut down
// to a finite-time estimate of the limiting interval.
EntropicFunctional asymptotic_functional(const QOperator& q, const SigmaMatrix& sigma,
                                         std::optional<DomainInterval> restrict_to = std::nullopt);

struct Atom {
    double r;
    double w;
};

struct AtomMeasure {
    std::vector<Atom> atoms;
    double dropped_mass = 0.0;
    double reconstruction_defect = 0.0;
    std::vector<std::string> warnings;

    double evaluate(double alpha) const;  // −Σ w log(1 − α/r)
};

AtomMeasure spectral_measure_nu(const QOperator& q, const SigmaMatrix& sigma, double q_floor = 1e-8);

// Aggregate of the atoms on one side of the origin lying within
// `spread` times the innermost location on that side.
struct AtomCluster {
    double location = 0.0;  // weight-averaged
    double weight = 0.0;
    int count = 0;
};

std::vector<AtomCluster> atom_clusters(const AtomMeasure& nu, double spread = 2.0);

}  // namespace gfluct
