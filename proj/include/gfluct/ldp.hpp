#pragma once

#include "gfluct/renyi.hpp"

#include <iosfwd>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace gfluct {

// I(s) = sup_{−α∈J} (αs − e(−α)), continued linearly outside the range
// of slopes attained in the interior.
class RateFunction {
public:
    double operator()(double s) const;
    // Maximizing α for s inside inner_interval.
    double critical_alpha(double s) const;
    // ẽ(α) = e(−α).
    double conjugate_input(double alpha) const { return efn_(-alpha); }

    std::pair<double, double> inner_interval;  // (s⁻, s⁺)
    std::pair<double, double> tail_slopes;     // α at the two ends of −J
    std::pair<double, double> tail_intercepts; // −ẽ at those α
    double minimizer = 0.0;
    DomainKind kind = DomainKind::reference;
    bool degenerate = false;

private:
    friend RateFunction rate_function(const EntropicFunctional&, DomainKind);
    double tilde_derivative(double alpha) const;
    EntropicFunctional efn_;
};

RateFunction rate_function(const EntropicFunctional& efn, DomainKind kind);

double es_symmetry_defect(const RateFunction& rate, std::span<const double> grid);

// e″(at) by central differences with Richardson extrapolation.
double clt_variance(const EntropicFunctional& efn, double at);

// Derivative of efn at α, analytic when available.
double functional_derivative(const EntropicFunctional& efn, double alpha);

struct RateRow {
    double s;
    double I;
    double I_minus_s;
    double es_defect;
};
std::vector<RateRow> rate_table(const RateFunction& rate, std::span<const double> grid);
void write_rate_csv(std::ostream& os, const std::vector<RateRow>& rows);

}  // namespace gfluct
