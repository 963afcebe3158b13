#pragma once

#include "gfluct/flow.hpp"

#include <cmath>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace gfluct {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class DomainKind { reference, ness };

struct DomainInterval {
    double lower = -kInf;
    double upper = kInf;
    DomainKind kind = DomainKind::reference;
    double delta_t = kInf;
    bool symmetric = true;
    std::vector<std::string> warnings;

    bool contains(double a) const { return a > lower && a < upper; }
    double length() const { return upper - lower; }
    bool bounded() const { return std::isfinite(lower) && std::isfinite(upper); }
};

// Interval {α : 1 + α k > 0 for all k in spectrum}.
DomainInterval interval_from_spectrum(const Vector& spectrum, DomainKind kind);

DomainInterval intersect(const DomainInterval& a, const DomainInterval& b);

enum class Provenance { finite_time_reference, finite_time_ness, asymptotic };

struct EntropicFunctional {
    DomainInterval domain;
    std::function<double(double)> evaluator;   // +inf outside the domain
    std::function<double(double)> derivative;  // optional
    Provenance meta = Provenance::asymptotic;

    double operator()(double a) const { return domain.contains(a) ? evaluator(a) : kInf; }
};

DomainInterval domain_interval(const FlowPoint& fp);
DomainInterval domain_interval(const Model& model, double t);
DomainInterval domain_interval_ness(const FlowPoint& fp, const Matrix& d_plus);
DomainInterval domain_interval_ness(const Model& model, double t, const Matrix& d_plus);

// e_t(α) = (α/2) log det(I + D T_t) − ½ log det(I + α D T_t); +inf off J_t.
double renyi_entropy(const FlowPoint& fp, double alpha);
double renyi_entropy(const Model& model, double t, double alpha);

// e_{t+}(α) = −(α/2) log det(I + D T_t) − ½ log det(I − α D₊ T_t); +inf off J_t⁺.
double renyi_entropy_ness(const FlowPoint& fp, const Matrix& d_plus, double alpha);
double renyi_entropy_ness(const Model& model, double t, double alpha, const Matrix& d_plus);

// Spectral form of e_t or e_{t+} at one time, for cheap α scans.
class RenyiProfile {
public:
    static RenyiProfile reference(const FlowPoint& fp);
    static RenyiProfile ness(const FlowPoint& fp, const Matrix& d_plus);

    double operator()(double alpha) const;
    double derivative(double alpha) const;
    const DomainInterval& domain() const { return domain_; }
    const Vector& spectrum() const { return spectrum_; }
    double time() const { return time_; }
    double logdet_term() const { return logdet_term_; }
    EntropicFunctional functional() const;

private:
    double time_ = 0.0;
    double logdet_term_ = 0.0;
    double sign_ = 1.0;  // +1: e_t, −1: e_{t+}
    Vector spectrum_;
    DomainInterval domain_;
};

struct AlphaScanRow {
    double alpha;
    double e_t;
    bool in_domain;
};

std::vector<AlphaScanRow> alpha_scan(const RenyiProfile& profile, std::span<const double> alphas);
void write_alpha_csv(std::ostream& os, const std::vector<AlphaScanRow>& rows);

}  // namespace gfluct
