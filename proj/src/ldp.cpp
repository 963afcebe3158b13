#include "gfluct/ldp.hpp"

#include "gfluct/errors.hpp"
#include "gfluct/format.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace gfluct {

namespace {

constexpr double kAlphaCap = 1e12;

}  // namespace

double functional_derivative(const EntropicFunctional& efn, double alpha) {
    if (efn.derivative) return efn.derivative(alpha);
    const auto& d = efn.domain;
    const double span = d.bounded() ? d.length() : 1.0;
    const double room = std::min(alpha - d.lower, d.upper - alpha);
    double h = std::min(1e-4 * span, 0.25 * room);
    if (room > 4.0 * h) {
        auto central = [&](double s) { return (efn(alpha + s) - efn(alpha - s)) / (2.0 * s); };
        return (4.0 * central(0.5 * h) - central(h)) / 3.0;
    }
    // One-sided near an endpoint.
    const double dir = (alpha - d.lower) < (d.upper - alpha) ? 1.0 : -1.0;
    h = 0.25 * std::max(room, 1e-6 * span);
    auto one = [&](double s) { return (efn(alpha + dir * s) - efn(alpha)) / (dir * s); };
    return 2.0 * one(0.5 * h) - one(h);
}

double RateFunction::tilde_derivative(double alpha) const {
    return -functional_derivative(efn_, -alpha);
}

double RateFunction::critical_alpha(double s) const {
    double lo = tail_slopes.first;
    double hi = tail_slopes.second;
    // Expand towards infinite ends until the slope brackets s.
    if (!std::isfinite(lo)) {
        lo = std::isfinite(hi) ? std::min(hi - 1.0, -1.0) : -1.0;
        while (tilde_derivative(lo) > s && lo > -kAlphaCap) lo *= 2.0;
    }
    if (!std::isfinite(hi)) {
        hi = std::isfinite(lo) ? std::max(lo + 1.0, 1.0) : 1.0;
        while (tilde_derivative(hi) < s && hi < kAlphaCap) hi *= 2.0;
    }
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
        mid = 0.5 * (lo + hi);
        const double g = tilde_derivative(mid) - s;
        if (std::abs(g) <= 1e-10) break;
        if (g < 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-16 * std::max(1.0, std::abs(mid))) break;
    }
    return mid;
}

double RateFunction::operator()(double s) const {
    if (degenerate) {
        const double slope = s >= 0.0 ? tail_slopes.second : tail_slopes.first;
        if (s == 0.0) return 0.0;
        if (!std::isfinite(slope)) return kInf;
        return slope * s;
    }
    if (s <= inner_interval.first) {
        if (!std::isfinite(tail_slopes.first)) return kInf;
        return tail_slopes.first * s + tail_intercepts.first;
    }
    if (s >= inner_interval.second) {
        if (!std::isfinite(tail_slopes.second)) return kInf;
        return tail_slopes.second * s + tail_intercepts.second;
    }
    const double a = critical_alpha(s);
    return a * s - conjugate_input(a);
}

RateFunction rate_function(const EntropicFunctional& efn, DomainKind kind) {
    RateFunction rf;
    rf.efn_ = efn;
    rf.kind = kind;
    const auto& d = efn.domain;
    // ẽ lives on −J = (−upper, −lower).
    const double a_lo = -d.upper;
    const double a_hi = -d.lower;

    // Interior sample grid for convexity and degeneracy checks.
    const double glo = std::isfinite(a_lo) ? a_lo : (std::isfinite(a_hi) ? a_hi - 10.0 : -10.0);
    const double ghi = std::isfinite(a_hi) ? a_hi : glo + 20.0;
    const double gm = 1e-6 * (ghi - glo);
    std::vector<double> grid = linspace(glo + gm, ghi - gm, 101);
    std::vector<double> vals;
    vals.reserve(grid.size());
    double vmax = 0.0;
    for (double a : grid) {
        vals.push_back(rf.conjugate_input(a));
        vmax = std::max(vmax, std::abs(vals.back()));
    }
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        const double dd = vals[i - 1] - 2.0 * vals[i] + vals[i + 1];
        if (dd < -1e-9) {
            std::ostringstream os;
            os.precision(17);
            os << "rate_function: functional is not convex at α = (" << -grid[i - 1] << ", " << -grid[i] << ", "
               << -grid[i + 1] << "), second difference " << dd;
            throw NonConvexError(os.str());
        }
    }

    if (vmax < 1e-12) {
        rf.degenerate = true;
        rf.tail_slopes = {a_lo, a_hi};
        rf.tail_intercepts = {0.0, 0.0};
        rf.inner_interval = {0.0, 0.0};
        rf.minimizer = 0.0;
        return rf;
    }

    const double len = std::isfinite(a_hi - a_lo) ? a_hi - a_lo : 0.0;
    const double eps = 1e-6 * len;
    if (std::isfinite(a_lo)) {
        const double a = a_lo + eps;
        rf.tail_slopes.first = a;
        rf.tail_intercepts.first = -rf.conjugate_input(a);
        rf.inner_interval.first = rf.tilde_derivative(a);
    } else {
        rf.tail_slopes.first = -kInf;
        rf.inner_interval.first = -kInf;
    }
    if (std::isfinite(a_hi)) {
        const double a = a_hi - eps;
        rf.tail_slopes.second = a;
        rf.tail_intercepts.second = -rf.conjugate_input(a);
        rf.inner_interval.second = rf.tilde_derivative(a);
    } else {
        rf.tail_slopes.second = kInf;
        rf.inner_interval.second = kInf;
    }
    rf.minimizer = rf.tilde_derivative(0.0);
    return rf;
}

double es_symmetry_defect(const RateFunction& rate, std::span<const double> grid) {
    double worst = 0.0;
    for (double s : grid) {
        const double a = rate(-s);
        const double b = rate(s);
        if (std::isinf(a) && std::isinf(b)) continue;
        worst = std::max(worst, std::abs(a - b - s));
    }
    return worst;
}

double clt_variance(const EntropicFunctional& efn, double at) {
    const auto& d = efn.domain;
    const double h = 1e-4 * (d.bounded() ? d.length() : 1.0);
    if (!(at - 2.0 * h > d.lower && at + 2.0 * h < d.upper))
        throw DomainError("clt_variance: evaluation point too close to the domain boundary");
    const double f0 = efn(at);
    auto second = [&](double s) { return (efn(at + s) - 2.0 * f0 + efn(at - s)) / (s * s); };
    return (4.0 * second(h) - second(2.0 * h)) / 3.0;
}

std::vector<RateRow> rate_table(const RateFunction& rate, std::span<const double> grid) {
    std::vector<RateRow> rows;
    rows.reserve(grid.size());
    for (double s : grid) {
        const double i = rate(s);
        const double im = rate(-s);
        rows.push_back({s, i, im, std::abs(im - i - s)});
    }
    return rows;
}

void write_rate_csv(std::ostream& os, const std::vector<RateRow>& rows) {
    os << "s,I,I_of_minus_s,es_defect\n";
    for (const auto& r : rows) os << fmt(r.s) << ',' << fmt(r.I) << ',' << fmt(r.I_minus_s) << ',' << fmt(r.es_defect) << '\n';
}

}  // namespace gfluct
