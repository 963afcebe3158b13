#include "gfluct/renyi.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace gfluct;
using namespace fixtures;

namespace {

std::vector<double> interior_grid(const DomainInterval& d, int n, double pad = 0.02) {
    const double lo = std::isfinite(d.lower) ? d.lower : -3.0;
    const double hi = std::isfinite(d.upper) ? d.upper : 4.0;
    const double w = hi - lo;
    return linspace(lo + pad * w, hi - pad * w, n);
}

}  // namespace

TEST_CASE("e_t vanishes at 0 and 1") {
    auto c = small_chain(12);
    for (double t : {2.0, 5.0, 15.0}) {
        FlowPoint fp = flow_point(c.model, t);
        CHECK(renyi_entropy(fp, 0.0) == 0.0);
        CHECK(std::abs(renyi_entropy(fp, 1.0)) <= 1e-12);
    }
}

TEST_CASE("finite-time Evans-Searles symmetry") {
    auto c = small_chain(12);
    for (double t : {3.0, 9.0}) {
        FlowPoint fp = flow_point(c.model, t);
        DomainInterval d = domain_interval(fp);
        CHECK(d.symmetric);
        for (double a : interior_grid(d, 41)) CHECK(std::abs(renyi_entropy(fp, a) - renyi_entropy(fp, 1.0 - a)) <= 1e-9);
    }
}

TEST_CASE("toy model closed forms at finite size") {
    const int n = 128;
    auto toy = small_toy(n, 1.0);
    const Matrix id = Matrix::Identity(2 * n, 2 * n);
    for (double t : {1.0, 5.0, 20.0, n / 8.0}) {
        FlowPoint fp = flow_point(toy.model, t);
        DomainInterval d = domain_interval(fp);
        CHECK(std::abs(d.delta_t - toy.oracle.delta_t(t)) <= 1e-8);
        CHECK(std::abs(d.upper - (1.0 + toy.oracle.delta_t(t))) <= 1e-8);
        DomainInterval dp = domain_interval_ness(fp, id);
        const double r = toy.oracle.plus_radius(t);
        CHECK(std::abs(dp.upper - r) <= 1e-8 * r);
        CHECK(std::abs(dp.lower + r) <= 1e-8 * r);
        for (double a : interior_grid(d, 21)) CHECK(std::abs(renyi_entropy(fp, a) - toy.oracle.e_t(t, a)) <= 1e-8);
        for (double a : interior_grid(dp, 21))
            CHECK(std::abs(renyi_entropy_ness(fp, id, a) - toy.oracle.e_t_plus(t, a)) <= 1e-8);
    }
}

TEST_CASE("toy limiting radii") {
    auto toy = small_toy(32, 1.0);
    CHECK(toy.oracle.delta() == 1.0);
    CHECK(toy.oracle.delta_plus() == 2.0);
    auto t2 = small_toy(32, 3.0);
    CHECK(t2.oracle.delta() == doctest::Approx(1.0 / 3.0));
    CHECK(t2.oracle.delta_plus() == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("zero entropy production gives the whole line") {
    Model o = oscillator();
    DomainInterval d = domain_interval(o, 3.0);
    CHECK(std::isinf(d.lower));
    CHECK(std::isinf(d.upper));
    CHECK(std::abs(renyi_entropy(o, 3.0, 100.0)) <= 1e-12);
    DomainInterval dp = domain_interval_ness(o, 3.0, Matrix::Identity(2, 2));
    CHECK(std::isinf(dp.lower));
    CHECK(std::isinf(dp.upper));
    auto toy0 = small_toy(32, 0.0);
    CHECK(std::isinf(domain_interval(toy0.model, 4.0).upper));
}

TEST_CASE("delta_t dominates the hypothesis bound") {
    auto c = small_chain(10);
    std::vector<double> grid = {0.0, 1.0, 2.0, 4.0, 8.0, 12.0};
    auto rep = validate_model(c.model, grid);
    for (double t : grid)
        if (t != 0.0) CHECK(domain_interval(c.model, t).delta_t >= rep.delta - 1e-8);
}

TEST_CASE("convexity and sign pattern") {
    auto c = small_chain(10);
    Model g = generic_model(3, 5);
    for (const Model* m : {&c.model, &g}) {
        for (double t : {2.0, 6.0}) {
            FlowPoint fp = flow_point(*m, t);
            DomainInterval d = domain_interval(fp);
            auto grid = interior_grid(d, 41);
            std::vector<double> v;
            for (double a : grid) v.push_back(renyi_entropy(fp, a));
            for (std::size_t i = 1; i + 1 < v.size(); ++i) CHECK(v[i + 1] - 2.0 * v[i] + v[i - 1] >= -1e-9);
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (grid[i] >= 0.0 && grid[i] <= 1.0)
                    CHECK(v[i] <= 1e-12);
                else
                    CHECK(v[i] >= -1e-12);
            }
        }
    }
}

TEST_CASE("domain membership agrees with the interval on a wide grid") {
    auto c = small_chain(10);
    Model g = generic_model(4, 5);
    for (const Model* m : {&c.model, &g}) {
        FlowPoint fp = flow_point(*m, 4.0);
        DomainInterval d = domain_interval(fp);
        REQUIRE(d.bounded());
        const double mid = 0.5 * (d.lower + d.upper), half = 0.75 * d.length();
        for (double a : linspace(mid - half, mid + half, 201)) {
            const bool inside = a > d.lower && a < d.upper;
            const double gap = std::min(std::abs(a - d.lower), std::abs(a - d.upper));
            if (gap < 1e-9) continue;
            CHECK(std::isfinite(renyi_entropy(fp, a)) == inside);
        }
    }
}

TEST_CASE("toy NESS domain contains (-δ, δ)") {
    auto toy = small_toy(64, 1.0);
    const Matrix id = Matrix::Identity(128, 128);
    for (double t : {1.0, 4.0, 12.0}) {
        DomainInterval dp = domain_interval_ness(toy.model, t, id);
        CHECK(dp.lower <= -toy.oracle.delta());
        CHECK(dp.upper >= toy.oracle.delta());
        CHECK(dp.kind == DomainKind::ness);
    }
}

TEST_CASE("interval at negative times") {
    auto c = small_chain(10);
    DomainInterval fwd = domain_interval(c.model, 7.0);
    DomainInterval bwd = domain_interval(c.model, -7.0);
    CHECK(std::abs(fwd.lower - bwd.lower) <= 1e-8);
    CHECK(std::abs(fwd.upper - bwd.upper) <= 1e-8);
}

TEST_CASE("asymmetric interval without time reversal is flagged") {
    Model g = generic_model(5, 5);
    DomainInterval d = domain_interval(g, 2.0);
    CHECK_FALSE(d.symmetric);
    CHECK_FALSE(d.warnings.empty());
}

TEST_CASE("spectral profile agrees with the Cholesky route") {
    auto c = small_chain(10);
    FlowPoint fp = flow_point(c.model, 6.0);
    RenyiProfile p = RenyiProfile::reference(fp);
    for (double a : interior_grid(p.domain(), 31)) {
        CHECK(std::abs(p(a) - renyi_entropy(fp, a)) <= 1e-11);
        const double h = 1e-5;
        const double fd = (p(a + h) - p(a - h)) / (2 * h);
        CHECK(std::abs(p.derivative(a) - fd) <= 1e-6);
    }
    auto f = p.functional();
    CHECK(std::isinf(f(p.domain().upper + 0.1)));
    CHECK(f.meta == Provenance::finite_time_reference);

    const Matrix dp = c.model.covariance();
    RenyiProfile q = RenyiProfile::ness(fp, dp);
    for (double a : interior_grid(q.domain(), 11)) CHECK(std::abs(q(a) - renyi_entropy_ness(fp, dp, a)) <= 1e-11);
}

TEST_CASE("alpha scan CSV") {
    auto toy = small_toy(32, 1.0);
    RenyiProfile p = RenyiProfile::reference(flow_point(toy.model, 3.0));
    std::vector<double> grid = {-5.0, 0.0, 0.5, 6.0};
    auto rows = alpha_scan(p, grid);
    CHECK_FALSE(rows[0].in_domain);
    CHECK(rows[1].in_domain);
    CHECK(std::isinf(rows[3].e_t));
    std::ostringstream os;
    write_alpha_csv(os, rows);
    CHECK(os.str().rfind("alpha,e_t,in_domain\n-5,inf,0\n", 0) == 0);
}
