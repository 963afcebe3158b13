#include "gfluct/errors.hpp"
#include "gfluct/flow.hpp"
#include "gfluct/montecarlo.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

using namespace gfluct;
using namespace fixtures;

TEST_CASE("flow at t = 0 is the identity") {
    auto c = small_chain(6);
    FlowPoint fp = flow_point(c.model, 0.0);
    const Index n = c.model.dim();
    CHECK(max_abs(fp.propagator - Matrix::Identity(n, n)) == 0.0);
    CHECK(max_abs(fp.covariance_t - c.model.covariance()) == 0.0);
    CHECK(max_abs(fp.relative_T) == 0.0);
    CHECK(fp.logdet_term == 0.0);
}

TEST_CASE("toy covariance follows the moving rank-one projection") {
    auto toy = small_toy(48, 1.0, false);
    const Index n = 48;
    Vector phi = Vector::Zero(n);
    phi(24) = 1.0;
    for (double t : {0.7, 3.0, 11.0}) {
        FlowPoint fp = flow_point(toy.model, t);
        Vector pt = fp.propagator * phi;
        Matrix expected = Matrix::Identity(n, n) + pt * pt.transpose();
        CHECK(max_abs(fp.covariance_t - expected) < 1e-12);
        CHECK(max_abs(fp.covariance_t - fp.propagator * toy.model.covariance() * fp.propagator.transpose()) < 1e-12);
    }
}

TEST_CASE("group law on the chain") {
    auto c = small_chain(12);
    const double times[] = {-50.0, -20.0, -5.0, -1.0, 1.0, 5.0, 20.0, 50.0};
    for (double s : times)
        for (double t : times) {
            Matrix lhs = expm((s + t) * c.model.generator());
            Matrix rhs = expm(s * c.model.generator()) * expm(t * c.model.generator());
            CHECK(max_abs(lhs - rhs) <= 1e-10);
        }
    Matrix lhs = expm(100.0 * c.model.generator());
    Matrix rhs = expm(60.0 * c.model.generator()) * expm(40.0 * c.model.generator());
    CHECK(max_abs(lhs - rhs) <= 1e-10);
}

TEST_CASE("cocycle relation on shipped models") {
    ChainSpec inh;
    inh.n_left = 6;
    inh.n_right = 6;
    inh.omega = Vector::LinSpaced(13, 0.6, 1.4);
    inh.kappa = Vector::LinSpaced(14, 1.5, 0.7);
    std::vector<Model> models = {small_chain(10).model, small_toy(40).model, build_chain(inh).model};
    const double times[] = {-20.0, -5.0, -1.0, 1.0, 5.0, 20.0};
    for (const auto& m : models) {
        CHECK(cocycle_defect(m, 0.0, 3.0) <= 1e-13);
        CHECK(cocycle_defect(m, 3.0, 0.0) <= 1e-13);
        for (double s : times)
            for (double t : times) CHECK(cocycle_defect(m, s, t) <= 1e-10);
    }
}

TEST_CASE("cocycle on the default chain at t = 8") {
    // e^{8L} defeats partial-pivot LU inversion on this chain
    ChainSpec spec;
    auto c = build_chain(spec);
    CHECK(max_abs(flow_point(c.model, 8.0).relative_T) <= 10.0);
    CHECK(cocycle_defect(c.model, -4.0, 12.0) <= 1e-10);
}

TEST_CASE("log-determinant term vanishes under time reversal") {
    auto c = small_chain(12);
    for (double t : {0.5, 3.0, 17.0, 50.0, -9.0}) CHECK(std::abs(flow_point(c.model, t).logdet_term) <= 1e-8);
    auto toy = small_toy(40);
    for (double t : {1.0, 10.0}) CHECK(std::abs(flow_point(toy.model, t).logdet_term) <= 1e-8);
}

TEST_CASE("log density basics") {
    Model g = generic_model();
    FlowPoint fp = flow_point(g, 1.5);
    Vector zero = Vector::Zero(g.dim());
    CHECK(log_density(fp, zero) == fp.logdet_term);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    Vector x(g.dim());
    for (Index i = 0; i < x.size(); ++i) x(i) = nd(rng);
    CHECK(log_density(g, 0.0, x) == 0.0);
}

TEST_CASE("log density equals the time integral of entropy production run backwards") {
    // ℓ_t(x) = ∫₀ᵗ σ(e^{−sL}x) ds. The model with generator −L has ς₋ = −ς, so
    // the backwards integral is minus its forward quadratic form.
    Model g = generic_model(19, 5);
    Model rev(-g.generator(), g.covariance());
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    for (double t : {0.5, 2.0}) {
        SigmaIntegral b = sigma_integral_converged(rev, t, 1e-11);
        for (int k = 0; k < 5; ++k) {
            Vector x(g.dim());
            for (Index i = 0; i < x.size(); ++i) x(i) = nd(rng);
            const double via_integral = -(x.dot(b.matrix * x) - b.offset);
            CHECK(std::abs(log_density(g, t, x) - via_integral) <= 1e-6);
        }
    }
}

TEST_CASE("mean entropy production") {
    auto c = small_chain(8);
    CHECK(mean_entropy_production(c.model, 0.0) == 0.0);

    // Equal temperatures with the perturbed reference give a Gibbs state fixed by the flow.
    ChainSpec eq;
    eq.n_left = eq.n_right = 8;
    eq.t_left = eq.t_center = eq.t_right = 1.7;
    Model gibbs = perturb_reference(build_chain(eq).model, build_chain_perturbation(eq));
    for (double t : {1.0, 7.0, 25.0}) CHECK(std::abs(mean_entropy_production(gibbs, t)) < 1e-12);
    CHECK(max_abs(sigma_matrix(gibbs).matrix) < 1e-12);
}

TEST_CASE("chain entropy production averages to the closed-form steady value") {
    ChainModel c = build_chain(ChainSpec{});
    const int points = 61;
    double acc = 0.0;
    for (int k = 0; k < points; ++k) {
        const double t = 30.0 + 0.5 * k;
        const double w = (k == 0 || k == points - 1) ? 0.5 : 1.0;
        acc += w * mean_entropy_production(c.model, t);
    }
    const double avg = acc / (points - 1);
    CHECK(std::abs(avg / c.oracle->omega_plus_sigma() - 1.0) < 0.03);
}

namespace {

double normal_log_pdf(double x, double var) {
    return -0.5 * x * x / var - 0.5 * std::log(2.0 * M_PI * var);
}

// −∫ p₂ log(p₂/p₁) by the trapezoid rule on a wide grid.
double scalar_entropy_by_quadrature(double d1, double d2) {
    const double half = 40.0 * std::sqrt(std::max(d1, d2));
    const int n = 400000;
    const double h = 2.0 * half / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = -half + i * h;
        const double l2 = normal_log_pdf(x, d2);
        const double p2 = std::exp(l2);
        if (p2 == 0.0) continue;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * p2 * (l2 - normal_log_pdf(x, d1));
    }
    return -acc * h;
}

}  // namespace

TEST_CASE("relative entropy of scalar Gaussians") {
    Matrix d1 = Matrix::Constant(1, 1, 1.0), d2 = Matrix::Constant(1, 1, 2.0);
    const double value = relative_entropy(GaussianPair(d1, d2));
    const double oracle = scalar_entropy_by_quadrature(1.0, 2.0);
    CHECK(value == doctest::Approx(-0.5 + 0.5 * std::log(2.0)).epsilon(1e-14));
    CHECK(std::abs(value - oracle) < 1e-10);
    CHECK(value == doctest::Approx(-0.153426).epsilon(1e-5));
    CHECK(relative_entropy(GaussianPair(d2, d2)) == 0.0);
    for (double b : {0.3, 5.0}) {
        Matrix db = Matrix::Constant(1, 1, b);
        CHECK(std::abs(relative_entropy(GaussianPair(d1, db)) - scalar_entropy_by_quadrature(1.0, b)) < 1e-9);
    }
}

TEST_CASE("relative entropy is non-positive and vanishes only on the diagonal") {
    std::mt19937_64 rng(77);
    for (int k = 0; k < 1000; ++k) {
        Matrix a = random_spd(rng, 4, 0.1), b = random_spd(rng, 4, 0.1);
        CHECK(relative_entropy(GaussianPair(a, b)) <= 0.0);
    }
    Matrix a = random_spd(rng, 5);
    CHECK(relative_entropy(GaussianPair(a, a)) == 0.0);
    Matrix b = a;
    b(0, 0) += 1e-6;
    CHECK(relative_entropy(GaussianPair(a, b)) < 0.0);
}

TEST_CASE("entropy balance") {
    ChainModel c = build_chain(ChainSpec{});
    CHECK(entropy_balance_defect(c.model, 0.0, 8) == 0.0);
    CHECK(entropy_balance_defect(c.model, 10.0, 200) <= 1e-6);
    Model g = generic_model();
    CHECK(entropy_balance_defect(g, 2.0, 16) <= 1e-6);
    CHECK(entropy_balance_defect(oscillator(), 4.0, 16) <= 1e-14);
    CHECK_THROWS_AS(entropy_balance_defect(g, 1.0, 4), StructuralError);
}

TEST_CASE("flow cache shares immutable points across readers") {
    auto c = small_chain(6);
    FlowCache cache(c.model);
    std::vector<std::shared_ptr<const FlowPoint>> seen(8);
    std::vector<std::thread> pool;
    for (int w = 0; w < 8; ++w)
        pool.emplace_back([&, w] {
            for (int k = 0; k < 5; ++k) cache.at(0.25 * k);
            seen[w] = cache.at(1.0);
        });
    for (auto& t : pool) t.join();
    CHECK(cache.size() == 5);
    for (const auto& p : seen) CHECK(max_abs(p->propagator - seen[0]->propagator) == 0.0);
    CHECK(cache.at(1.0).get() == cache.at(1.0).get());
    CHECK(max_abs(cache.at(0.5)->covariance_t - flow_point(c.model, 0.5).covariance_t) == 0.0);
}

TEST_CASE("flow scan CSV") {
    auto c = small_chain(4);
    std::vector<double> ts = {0.0, 1.0, 2.0};
    auto rows = flow_scan(c.model, ts, 16);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].mean_sigma == 0.0);
    std::ostringstream os;
    write_flow_csv(os, rows);
    const std::string s = os.str();
    CHECK(s.rfind("t,trace_Dt,lambda_min_Dt,lambda_max_Dt,mean_sigma,ent_balance_defect\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 4);
}
