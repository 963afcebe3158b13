#include "gfluct/models.hpp"

#include "gfluct/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace gfluct {

namespace {

double one_minus_c2(double c) {
    return std::max(0.0, 1.0 - c * c);
}

}  // namespace

ToyOracle::ToyOracle(int n, double lam, int phi) : n_(n), lam_(lam), phi_(phi) {}

double ToyOracle::overlap(double t) const {
    const double h = std::numbers::pi / (n_ + 1);
    const double m = phi_ + 1;
    double acc = 0.0;
    for (int k = 1; k <= n_; ++k) {
        const double s = std::sin(m * k * h);
        acc += s * s * std::cos(2.0 * t * std::cos(k * h));
    }
    return 2.0 * acc / (n_ + 1);
}

double ToyOracle::delta_t(double t) const {
    const double g = one_minus_c2(overlap(t));
    if (lam_ == 0.0 || g == 0.0) return kInf;
    return std::sqrt(0.25 + (1.0 + lam_) / (lam_ * lam_ * g)) - 0.5;
}

double ToyOracle::plus_radius(double t) const {
    const double g = one_minus_c2(overlap(t));
    if (lam_ == 0.0 || g == 0.0) return kInf;
    return (1.0 + lam_) / (std::abs(lam_) * std::sqrt(g));
}

double ToyOracle::e_t(double t, double alpha) const {
    const double g = one_minus_c2(overlap(t));
    const double arg = 1.0 + lam_ * lam_ / (1.0 + lam_) * alpha * (1.0 - alpha) * g;
    if (!(arg > 0.0)) return kInf;
    return -0.5 * std::log(arg);
}

double ToyOracle::e_t_plus(double t, double alpha) const {
    const double g = one_minus_c2(overlap(t));
    const double q = lam_ / (1.0 + lam_);
    const double arg = 1.0 - q * q * alpha * alpha * g;
    if (!(arg > 0.0)) return kInf;
    return -0.5 * std::log(arg);
}

double ToyOracle::delta() const {
    if (lam_ == 0.0) return kInf;
    return std::abs(0.5 + 1.0 / lam_) - 0.5;
}

double ToyOracle::delta_plus() const {
    if (lam_ == 0.0) return kInf;
    return (1.0 + lam_) / std::abs(lam_);
}

double ToyOracle::rate(double s) const {
    return (0.5 + delta()) * std::abs(s) - 0.5 * s;
}

double ToyOracle::rate_plus(double s) const {
    return delta_plus() * std::abs(s);
}

EntropicFunctional ToyOracle::limit_functional() const {
    EntropicFunctional f;
    f.domain.lower = -delta();
    f.domain.upper = 1.0 + delta();
    f.domain.kind = DomainKind::reference;
    f.domain.delta_t = delta();
    f.evaluator = [](double) { return 0.0; };
    f.derivative = [](double) { return 0.0; };
    f.meta = Provenance::asymptotic;
    return f;
}

EntropicFunctional ToyOracle::limit_functional_ness() const {
    EntropicFunctional f;
    f.domain.lower = -delta_plus();
    f.domain.upper = delta_plus();
    f.domain.kind = DomainKind::ness;
    f.domain.symmetric = false;
    f.evaluator = [](double) { return 0.0; };
    f.derivative = [](double) { return 0.0; };
    f.meta = Provenance::asymptotic;
    return f;
}

ToyModel build_toy(const ToySpec& spec) {
    if (spec.n < 16) throw StructuralError("toy: n must be at least 16");
    if (!(spec.lam > -1.0)) throw StructuralError("toy: λ must exceed −1");
    const int n = spec.n;
    const int phi = spec.phi_index.value_or(n / 2);
    if (phi < 0 || phi >= n) throw StructuralError("toy: φ index out of range");

    Matrix l = Matrix::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        l(i, i + 1) = 1.0;
        l(i + 1, i) = -1.0;
    }
    Vector v = Vector::Zero(n);
    v(phi) = 1.0;

    std::ostringstream label;
    label << "toy(n=" << n << ",lam=" << spec.lam << (spec.doubled ? ",doubled" : "") << ")";

    if (!spec.doubled) {
        Matrix d = Matrix::Identity(n, n) + spec.lam * v * v.transpose();
        return {Model(l, d, std::nullopt, label.str()), ToyOracle(n, spec.lam, phi)};
    }

    const Index m = 2 * n;
    Matrix big = Matrix::Zero(m, m);
    big.topLeftCorner(n, n) = l;
    big.bottomRightCorner(n, n) = l.transpose();
    Vector w(m);
    w << v, v;
    w /= std::sqrt(2.0);
    Matrix d = Matrix::Identity(m, m) + spec.lam * w * w.transpose();
    Matrix theta = Matrix::Zero(m, m);
    theta.topRightCorner(n, n).setIdentity();
    theta.bottomLeftCorner(n, n).setIdentity();
    return {Model(big, d, theta, label.str()), ToyOracle(n, spec.lam, phi)};
}

ChainOracle::ChainOracle(double t_left, double t_right) : t_left_(t_left), t_right_(t_right) {
    r_ = (t_left - t_right) * (t_left - t_right) / (t_left * t_right);
}

double ChainOracle::kappa() {
    return (std::sqrt(5.0) - 1.0) / (2.0 * std::numbers::pi);
}

double ChainOracle::e_of_alpha(double alpha) const {
    const double arg = 1.0 + r_ * alpha * (1.0 - alpha);
    if (!(arg > 0.0)) return kInf;
    return -kappa() * std::log(arg);
}

double ChainOracle::omega_plus_sigma() const {
    return kappa() * r_;
}

double ChainOracle::delta_o() const {
    if (t_left_ == t_right_) return kInf;
    return std::min(t_left_, t_right_) / std::abs(t_left_ - t_right_);
}

double ChainOracle::clt_variance() const {
    return kappa() * r_ * (2.0 + r_);
}

std::vector<Atom> ChainOracle::nu_atoms() const {
    if (r_ == 0.0) return {};
    const double d = delta_o();
    return {Atom{-d, kappa()}, Atom{1.0 + d, kappa()}};
}

EntropicFunctional ChainOracle::functional() const {
    EntropicFunctional f;
    const double d = delta_o();
    f.domain.lower = -d;
    f.domain.upper = 1.0 + d;
    f.domain.kind = DomainKind::reference;
    f.domain.delta_t = d;
    const double r = r_;
    f.evaluator = [this_copy = *this](double a) { return this_copy.e_of_alpha(a); };
    f.derivative = [r](double a) { return -kappa() * r * (1.0 - 2.0 * a) / (1.0 + r * a * (1.0 - a)); };
    f.meta = Provenance::asymptotic;
    return f;
}

namespace {

struct ChainGeometry {
    int n = 0;       // number of sites
    int center = 0;  // array index of site 0
    Vector omega;
    Vector kappa;  // kappa(i) couples sites i−1 and i
    bool homogeneous = true;
};

ChainGeometry chain_geometry(const ChainSpec& spec) {
    if (spec.n_left < 1 || spec.n_right < 1) throw StructuralError("chain: n_left and n_right must be positive");
    if (!(spec.t_left > 0.0 && spec.t_center > 0.0 && spec.t_right > 0.0) || !std::isfinite(spec.t_left) ||
        !std::isfinite(spec.t_center) || !std::isfinite(spec.t_right))
        throw StructuralError("chain: temperatures must be positive and finite");
    ChainGeometry g;
    g.n = spec.n_left + 1 + spec.n_right;
    g.center = spec.n_left;
    g.homogeneous = !spec.omega && !spec.kappa;
    g.omega = spec.omega.value_or(Vector::Ones(g.n));
    g.kappa = spec.kappa.value_or(Vector::Ones(g.n + 1));
    if (g.omega.size() != g.n) throw StructuralError("chain: ω must have one entry per site");
    if (g.kappa.size() != g.n + 1) throw StructuralError("chain: κ must have one entry per bond (sites + 1)");
    for (Index i = 0; i < g.omega.size(); ++i)
        if (!(g.omega(i) > 0.0) || !std::isfinite(g.omega(i))) throw StructuralError("chain: ω entries must be positive");
    for (Index i = 0; i < g.kappa.size(); ++i)
        if (!(g.kappa(i) > 0.0) || !std::isfinite(g.kappa(i))) throw StructuralError("chain: κ entries must be positive");
    return g;
}

Matrix jacobi(const ChainGeometry& g) {
    Matrix j = Matrix::Zero(g.n, g.n);
    for (int i = 0; i < g.n; ++i) {
        j(i, i) = g.omega(i) + g.kappa(i) + g.kappa(i + 1);
        if (i + 1 < g.n) {
            j(i, i + 1) = -g.kappa(i + 1);
            j(i + 1, i) = -g.kappa(i + 1);
        }
    }
    return j;
}

double beta(double t) {
    return 1.0 / t;
}

}  // namespace

Matrix chain_operator(const ChainSpec& spec) {
    return jacobi(chain_geometry(spec));
}

ChainModel build_chain(const ChainSpec& spec) {
    const ChainGeometry g = chain_geometry(spec);
    const Matrix j = jacobi(g);
    const int n = g.n;

    const Vector ev = sym_eigenvalues(j);
    if (g.homogeneous) {
        if (ev.minCoeff() < 1.0 || ev.maxCoeff() > 5.0) throw StructuralError("chain: spectrum of j outside [1, 5]");
    } else if (!(ev.minCoeff() > 0.0)) {
        throw StructuralError("chain: j is not positive definite");
    }

    Matrix l = Matrix::Zero(2 * n, 2 * n);
    l.topRightCorner(n, n) = -j;
    l.bottomLeftCorner(n, n).setIdentity();

    Matrix d = Matrix::Zero(2 * n, 2 * n);
    struct Part {
        int first;
        int size;
        double temp;
    };
    const Part parts[] = {{0, g.center, spec.t_left}, {g.center, 1, spec.t_center}, {g.center + 1, n - g.center - 1, spec.t_right}};
    for (const auto& p : parts) {
        for (int i = 0; i < p.size; ++i) d(p.first + i, p.first + i) = p.temp;
        Matrix js = j.block(p.first, p.first, p.size, p.size);
        d.block(n + p.first, n + p.first, p.size, p.size) = p.temp * spd_inverse(js);
    }

    Matrix theta = Matrix::Identity(2 * n, 2 * n);
    theta.topLeftCorner(n, n) *= -1.0;

    std::ostringstream label;
    label << (g.homogeneous ? "chain" : "chain_inhomogeneous") << "(" << spec.n_left << "+1+" << spec.n_right
          << ",T=" << spec.t_left << "/" << spec.t_center << "/" << spec.t_right << ")";

    ChainModel out{Model(l, d, theta, label.str()), std::nullopt, j, n, g.center};
    if (g.homogeneous) out.oracle.emplace(spec.t_left, spec.t_right);
    return out;
}

double chain_group_velocity() {
    return (std::sqrt(5.0) - 1.0) / 2.0;
}

double chain_echo_horizon(const ChainSpec& spec) {
    const double reach = std::min(spec.n_left, spec.n_right);
    if (!spec.omega && !spec.kappa) return reach / chain_group_velocity();
    return reach / 5.0;
}

Matrix build_chain_perturbation(const ChainSpec& spec) {
    const ChainGeometry g = chain_geometry(spec);
    const double bl = beta(spec.t_left), bc = beta(spec.t_center), br = beta(spec.t_right);
    if (!(br >= bl)) throw DomainError("chain perturbation requires β_r ≥ β_ℓ (left side not colder)");
    const int n = g.n, c = g.center;
    const double k_left = g.kappa(c);       // bond (−1, 0)
    const double k_right = g.kappa(c + 1);  // bond (0, 1)
    const double j_cc = g.omega(c) + k_left + k_right;

    Matrix p = Matrix::Zero(2 * n, 2 * n);
    p(c, c) = bl - bc;
    const Index q0 = n + c;
    p(q0, q0) = br * k_right + bl * (g.omega(c) + k_left) - bc * j_cc;
    p(q0, q0 - 1) = p(q0 - 1, q0) = -bl * k_left;
    p(q0, q0 + 1) = p(q0 + 1, q0) = -br * k_right;
    return p;
}

Matrix chain_perturbed_precision(const ChainSpec& spec) {
    const ChainGeometry g = chain_geometry(spec);
    const double bl = beta(spec.t_left), br = beta(spec.t_right);
    const int n = g.n, c = g.center;
    const Matrix j = jacobi(g);

    Matrix h = Matrix::Zero(2 * n, 2 * n);
    h.topLeftCorner(n, n).setIdentity();
    h.bottomRightCorner(n, n) = j;

    // Neumann cut at the (0, 1) bond: drop that bond from the energy of Λ_ℓ ∪ Λ_c.
    Matrix jn = j.topLeftCorner(c + 1, c + 1);
    jn(c, c) -= g.kappa(c + 1);
    Matrix hl = Matrix::Zero(2 * n, 2 * n);
    hl.topLeftCorner(c + 1, c + 1).setIdentity();
    hl.block(n, n, c + 1, c + 1) = jn;

    return br * h - (br - bl) * hl;
}

}  // namespace gfluct
