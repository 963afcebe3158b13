#include "gfluct/renyi.hpp"

#include "gfluct/errors.hpp"
#include "gfluct/format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace gfluct {

namespace {

// Eigenvalues this small put the corresponding endpoint beyond 1e13.
constexpr double kZeroEig = 64 * std::numeric_limits<double>::epsilon();

Matrix congruence(const Matrix& lower, const Matrix& t) {
    DenormalGuard guard;
    Matrix tc = t * lower.triangularView<Eigen::Lower>();
    return symmetrize(lower.transpose().triangularView<Eigen::Upper>() * tc);
}

Matrix factor_of(const Matrix& d_plus) {
    if (asymmetry(d_plus) > 1e-10 * max_abs(d_plus)) throw NotSpdError("d_plus is not symmetric");
    auto c = cholesky_lower(symmetrize(d_plus), 0.0);
    if (!c) throw NotSpdError("d_plus is not positive definite");
    return *c;
}

// −½ log det(I + a·k) or +inf, deciding membership by Cholesky and
// falling back to the spectrum near the boundary.
double neg_half_logdet_pencil(const Matrix& k, double a) {
    const Index n = k.rows();
    Matrix m = Matrix::Identity(n, n) + a * k;
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success) {
        const Matrix& l = llt.matrixLLT();
        const double scale = m.cwiseAbs().rowwise().sum().maxCoeff();
        double min_pivot = kInf;
        for (Index i = 0; i < n; ++i) min_pivot = std::min(min_pivot, l(i, i) * l(i, i));
        if (min_pivot > 1e-6 * scale) return -l.diagonal().array().log().sum();
    }
    Vector ev = sym_eigenvalues(k);
    double s = 0.0;
    for (Index i = 0; i < ev.size(); ++i) {
        const double v = 1.0 + a * ev(i);
        if (!(v > 0.0)) return kInf;
        s += std::log1p(a * ev(i));
    }
    return -0.5 * s;
}

}  // namespace

DomainInterval interval_from_spectrum(const Vector& spectrum, DomainKind kind) {
    DomainInterval d;
    d.kind = kind;
    for (Index i = 0; i < spectrum.size(); ++i) {
        const double k = spectrum(i);
        if (k > kZeroEig) d.lower = std::max(d.lower, -1.0 / k);
        if (k < -kZeroEig) d.upper = std::min(d.upper, -1.0 / k);
    }
    if (kind == DomainKind::reference) {
        d.delta_t = -d.lower;
        const double mirrored = 1.0 - d.lower;
        if (std::isinf(d.lower) != std::isinf(d.upper)) {
            d.symmetric = false;
        } else if (std::isfinite(d.upper)) {
            d.symmetric = std::abs(d.upper - mirrored) <= 1e-6 * std::max(1.0, std::abs(d.upper));
        }
        if (!d.symmetric)
            d.warnings.push_back("J_t is not symmetric about 1/2: time reversal symmetry fails");
    } else {
        d.delta_t = kInf;
        d.symmetric = false;
    }
    return d;
}

DomainInterval intersect(const DomainInterval& a, const DomainInterval& b) {
    DomainInterval d = a;
    d.lower = std::max(a.lower, b.lower);
    d.upper = std::min(a.upper, b.upper);
    if (d.kind == DomainKind::reference) {
        d.delta_t = -d.lower;
        d.symmetric = std::isfinite(d.upper) ? std::abs(d.upper - (1.0 - d.lower)) <= 1e-6 * std::max(1.0, std::abs(d.upper))
                                             : std::isinf(d.lower);
    }
    d.warnings.insert(d.warnings.end(), b.warnings.begin(), b.warnings.end());
    return d;
}

DomainInterval domain_interval(const FlowPoint& fp) {
    return interval_from_spectrum(sym_eigenvalues(fp.scaled_T), DomainKind::reference);
}

DomainInterval domain_interval(const Model& model, double t) {
    return domain_interval(flow_point(model, t));
}

DomainInterval domain_interval_ness(const FlowPoint& fp, const Matrix& d_plus) {
    Matrix kp = congruence(factor_of(d_plus), fp.relative_T);
    return interval_from_spectrum(-sym_eigenvalues(kp), DomainKind::ness);
}

DomainInterval domain_interval_ness(const Model& model, double t, const Matrix& d_plus) {
    return domain_interval_ness(flow_point(model, t), d_plus);
}

double renyi_entropy(const FlowPoint& fp, double alpha) {
    if (alpha == 0.0) return 0.0;
    const double second = neg_half_logdet_pencil(fp.scaled_T, alpha);
    if (std::isinf(second)) return kInf;
    return alpha * fp.logdet_term + second;
}

double renyi_entropy(const Model& model, double t, double alpha) {
    return renyi_entropy(flow_point(model, t), alpha);
}

double renyi_entropy_ness(const FlowPoint& fp, const Matrix& d_plus, double alpha) {
    if (alpha == 0.0) return 0.0;
    Matrix kp = congruence(factor_of(d_plus), fp.relative_T);
    const double second = neg_half_logdet_pencil(kp, -alpha);
    if (std::isinf(second)) return kInf;
    return -alpha * fp.logdet_term + second;
}

double renyi_entropy_ness(const Model& model, double t, double alpha, const Matrix& d_plus) {
    return renyi_entropy_ness(flow_point(model, t), d_plus, alpha);
}

RenyiProfile RenyiProfile::reference(const FlowPoint& fp) {
    RenyiProfile p;
    p.time_ = fp.time;
    p.logdet_term_ = fp.logdet_term;
    p.sign_ = 1.0;
    p.spectrum_ = sym_eigenvalues(fp.scaled_T);
    p.domain_ = interval_from_spectrum(p.spectrum_, DomainKind::reference);
    return p;
}

RenyiProfile RenyiProfile::ness(const FlowPoint& fp, const Matrix& d_plus) {
    RenyiProfile p;
    p.time_ = fp.time;
    p.logdet_term_ = fp.logdet_term;
    p.sign_ = -1.0;
    p.spectrum_ = -sym_eigenvalues(congruence(factor_of(d_plus), fp.relative_T));
    p.domain_ = interval_from_spectrum(p.spectrum_, DomainKind::ness);
    return p;
}

double RenyiProfile::operator()(double alpha) const {
    if (alpha == 0.0) return 0.0;
    double s = 0.0;
    for (Index i = 0; i < spectrum_.size(); ++i) {
        const double k = spectrum_(i);
        if (!(1.0 + alpha * k > 0.0)) return kInf;
        s += std::log1p(alpha * k);
    }
    return sign_ * alpha * logdet_term_ - 0.5 * s;
}

double RenyiProfile::derivative(double alpha) const {
    double s = 0.0;
    for (Index i = 0; i < spectrum_.size(); ++i) {
        const double k = spectrum_(i);
        const double v = 1.0 + alpha * k;
        if (!(v > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        s += k / v;
    }
    return sign_ * logdet_term_ - 0.5 * s;
}

EntropicFunctional RenyiProfile::functional() const {
    EntropicFunctional f;
    f.domain = domain_;
    auto self = std::make_shared<const RenyiProfile>(*this);
    f.evaluator = [self](double a) { return (*self)(a); };
    f.derivative = [self](double a) { return self->derivative(a); };
    f.meta = sign_ > 0 ? Provenance::finite_time_reference : Provenance::finite_time_ness;
    return f;
}

std::vector<AlphaScanRow> alpha_scan(const RenyiProfile& profile, std::span<const double> alphas) {
    std::vector<AlphaScanRow> rows;
    rows.reserve(alphas.size());
    for (double a : alphas) {
        const double v = profile(a);
        rows.push_back({a, v, std::isfinite(v)});
    }
    return rows;
}

void write_alpha_csv(std::ostream& os, const std::vector<AlphaScanRow>& rows) {
    os << "alpha,e_t,in_domain\n";
    for (const auto& r : rows) os << fmt(r.alpha) << ',' << fmt(r.e_t) << ',' << (r.in_domain ? 1 : 0) << '\n';
}

}  // namespace gfluct
