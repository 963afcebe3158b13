#include "gfluct/asymptotics.hpp"

#include "gfluct/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace gfluct {

namespace {

struct Average {
    Matrix full;
    Matrix half;
    double delta_max = 0.0;
    std::vector<std::pair<double, double>> deltas;
    double lambda_min = kInf;
};

// Trapezoid averages of D_t over the uniform grid on [a, b] (b may be
// negative relative to a) and over its first half.
Average cesaro(const Model& model, double a, double b, int points, bool record_delta) {
    const Index n = model.dim();
    const double step = (b - a) / (points - 1);
    const int mid = (points - 1) / 2;
    Matrix p = expm(a * model.generator());
    Matrix e = expm(step * model.generator());
    Matrix pinv, einv;
    if (record_delta) {
        pinv = expm(-a * model.generator());
        einv = expm(-step * model.generator());
    }
    const int stride = std::max(1, (points - 1) / 8);

    DenormalGuard guard;
    Average out;
    out.full = Matrix::Zero(n, n);
    out.half = Matrix::Zero(n, n);
    const Matrix& d = model.covariance();
    for (int k = 0; k < points; ++k) {
        Matrix dt = symmetrize(p * d * p.transpose());
        const double wf = (k == 0 || k == points - 1) ? 0.5 : 1.0;
        out.full += wf * dt;
        if (k <= mid) out.half += ((k == 0 || k == mid) ? 0.5 : 1.0) * dt;
        if (k == 0 || k == points - 1) out.lambda_min = std::min(out.lambda_min, sym_eigenvalues(dt).minCoeff());
        if (record_delta && k % stride == 0) {
            Matrix tt = symmetrize(pinv.transpose() * model.precision() * pinv - model.precision());
            const Matrix& c = model.covariance_factor();
            Matrix kt = symmetrize(c.transpose() * tt * c);
            Vector ev = sym_eigenvalues(kt);
            const double top = ev.maxCoeff();
            const double dlt = top > 0.0 ? 1.0 / top : kInf;
            out.deltas.emplace_back(a + k * step, dlt);
        }
        if (k + 1 < points) {
            p = e * p;
            if (record_delta) pinv = pinv * einv;
        }
    }
    out.full /= (points - 1);
    out.half /= mid;
    return out;
}

Matrix floor_spd(const Matrix& s, double floor, bool& floored) {
    Matrix sym = symmetrize(s);
    Vector ev = sym_eigenvalues(sym);
    if (ev.minCoeff() >= floor) return sym;
    floored = true;
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    Vector w = es.eigenvalues().cwiseMax(floor);
    return symmetrize(es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose());
}

double stationarity(const Matrix& l, const Matrix& dp) {
    DenormalGuard guard;
    return max_abs(l * dp + dp * l.transpose());
}

}  // namespace

LimitCovariances estimate_limit_covariance(const Model& model, double horizon, double tol,
                                           const LimitOptions& opts) {
    if (!(horizon > 0.0)) throw StructuralError("estimate_limit_covariance: horizon must be positive");
    int points = std::max(64, opts.grid_points);
    if (opts.antialias) {
        // D_t oscillates at frequencies up to 2ρ(L) ≤ 2‖L‖₁; keep the step
        // at or below π/(2‖L‖₁) so none of them aliases onto the mean.
        const double rho = model.generator().cwiseAbs().colwise().sum().maxCoeff();
        if (rho > 0.0) {
            const double needed = std::ceil(0.5 * horizon * 2.0 * rho / std::numbers::pi) + 1.0;
            points = std::max(points, static_cast<int>(std::min(needed, 1e5)));
        }
    }
    if (points % 2 == 0) ++points;

    LimitCovariances out;
    out.window = {0.5 * horizon, horizon};
    Average fwd = cesaro(model, 0.5 * horizon, horizon, points, opts.record_delta);
    out.plateau_residual = max_abs(fwd.full - fwd.half);
    out.delta_series = fwd.deltas;

    const double m = opts.m_est.value_or(std::min(fwd.lambda_min, sym_eigenvalues(model.covariance()).minCoeff()));
    out.d_plus = floor_spd(fwd.full, 0.5 * m, out.floored);

    const auto& th = model.time_reversal();
    if (th && opts.use_time_reversal) {
        out.d_minus = symmetrize(*th * out.d_plus * *th);
    } else {
        Average bwd = cesaro(model, -0.5 * horizon, -horizon, points, false);
        out.plateau_residual = std::max(out.plateau_residual, max_abs(bwd.full - bwd.half));
        out.d_minus = floor_spd(bwd.full, 0.5 * m, out.floored);
    }
    if (th) out.conjugacy_defect = max_abs(out.d_minus - *th * out.d_plus * *th);
    out.stationarity_defect = stationarity(model.generator(), out.d_plus);

    if (out.plateau_residual > tol) {
        std::ostringstream os;
        os.precision(17);
        os << "estimate_limit_covariance: plateau residual " << out.plateau_residual << " exceeds " << tol;
        throw NonConvergenceError(os.str(), out.plateau_residual);
    }
    return out;
}

LimitCovariances exact_limit_covariance(const Model& model, Matrix d_plus, std::optional<Matrix> d_minus) {
    const Index n = model.dim();
    if (d_plus.rows() != n || d_plus.cols() != n) throw StructuralError("exact_limit_covariance: dimension mismatch");
    LimitCovariances out;
    out.d_plus = symmetrize(d_plus);
    if (d_minus) {
        out.d_minus = symmetrize(*d_minus);
    } else if (const auto& th = model.time_reversal()) {
        out.d_minus = symmetrize(*th * out.d_plus * *th);
    } else {
        out.d_minus = out.d_plus;
    }
    if (const auto& th = model.time_reversal()) out.conjugacy_defect = max_abs(out.d_minus - *th * out.d_plus * *th);
    out.stationarity_defect = stationarity(model.generator(), out.d_plus);
    return out;
}

SteadyEntropyProduction steady_entropy_production(const SigmaMatrix& sigma, const Matrix& d, const Matrix& d_plus,
                                                  const Matrix* d_minus) {
    SteadyEntropyProduction out;
    out.omega_plus = sigma.matrix.cwiseProduct(d_plus - d).sum();
    if (d_minus) {
        out.omega_minus = sigma.matrix.cwiseProduct(*d_minus - d).sum();
        out.balance_defect = std::abs(out.omega_plus + *out.omega_minus);
    }
    return out;
}

QOperator q_operator(const LimitCovariances& lims, std::optional<double> delta_bar, double tol) {
    const Index n = lims.d_plus.rows();
    QOperator q;
    q.weights_root = sym_sqrt(lims.d_minus);
    Matrix pinv = spd_inverse(lims.d_plus);
    {
        DenormalGuard guard;
        q.matrix = symmetrize(Matrix::Identity(n, n) - q.weights_root * pinv * q.weights_root);
        Eigen::SelfAdjointEigenSolver<Matrix> es(q.matrix);
        q.spectrum = es.eigenvalues();
        q.eigenvectors = es.eigenvectors();
    }
    if (!delta_bar && !lims.delta_series.empty()) {
        double best = 0.0;
        for (const auto& [t, dlt] : lims.delta_series) best = std::max(best, dlt);
        delta_bar = best;
    }
    if (delta_bar) {
        q.delta_bar = *delta_bar;
        q.lower_bound = -1.0 / *delta_bar - tol;
        q.upper_bound = 1.0 / (1.0 + *delta_bar) + tol;
        q.bounds_checked = true;
        q.bounds_ok = n == 0 || (q.spectrum.minCoeff() >= q.lower_bound && q.spectrum.maxCoeff() <= q.upper_bound);
    }
    return q;
}

LimitFunctional::LimitFunctional(const QOperator& q, const SigmaMatrix& sigma) : q_(q.spectrum) {
    DenormalGuard guard;
    Matrix s = q.weights_root * sigma.matrix * q.weights_root;
    Matrix sv = s * q.eigenvectors;
    m_ = q.eigenvectors.cwiseProduct(sv).colwise().sum().transpose();
}

double LimitFunctional::operator()(double alpha) const {
    if (alpha == 0.0) return 0.0;
    double e = 0.0;
    for (Index k = 0; k < q_.size(); ++k) {
        const double z = alpha * q_(k);
        if (z >= 1.0) return kInf;
        double g;
        if (std::abs(z) < 1e-6)
            g = -(1.0 + z * (0.5 + z * (1.0 / 3.0 + z * 0.25)));
        else
            g = std::log1p(-z) / z;
        e -= alpha * g * m_(k);
    }
    return e;
}

double LimitFunctional::derivative(double alpha) const {
    double d = 0.0;
    for (Index k = 0; k < q_.size(); ++k) d += m_(k) / (1.0 - alpha * q_(k));
    return d;
}

double LimitFunctional::second_derivative(double alpha) const {
    double d = 0.0;
    for (Index k = 0; k < q_.size(); ++k) {
        const double v = 1.0 - alpha * q_(k);
        d += m_(k) * q_(k) / (v * v);
    }
    return d;
}

DomainInterval LimitFunctional::natural_domain() const {
    return interval_from_spectrum(-q_, DomainKind::reference);
}

double e_limit(const QOperator& q, const SigmaMatrix& sigma, double alpha) {
    return LimitFunctional(q, sigma)(alpha);
}

double e_limit_resolvent(const Matrix& d, const Matrix& d_minus, const SigmaMatrix& sigma, double alpha) {
    if (alpha == 0.0) return 0.0;
    Matrix a = symmetrize(alpha * spd_inverse(d) + (1.0 - alpha) * spd_inverse(d_minus));
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) return kInf;
    Matrix x = llt.solve(sigma.matrix);
    return alpha * x.trace();
}

EntropicFunctional asymptotic_functional(const QOperator& q, const SigmaMatrix& sigma,
                                         std::optional<DomainInterval> restrict_to) {
    auto lf = std::make_shared<const LimitFunctional>(q, sigma);
    EntropicFunctional f;
    f.domain = lf->natural_domain();
    if (restrict_to) {
        DomainKind kind = restrict_to->kind;
        f.domain = intersect(f.domain, *restrict_to);
        f.domain.kind = kind;
    }
    f.evaluator = [lf](double a) { return (*lf)(a); };
    f.derivative = [lf](double a) { return lf->derivative(a); };
    f.meta = Provenance::asymptotic;
    return f;
}

double AtomMeasure::evaluate(double alpha) const {
    double e = 0.0;
    for (const auto& a : atoms) {
        const double v = 1.0 - alpha / a.r;
        if (!(v > 0.0)) return kInf;
        e -= a.w * std::log(v);
    }
    return e;
}

AtomMeasure spectral_measure_nu(const QOperator& q, const SigmaMatrix& sigma, double q_floor) {
    if (!(q_floor > 0.0)) throw StructuralError("spectral_measure_nu: q_floor must be positive");
    LimitFunctional lf(q, sigma);
    const Vector& qs = lf.q();
    const Vector& ms = lf.m();
    AtomMeasure nu;

    // Clusters of nearby eigenvalues, merged in ascending order.
    struct Group {
        double qsum = 0.0;
        int count = 0;
        double msum = 0.0;
        double wsum = 0.0;
        double last = 0.0;
    };
    std::vector<Group> groups;
    for (Index k = 0; k < qs.size(); ++k) {
        const double qk = qs(k);
        if (std::abs(qk) < q_floor) {
            nu.dropped_mass += std::abs(ms(k));
            continue;
        }
        if (groups.empty() || qk - groups.back().last > 1e-6 || (qk > 0) != (groups.back().last > 0)) groups.push_back({});
        auto& g = groups.back();
        g.qsum += qk;
        g.count += 1;
        g.msum += ms(k);
        g.wsum += ms(k) / qk;
        g.last = qk;
    }
    for (const auto& g : groups) {
        const double qbar = g.qsum / g.count;
        if (g.wsum == 0.0 && g.msum == 0.0) continue;
        nu.atoms.push_back({1.0 / qbar, g.wsum});
    }

    Vector sev = sym_eigenvalues(sigma.matrix);
    const double trace_norm = sev.cwiseAbs().sum();
    if (nu.dropped_mass > 1e-6 * trace_norm) {
        std::ostringstream os;
        os.precision(17);
        os << "dropped mass " << nu.dropped_mass << " exceeds 1e-6·‖ς‖₁";
        nu.warnings.push_back(os.str());
    }

    DomainInterval dom = lf.natural_domain();
    const double lo = std::isfinite(dom.lower) ? dom.lower : -1.0;
    const double hi = std::isfinite(dom.upper) ? dom.upper : 2.0;
    const double margin = 0.05 * (hi - lo);
    for (double a : linspace(lo + margin, hi - margin, 21)) {
        const double ref = lf(a);
        const double rec = nu.evaluate(a);
        if (std::isfinite(ref) && std::isfinite(rec))
            nu.reconstruction_defect = std::max(nu.reconstruction_defect, std::abs(ref - rec));
    }
    if (nu.reconstruction_defect > 1e-6) {
        std::ostringstream os;
        os.precision(17);
        os << "atom reconstruction defect " << nu.reconstruction_defect << " exceeds 1e-6";
        nu.warnings.push_back(os.str());
    }
    return nu;
}

std::vector<AtomCluster> atom_clusters(const AtomMeasure& nu, double spread) {
    std::vector<AtomCluster> out;
    double wmax = 0.0;
    for (const auto& a : nu.atoms) wmax = std::max(wmax, std::abs(a.w));
    for (int side : {-1, 1}) {
        double inner = kInf;
        for (const auto& a : nu.atoms)
            if ((a.r > 0) == (side > 0) && std::abs(a.w) >= 1e-3 * wmax) inner = std::min(inner, std::abs(a.r));
        if (!std::isfinite(inner)) continue;
        AtomCluster c;
        double moment = 0.0;
        for (const auto& a : nu.atoms) {
            if ((a.r > 0) != (side > 0) || std::abs(a.r) > spread * inner) continue;
            c.weight += a.w;
            moment += a.w * a.r;
            ++c.count;
        }
        c.location = c.weight != 0.0 ? moment / c.weight : side * inner;
        out.push_back(c);
    }
    return out;
}

}  // namespace gfluct
