#include "gfluct/flow.hpp"

#include "gfluct/errors.hpp"
#include "gfluct/format.hpp"

#include <bit>
#include <cmath>
#include <mutex>
#include <ostream>

namespace gfluct {

FlowPoint flow_point(const Model& model, double t) {
    const Index n = model.dim();
    FlowPoint fp;
    fp.time = t;
    if (t == 0.0) {
        fp.propagator = Matrix::Identity(n, n);
        fp.inverse_propagator = Matrix::Identity(n, n);
        fp.covariance_t = model.covariance();
        fp.relative_T = Matrix::Zero(n, n);
        fp.scaled_T = Matrix::Zero(n, n);
        fp.logdet_term = 0.0;
        return fp;
    }
    fp.propagator = expm(t * model.generator());

    DenormalGuard guard;
    fp.inverse_propagator = expm(-t * model.generator());
    fp.covariance_t = symmetrize(fp.propagator * model.covariance() * fp.propagator.transpose());
    fp.relative_T = symmetrize(fp.inverse_propagator.transpose() * model.precision() * fp.inverse_propagator -
                               model.precision());
    const Matrix& c = model.covariance_factor();
    Matrix tc = fp.relative_T * c.triangularView<Eigen::Lower>();
    fp.scaled_T = symmetrize(c.transpose().triangularView<Eigen::Upper>() * tc);

    auto l = cholesky_lower(Matrix::Identity(n, n) + fp.scaled_T, 0.0);
    if (!l) throw NumericalError("flow_point: I + K_t is not positive definite (matrix exponential failure)");
    fp.logdet_term = half_logdet(*l);
    return fp;
}

std::shared_ptr<const FlowPoint> FlowCache::at(double t) {
    const auto key = std::bit_cast<std::uint64_t>(t);
    {
        std::shared_lock lock(mutex_);
        auto it = points_.find(key);
        if (it != points_.end()) return it->second;
    }
    auto fp = std::make_shared<const FlowPoint>(flow_point(model_, t));
    std::unique_lock lock(mutex_);
    auto [it, inserted] = points_.emplace(key, std::move(fp));
    return it->second;
}

std::size_t FlowCache::size() const {
    std::shared_lock lock(mutex_);
    return points_.size();
}

double cocycle_defect(const Model& model, double s, double t) {
    FlowPoint ft = flow_point(model, t);
    FlowPoint fs = flow_point(model, s);
    FlowPoint fts = flow_point(model, t + s);
    DenormalGuard guard;
    Matrix rhs = ft.relative_T + ft.inverse_propagator.transpose() * fs.relative_T * ft.inverse_propagator;
    return max_abs(fts.relative_T - rhs);
}

double log_density(const FlowPoint& fp, const Vector& x) {
    if (x.size() != fp.relative_T.rows()) throw StructuralError("log_density: dimension mismatch");
    return fp.logdet_term - 0.5 * x.dot(fp.relative_T * x);
}

double log_density(const Model& model, double t, const Vector& x) {
    return log_density(flow_point(model, t), x);
}

double mean_entropy_production(const SigmaMatrix& sigma, const Matrix& d, const Matrix& d_t) {
    return sigma.matrix.cwiseProduct(d_t - d).sum();
}

double mean_entropy_production(const Model& model, double t) {
    if (t == 0.0) return 0.0;
    SigmaMatrix s = sigma_matrix(model);
    Matrix e = expm(t * model.generator());
    DenormalGuard guard;
    Matrix dt = symmetrize(e * model.covariance() * e.transpose());
    return mean_entropy_production(s, model.covariance(), dt);
}

GaussianPair::GaussianPair(Matrix a, Matrix b) : d1(std::move(a)), d2(std::move(b)) {
    if (d1.rows() != d2.rows() || d1.cols() != d2.cols() || d1.rows() != d1.cols())
        throw StructuralError("GaussianPair: dimension mismatch");
    rel_T = symmetrize(spd_inverse(d2) - spd_inverse(d1));
}

namespace {

// ½ Σ (k/(1+k) − log(1+k)) over the spectrum of K = C₁ᵀ T C₁.
double entropy_from_spectrum(const Vector& k) {
    double s = 0.0;
    for (Index i = 0; i < k.size(); ++i) {
        const double v = k(i);
        if (!(v > -1.0)) throw NumericalError("relative_entropy: I + D₁T is not positive definite");
        s += v / (1.0 + v) - std::log1p(v);
    }
    return 0.5 * s;
}

}  // namespace

double relative_entropy(const GaussianPair& pair) {
    auto c = cholesky_lower(pair.d1, 0.0);
    if (!c) throw NotSpdError("relative_entropy: D₁ is not positive definite");
    Matrix k = symmetrize(c->transpose() * pair.rel_T * *c);
    return entropy_from_spectrum(sym_eigenvalues(k));
}

namespace {

double simpson_ep(const Model& model, const LowRankSym& lr, double tr_ds, double t, int steps) {
    const double h = t / steps;
    Matrix e = expm(h * model.generator().transpose());
    DenormalGuard guard;
    Matrix v = lr.factor;
    const Matrix& d = model.covariance();
    double acc = 0.0;
    for (int i = 0; i <= steps; ++i) {
        Matrix dv = d * v;
        double f = 0.0;
        for (Index k = 0; k < lr.rank(); ++k) f += lr.weights(k) * v.col(k).dot(dv.col(k));
        f -= tr_ds;
        const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * f;
        if (i < steps) v = e * v;
    }
    return acc * h / 3.0;
}

}  // namespace

EpIntegral integrated_entropy_production(const Model& model, double t, int steps, double tol) {
    if (steps < 8) throw StructuralError("integrated_entropy_production: need at least 8 steps");
    if (steps % 2) ++steps;
    EpIntegral out;
    if (t == 0.0) {
        out.steps = steps;
        return out;
    }
    SigmaMatrix s = sigma_matrix(model);
    LowRankSym lr = low_rank(s.matrix);
    if (lr.rank() == 0) {
        out.steps = steps;
        return out;
    }
    double prev = simpson_ep(model, lr, s.trace_D_sigma, t, steps);
    for (int level = 0; level < 12; ++level) {
        const int next_steps = steps * 2;
        const double next = simpson_ep(model, lr, s.trace_D_sigma, t, next_steps);
        out.last_change = std::abs(next - prev);
        prev = next;
        steps = next_steps;
        if (out.last_change < tol) break;
    }
    out.value = prev;
    out.steps = steps;
    return out;
}

double entropy_balance_defect(const Model& model, double t, int quad_steps) {
    if (quad_steps < 8) throw StructuralError("entropy_balance_defect: quad_steps must be >= 8");
    if (t == 0.0) return 0.0;
    FlowPoint fp = flow_point(model, t);
    const double ent = entropy_from_spectrum(sym_eigenvalues(fp.scaled_T));
    const double integral = integrated_entropy_production(model, t, quad_steps).value;
    return std::abs(ent + integral);
}

std::vector<FlowScanRow> flow_scan(const Model& model, std::span<const double> times, int quad_steps) {
    SigmaMatrix s = sigma_matrix(model);
    std::vector<FlowScanRow> rows;
    rows.reserve(times.size());
    for (double t : times) {
        FlowPoint fp = flow_point(model, t);
        Vector ev = sym_eigenvalues(fp.covariance_t);
        FlowScanRow r;
        r.t = t;
        r.trace_Dt = fp.covariance_t.trace();
        r.lambda_min_Dt = ev.minCoeff();
        r.lambda_max_Dt = ev.maxCoeff();
        r.mean_sigma = mean_entropy_production(s, model.covariance(), fp.covariance_t);
        r.ent_balance_defect = entropy_balance_defect(model, t, quad_steps);
        rows.push_back(r);
    }
    return rows;
}

void write_flow_csv(std::ostream& os, const std::vector<FlowScanRow>& rows) {
    os << "t,trace_Dt,lambda_min_Dt,lambda_max_Dt,mean_sigma,ent_balance_defect\n";
    for (const auto& r : rows) {
        os << fmt(r.t) << ',' << fmt(r.trace_Dt) << ',' << fmt(r.lambda_min_Dt) << ','
           << fmt(r.lambda_max_Dt) << ',' << fmt(r.mean_sigma) << ',' << fmt(r.ent_balance_defect) << '\n';
    }
}

}  // namespace gfluct
