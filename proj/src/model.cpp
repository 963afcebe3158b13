#include "gfluct/model.hpp"

#include "gfluct/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace gfluct {

Model::Model(Matrix generator, Matrix covariance, std::optional<Matrix> time_reversal,
             std::string label) {
    const Index n = covariance.rows();
    if (n == 0) throw StructuralError("model: empty covariance");
    if (covariance.cols() != n) throw StructuralError("model: covariance is not square");
    if (generator.rows() != n || generator.cols() != n)
        throw StructuralError("model: generator and covariance dimensions differ");
    if (time_reversal && (time_reversal->rows() != n || time_reversal->cols() != n))
        throw StructuralError("model: time reversal and covariance dimensions differ");
    if (!generator.allFinite() || !covariance.allFinite())
        throw StructuralError("model: non-finite entries");

    const double scale = max_abs(covariance);
    if (asymmetry(covariance) > 1e-12 * scale)
        throw NotSpdError("model: covariance is not symmetric");

    auto d = std::make_shared<Data>();
    d->covariance = symmetrize(covariance);
    auto l = cholesky_lower(d->covariance, 0.0);
    if (!l) throw NotSpdError("model: covariance is not positive definite");
    d->factor = std::move(*l);
    Matrix linv = d->factor.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
    d->precision = symmetrize(linv.transpose() * linv);
    d->generator = std::move(generator);
    d->time_reversal = std::move(time_reversal);
    d->label = std::move(label);
    d_ = std::move(d);
}

HypothesisReport validate_model(const Model& model, std::span<const double> time_grid, double tol) {
    if (time_grid.empty()) throw StructuralError("validate_model: empty time grid");
    bool has_zero = false;
    for (double t : time_grid) has_zero = has_zero || t == 0.0;
    if (!has_zero) throw StructuralError("validate_model: time grid must include 0");

    HypothesisReport r;
    const Index n = model.dim();
    const Matrix& L = model.generator();
    const Matrix& D = model.covariance();
    const Matrix I = Matrix::Identity(n, n);
    r.generator_trace = L.trace();

    if (const auto& th = model.time_reversal()) {
        r.involution_defect = max_abs(*th * *th - I);
        r.orthogonality_defect = max_abs(th->transpose() * *th - I);
        r.anticommutation_defect = max_abs(*th * L + L * *th);
        r.commutation_defect = max_abs(*th * D - D * *th);
        r.g4_ok = r.involution_defect <= tol && r.orthogonality_defect <= tol &&
                  r.anticommutation_defect <= tol && r.commutation_defect <= tol &&
                  std::abs(r.generator_trace) <= tol;
        if (!r.g4_ok) r.notes.push_back("time reversal relations fail");
    } else {
        r.notes.push_back("no time reversal supplied");
    }

    r.m_est = std::numeric_limits<double>::infinity();
    r.M_est = -std::numeric_limits<double>::infinity();
    for (double t : time_grid) {
        Matrix e = expm(t * L);
        Matrix dt;
        {
            DenormalGuard guard;
            dt = symmetrize(e * D * e.transpose());
        }
        Vector ev = sym_eigenvalues(dt);
        r.m_est = std::min(r.m_est, ev.minCoeff());
        r.M_est = std::max(r.M_est, ev.maxCoeff());
    }
    if (r.m_est <= 0.0) r.notes.push_back("covariance flow lost positivity on the grid");
    const double gap = r.M_est - r.m_est;
    if (gap <= 1e-12 * r.M_est) {
        r.delta = std::numeric_limits<double>::infinity();
        r.notes.push_back("m_est == M_est: delta is infinite");
    } else {
        r.delta = r.m_est / gap;
    }
    return r;
}

SigmaMatrix sigma_matrix(const Model& model) {
    const Matrix& L = model.generator();
    const Matrix& Dinv = model.precision();
    if (!Dinv.allFinite()) throw SingularCovarianceError("sigma_matrix: covariance is singular");
    SigmaMatrix s;
    {
        DenormalGuard guard;
        s.matrix = symmetrize(0.5 * (L.transpose() * Dinv + Dinv * L));
    }
    s.trace_D_sigma = (model.covariance().cwiseProduct(s.matrix)).sum();
    return s;
}

Model perturb_reference(const Model& model, const Matrix& p) {
    const Index n = model.dim();
    if (p.rows() != n || p.cols() != n) throw StructuralError("perturb_reference: dimension mismatch");
    if (asymmetry(p) > 1e-12 * std::max(1.0, max_abs(p)))
        throw StructuralError("perturb_reference: P is not symmetric");
    Matrix a = symmetrize(model.precision() + symmetrize(p));
    auto l = cholesky_lower(a, 0.0);
    if (!l) {
        Vector ev = sym_eigenvalues(a);
        std::ostringstream os;
        os.precision(17);
        os << "perturb_reference: D⁻¹ + P is not positive definite; most negative eigenvalue "
           << ev.minCoeff();
        throw DomainError(os.str());
    }
    Matrix linv = l->triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
    Matrix cov = symmetrize(linv.transpose() * linv);
    return Model(model.generator(), std::move(cov), model.time_reversal(), model.label());
}

}  // namespace gfluct
