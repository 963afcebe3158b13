#include "gfluct/linalg.hpp"

#include "gfluct/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <xmmintrin.h>
#include <pmmintrin.h>

#include <cmath>
#include <numeric>
#include <sstream>

namespace gfluct {

double max_abs(const Matrix& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

Matrix symmetrize(const Matrix& a) {
    return 0.5 * (a + a.transpose());
}

double asymmetry(const Matrix& a) {
    return max_abs(a - a.transpose());
}

DenormalGuard::DenormalGuard() : saved_(_mm_getcsr()) {
    _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
    _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
}

DenormalGuard::~DenormalGuard() {
    _mm_setcsr(saved_);
}

std::vector<std::vector<Index>> block_components(const Matrix& a) {
    const Index n = a.rows();
    std::vector<Index> parent(n);
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            if (i != j && a(i, j) != 0.0) {
                Index ri = find(i), rj = find(j);
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }
        }
    }
    std::vector<std::vector<Index>> out;
    std::vector<Index> slot(n, -1);
    for (Index i = 0; i < n; ++i) {
        Index r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<Index>(out.size());
            out.emplace_back();
        }
        out[slot[r]].push_back(i);
    }
    return out;
}

Matrix expm(const Matrix& a) {
    if (a.rows() != a.cols()) throw StructuralError("expm: matrix is not square");
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    if (!(norm1 <= kExpmNormLimit)) {
        std::ostringstream os;
        os << "expm: |t|·‖L‖₁ = " << norm1 << " exceeds " << kExpmNormLimit
           << "; use a shorter horizon";
        throw ExpmRangeError(os.str());
    }
    DenormalGuard guard;
    auto comps = block_components(a);
    if (comps.size() == 1) return a.exp();

    const Index n = a.rows();
    Matrix out = Matrix::Zero(n, n);
    for (const auto& c : comps) {
        const Index m = static_cast<Index>(c.size());
        if (m == 1) {
            out(c[0], c[0]) = std::exp(a(c[0], c[0]));
            continue;
        }
        Matrix sub(m, m);
        for (Index j = 0; j < m; ++j)
            for (Index i = 0; i < m; ++i) sub(i, j) = a(c[i], c[j]);
        Matrix e = sub.exp();
        for (Index j = 0; j < m; ++j)
            for (Index i = 0; i < m; ++i) out(c[i], c[j]) = e(i, j);
    }
    return out;
}

std::optional<Matrix> cholesky_lower(const Matrix& s, double rel_floor) {
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Matrix l = llt.matrixL();
    const double scale = s.cwiseAbs().rowwise().sum().maxCoeff();
    const double floor = rel_floor * scale;
    for (Index i = 0; i < l.rows(); ++i) {
        const double p = l(i, i) * l(i, i);
        if (!(p > floor)) return std::nullopt;
    }
    return l;
}

double half_logdet(const Matrix& lower) {
    return lower.diagonal().array().log().sum();
}

Matrix spd_inverse(const Matrix& s) {
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) throw NotSpdError("matrix is not positive definite");
    Matrix inv = llt.solve(Matrix::Identity(s.rows(), s.cols()));
    return symmetrize(inv);
}

Vector sym_eigenvalues(const Matrix& s) {
    DenormalGuard guard;
    Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

Matrix sym_sqrt(const Matrix& s) {
    DenormalGuard guard;
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    if (es.eigenvalues().minCoeff() <= 0.0) throw NotSpdError("sym_sqrt: matrix is not positive definite");
    const Matrix& v = es.eigenvectors();
    return symmetrize(v * es.eigenvalues().cwiseSqrt().asDiagonal() * v.transpose());
}

LowRankSym low_rank(const Matrix& s, double rel_tol) {
    DenormalGuard guard;
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    const Vector& w = es.eigenvalues();
    const double top = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
    std::vector<Index> keep;
    for (Index i = 0; i < w.size(); ++i)
        if (top > 0.0 && std::abs(w(i)) > rel_tol * top) keep.push_back(i);
    LowRankSym out;
    out.factor.resize(s.rows(), static_cast<Index>(keep.size()));
    out.weights.resize(static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.factor.col(static_cast<Index>(k)) = es.eigenvectors().col(keep[k]);
        out.weights(static_cast<Index>(k)) = w(keep[k]);
    }
    return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> g;
    if (n <= 0) return g;
    if (n == 1) return {lo};
    g.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * static_cast<double>(i) / (n - 1));
    g.back() = hi;
    return g;
}

}  // namespace gfluct
