#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace gfluct {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

double max_abs(const Matrix& a);
Matrix symmetrize(const Matrix& a);
double asymmetry(const Matrix& a);

// Flushes denormals for the lifetime of the object. Propagators of
// oscillatory generators are full of tiny entries and dense kernels
// slow down several-fold on them otherwise.
class DenormalGuard {
public:
    DenormalGuard();
    ~DenormalGuard();
    DenormalGuard(const DenormalGuard&) = delete;
    DenormalGuard& operator=(const DenormalGuard&) = delete;

private:
    unsigned int saved_;
};

inline constexpr double kExpmNormLimit = 1e4;

// Connected components of the symmetric sparsity pattern of a.
std::vector<std::vector<Index>> block_components(const Matrix& a);

// e^a by scaling and squaring with Padé approximants, applied blockwise
// over the connected components of a. Throws ExpmRangeError when
// ‖a‖₁ exceeds kExpmNormLimit.
Matrix expm(const Matrix& a);

// Lower Cholesky factor, or nullopt when some pivot falls below
// rel_floor·‖s‖∞.
std::optional<Matrix> cholesky_lower(const Matrix& s, double rel_floor = 1e-13);

// Σ log L_ii, i.e. ½ log det of the factored matrix.
double half_logdet(const Matrix& lower);

Matrix spd_inverse(const Matrix& s);
Vector sym_eigenvalues(const Matrix& s);
Matrix sym_sqrt(const Matrix& s);

// s ≈ U diag(w) Uᵀ keeping eigenvalues with |w| > rel_tol·max|w|.
struct LowRankSym {
    Matrix factor;
    Vector weights;
    Index rank() const { return weights.size(); }
};
LowRankSym low_rank(const Matrix& s, double rel_tol = 1e-13);

// Uniform grid of n points on [lo, hi].
std::vector<double> linspace(double lo, double hi, int n);

}  // namespace gfluct
