#pragma once

#include "gfluct/linalg.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gfluct {

// The triple (L, D, θ). Immutable; copies share storage.
class Model {
public:
    // Throws StructuralError on shape problems and NotSpdError when the
    // covariance is not symmetric positive definite. The θ relations are
    // not enforced here; validate_model reports them.
    Model(Matrix generator, Matrix covariance,
          std::optional<Matrix> time_reversal = std::nullopt,
          std::string label = {});

    Index dim() const { return d_->covariance.rows(); }
    const Matrix& generator() const { return d_->generator; }
    const Matrix& covariance() const { return d_->covariance; }
    const std::optional<Matrix>& time_reversal() const { return d_->time_reversal; }
    const std::string& label() const { return d_->label; }

    // Lower triangular C with D = C Cᵀ.
    const Matrix& covariance_factor() const { return d_->factor; }
    // D⁻¹, from the Cholesky factor.
    const Matrix& precision() const { return d_->precision; }

private:
    struct Data {
        Matrix generator;
        Matrix covariance;
        std::optional<Matrix> time_reversal;
        std::string label;
        Matrix factor;
        Matrix precision;
    };
    std::shared_ptr<const Data> d_;
};

struct HypothesisReport {
    bool g4_ok = false;
    double m_est = 0.0;
    double M_est = 0.0;
    double delta = 0.0;  // +inf when m_est == M_est
    double involution_defect = 0.0;     // ‖θθ − I‖
    double orthogonality_defect = 0.0;  // ‖θᵀθ − I‖
    double anticommutation_defect = 0.0;  // ‖θL + Lθ‖
    double commutation_defect = 0.0;      // ‖θD − Dθ‖
    double generator_trace = 0.0;
    std::vector<std::string> notes;
};

HypothesisReport validate_model(const Model& model, std::span<const double> time_grid,
                                double tol = 1e-10);

struct SigmaMatrix {
    Matrix matrix;
    double trace_D_sigma = 0.0;
};

SigmaMatrix sigma_matrix(const Model& model);

// Model with covariance (D⁻¹ + P)⁻¹; generator and θ unchanged.
Model perturb_reference(const Model& model, const Matrix& p);

}  // namespace gfluct
