#pragma once

#include "gfluct/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

namespace gfluct {

struct FlowPoint {
    double time = 0.0;
    Matrix propagator;          // e^{tL}
    Matrix inverse_propagator;  // e^{-tL}
    Matrix covariance_t;        // D_t = e^{tL} D e^{tLᵀ}
    Matrix relative_T;          // T_t = D_t⁻¹ − D⁻¹
    Matrix scaled_T;            // K_t = Cᵀ T_t C, orthogonally similar to D^{1/2} T_t D^{1/2}
    double logdet_term = 0.0;   // ½ log det(I + D T_t)
};

FlowPoint flow_point(const Model& model, double t);

// Time-keyed cache with exact-bit lookup. Safe for concurrent readers;
// entries are immutable once inserted.
class FlowCache {
public:
    explicit FlowCache(Model model) : model_(std::move(model)) {}
    std::shared_ptr<const FlowPoint> at(double t);
    std::size_t size() const;
    const Model& model() const { return model_; }

private:
    Model model_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::uint64_t, std::shared_ptr<const FlowPoint>> points_;
};

double cocycle_defect(const Model& model, double s, double t);

double log_density(const Model& model, double t, const Vector& x);
double log_density(const FlowPoint& fp, const Vector& x);

double mean_entropy_production(const Model& model, double t);
double mean_entropy_production(const SigmaMatrix& sigma, const Matrix& d, const Matrix& d_t);

struct GaussianPair {
    GaussianPair(Matrix d1, Matrix d2);
    Matrix d1;
    Matrix d2;
    Matrix rel_T;
};

// Ent(ω_{D₂} | ω_{D₁}) ≤ 0.
double relative_entropy(const GaussianPair& pair);

// ∫₀ᵗ tr(ς(D_s − D)) ds by composite Simpson. Starts from `steps`
// intervals and doubles until successive results differ by < tol.
struct EpIntegral {
    double value = 0.0;
    int steps = 0;
    double last_change = 0.0;
};
EpIntegral integrated_entropy_production(const Model& model, double t, int steps, double tol = 1e-8);

double entropy_balance_defect(const Model& model, double t, int quad_steps);

struct FlowScanRow {
    double t;
    double trace_Dt;
    double lambda_min_Dt;
    double lambda_max_Dt;
    double mean_sigma;
    double ent_balance_defect;
};

std::vector<FlowScanRow> flow_scan(const Model& model, std::span<const double> times, int quad_steps);
void write_flow_csv(std::ostream& os, const std::vector<FlowScanRow>& rows);

}  // namespace gfluct
