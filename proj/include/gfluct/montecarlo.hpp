#pragma once

#include "gfluct/renyi.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gfluct {

struct SamplerOptions {
    unsigned workers = 1;
    Index block = 256;
    std::uint32_t stream = 0;
};

// Σ xᵢ by recursive halving; the summation tree depends only on the size.
double pairwise_sum(std::span<const double> xs);

struct RunningStats {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double std_error() const;
    static RunningStats of(std::span<const double> xs);
};

// Invokes fn(block_id, first_draw, X) with X = F Z for consecutive blocks
// of draws, Z standard normal from the counter-based stream. Blocks are
// spread over workers, but every block's content depends only on
// (seed, stream, first_draw, block size).
void for_each_block(const Matrix& factor, std::uint64_t seed, std::size_t count, const SamplerOptions& opts,
                    const std::function<void(std::size_t, std::uint64_t, const Matrix&)>& fn);

struct SampleBatch {
    std::size_t count = 0;
    std::uint64_t seed = 0;
    Matrix draws;       // n × count when kept
    Vector mean;
    Matrix covariance;  // unbiased sample covariance
    std::uint64_t checksum = 0;
};

struct SampleOptions {
    SamplerOptions sampler;
    bool keep_draws = false;
    bool covariance = true;
};

SampleBatch sample_gaussian(const Matrix& cov, std::uint64_t seed, std::size_t count, const SampleOptions& opts = {});
// x = factor · z for an arbitrary factor.
SampleBatch sample_with_factor(const Matrix& factor, std::uint64_t seed, std::size_t count,
                               const SampleOptions& opts = {});

// (x, Mᵢ x) for every draw and every form, in draw order.
std::vector<std::vector<double>> quadratic_forms(const Matrix& cov, std::span<const Matrix> forms, std::uint64_t seed,
                                                 std::size_t count, const SamplerOptions& opts = {});

struct SigmaIntegral {
    double time = 0.0;
    Matrix matrix;  // B_t = ∫₀ᵗ e^{sLᵀ} ς e^{sL} ds
    double offset = 0.0;  // t·tr(Dς)
    double error_estimate = 0.0;
    int steps = 0;
};

// Composite Simpson; steps is rounded up to a multiple of 4 so that the
// half-resolution rule gives a Richardson error estimate.
SigmaIntegral sigma_integral_matrix(const Model& model, double t, int steps);
// Doubles steps until successive results differ by < tol in max-abs entry.
SigmaIntegral sigma_integral_converged(const Model& model, double t, double tol = 1e-8, int start_steps = 64);
// B at each of the increasing times, accumulated piecewise.
std::vector<SigmaIntegral> sigma_integral_series(const Model& model, std::span<const double> times,
                                                 double steps_per_unit);

struct LogMeanExp {
    double estimate = 0.0;   // log mean exp(v)
    double std_error = 0.0;  // delta method
    double mean_ratio_error = 0.0;  // std error of mean exp(v) divided by the mean
    std::size_t count = 0;
};

LogMeanExp log_mean_exp(std::span<const double> values);

struct MgfEstimate {
    double alpha = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
};

// log mean exp(−α[(x, B_t x) − offset]) over draws from N(0, cov).
MgfEstimate empirical_mgf(const Matrix& cov, const SigmaIntegral& b, double alpha, const DomainInterval& domain,
                          std::uint64_t seed, std::size_t count, const SamplerOptions& opts = {},
                          bool enforce_margin = true);
MgfEstimate empirical_mgf(const Model& model, double t, double alpha, std::uint64_t seed, std::size_t count,
                          const SamplerOptions& opts = {});

struct IdentityCheck {
    double empirical = 0.0;
    double expected = 0.0;
    double std_error = 0.0;
    double z_score() const;
};

IdentityCheck trace_identity(const Matrix& cov, const Matrix& a, std::uint64_t seed, std::size_t count,
                             const SamplerOptions& opts = {});
// mean of exp(ℓ_{ω_t|ω}(x)) over x ~ ω, expected 1.
IdentityCheck normalization_check(const Model& model, const FlowPoint& fp, std::uint64_t seed, std::size_t count,
                                  const SamplerOptions& opts = {});

struct SllnPoint {
    double t;
    double value;
};

// Σ_t = (x, B_t x)/t − tr(Dς) along one draw x ~ N(0, cov).
std::vector<SllnPoint> slln_trajectory(const std::vector<SigmaIntegral>& series, const Matrix& cov,
                                       std::uint64_t seed);
// Log-spaced grid from horizon/100 to horizon; cov is D or the supplied D₊.
std::vector<SllnPoint> slln_trajectory(const Model& model, DomainKind measure, double horizon, std::uint64_t seed,
                                       const Matrix* d_plus = nullptr, int grid_points = 25);
std::vector<double> log_grid(double lo, double hi, int n);

struct HistogramBin {
    double lo;
    double hi;
    std::size_t count;
};

struct CltResult {
    bool skipped = false;
    std::string reason;
    double ks = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    std::size_t count = 0;
    std::vector<HistogramBin> histogram;
};

double ks_normal(std::vector<double> values, double variance);

// Samples t^{-1/2}[(x, B_t x) − offset − t·ω̄] with x ~ N(0, cov).
CltResult clt_sample(const Matrix& cov, const SigmaIntegral& b, double omega_bar, double a, std::uint64_t seed,
                     std::size_t count, const SamplerOptions& opts = {}, int bins = 40);

void write_histogram_csv(std::ostream& os, const std::vector<HistogramBin>& bins);

}  // namespace gfluct
