#include "gfluct/montecarlo.hpp"

#include "gfluct/errors.hpp"
#include "gfluct/format.hpp"
#include "gfluct/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace gfluct {

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 16) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double RunningStats::std_error() const {
    return count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;
}

RunningStats RunningStats::of(std::span<const double> xs) {
    RunningStats r;
    r.count = xs.size();
    if (xs.empty()) return r;
    r.mean = pairwise_sum(xs) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        std::vector<double> dev(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = (xs[i] - r.mean) * (xs[i] - r.mean);
        r.variance = pairwise_sum(dev) / static_cast<double>(xs.size() - 1);
    }
    return r;
}

namespace {

void process_blocks(const Matrix& factor, std::uint64_t seed, std::size_t count, const SamplerOptions& opts,
                    std::size_t block_begin, std::size_t block_end,
                    const std::function<void(std::size_t, std::uint64_t, const Matrix&)>& fn) {
    const Index k = factor.cols();
    const std::size_t bsize = static_cast<std::size_t>(opts.block);
    const std::size_t nblocks = block_end - block_begin;
    const unsigned workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(opts.workers, nblocks)));

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](unsigned w) {
        try {
            DenormalGuard guard;
            Matrix z, x;
            for (std::size_t b = block_begin + w; b < block_end; b += workers) {
                const std::uint64_t first = static_cast<std::uint64_t>(b) * bsize;
                const Index cols = static_cast<Index>(std::min<std::size_t>(bsize, count - first));
                z.resize(k, cols);
                for (Index j = 0; j < cols; ++j)
                    standard_normals(seed, opts.stream, first + static_cast<std::uint64_t>(j),
                                     std::span<double>(z.col(j).data(), static_cast<std::size_t>(k)));
                x.noalias() = factor * z;
                fn(b, first, x);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

std::size_t block_count(std::size_t count, Index block) {
    const std::size_t b = static_cast<std::size_t>(block);
    return (count + b - 1) / b;
}

void check_options(const SamplerOptions& opts) {
    if (opts.workers < 1) throw StructuralError("sampler: workers must be >= 1");
    if (opts.block < 1) throw StructuralError("sampler: block must be >= 1");
}

Matrix factor_of(const Matrix& cov) {
    auto c = cholesky_lower(symmetrize(cov), 0.0);
    if (!c) throw NotSpdError("sampler: covariance is not positive definite");
    return *c;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

void for_each_block(const Matrix& factor, std::uint64_t seed, std::size_t count, const SamplerOptions& opts,
                    const std::function<void(std::size_t, std::uint64_t, const Matrix&)>& fn) {
    check_options(opts);
    process_blocks(factor, seed, count, opts, 0, block_count(count, opts.block), fn);
}

SampleBatch sample_with_factor(const Matrix& factor, std::uint64_t seed, std::size_t count, const SampleOptions& opts) {
    check_options(opts.sampler);
    const Index n = factor.rows();
    SampleBatch batch;
    batch.count = count;
    batch.seed = seed;
    if (opts.keep_draws) batch.draws.resize(n, static_cast<Index>(count));
    Vector sum = Vector::Zero(n);
    Matrix outer = opts.covariance ? Matrix::Zero(n, n) : Matrix();
    std::uint64_t hash = 0xcbf29ce484222325ull;

    struct Partial {
        Vector sum;
        Matrix outer;
        std::uint64_t hash = 0;
    };
    const std::size_t nblocks = block_count(count, opts.sampler.block);
    const std::size_t wave = std::max<std::size_t>(8, 2 * opts.sampler.workers);
    std::vector<Partial> parts;
    for (std::size_t begin = 0; begin < nblocks; begin += wave) {
        const std::size_t end = std::min(nblocks, begin + wave);
        parts.assign(end - begin, Partial{});
        process_blocks(factor, seed, count, opts.sampler, begin, end,
                       [&](std::size_t b, std::uint64_t first, const Matrix& x) {
                           Partial& p = parts[b - begin];
                           p.sum = x.rowwise().sum();
                           if (opts.covariance) p.outer = x * x.transpose();
                           p.hash = fnv1a(0xcbf29ce484222325ull, x.data(), sizeof(double) * static_cast<std::size_t>(x.size()));
                           if (opts.keep_draws) batch.draws.middleCols(static_cast<Index>(first), x.cols()) = x;
                       });
        for (auto& p : parts) {
            sum += p.sum;
            if (opts.covariance) outer += p.outer;
            hash = fnv1a(hash, &p.hash, sizeof(p.hash));
        }
    }
    const double nn = static_cast<double>(count);
    batch.mean = count ? Vector(sum / nn) : Vector::Zero(n);
    if (opts.covariance && count > 1)
        batch.covariance = symmetrize((outer - nn * batch.mean * batch.mean.transpose()) / (nn - 1.0));
    batch.checksum = hash;
    return batch;
}

SampleBatch sample_gaussian(const Matrix& cov, std::uint64_t seed, std::size_t count, const SampleOptions& opts) {
    return sample_with_factor(factor_of(cov), seed, count, opts);
}

std::vector<std::vector<double>> quadratic_forms(const Matrix& cov, std::span<const Matrix> forms, std::uint64_t seed,
                                                 std::size_t count, const SamplerOptions& opts) {
    const Matrix c = factor_of(cov);
    for (const auto& m : forms)
        if (m.rows() != cov.rows() || m.cols() != cov.cols()) throw StructuralError("quadratic_forms: dimension mismatch");
    std::vector<std::vector<double>> out(forms.size(), std::vector<double>(count));
    for_each_block(c, seed, count, opts, [&](std::size_t, std::uint64_t first, const Matrix& x) {
        Matrix y;
        for (std::size_t f = 0; f < forms.size(); ++f) {
            y.noalias() = forms[f] * x;
            for (Index j = 0; j < x.cols(); ++j) out[f][first + static_cast<std::size_t>(j)] = x.col(j).dot(y.col(j));
        }
    });
    return out;
}

namespace {

void simpson_buckets(const Model& model, const LowRankSym& lr, Matrix& v, double h, int steps, Matrix& ends,
                     Matrix& odd, Matrix& even2, Matrix& even0) {
    Matrix e = expm(h * model.generator().transpose());
    DenormalGuard guard;
    Matrix w;
    for (int i = 0; i <= steps; ++i) {
        w.noalias() = v * lr.weights.asDiagonal();
        Matrix* bucket;
        if (i == 0 || i == steps)
            bucket = &ends;
        else if (i % 2)
            bucket = &odd;
        else if (i % 4 == 2)
            bucket = &even2;
        else
            bucket = &even0;
        bucket->noalias() += w * v.transpose();
        if (i < steps) v = e * v;
    }
}

int round_steps(int steps) {
    if (steps < 16) throw StructuralError("sigma_integral_matrix: steps must be >= 16");
    if (steps % 2) throw StructuralError("sigma_integral_matrix: steps must be even");
    if (steps % 4) steps += 2;
    return steps;
}

struct Piece {
    Matrix fine;
    double error;
};

Piece integrate_piece(const Model& model, const LowRankSym& lr, Matrix& v, double len, int steps) {
    const Index n = model.dim();
    Matrix ends = Matrix::Zero(n, n), odd = Matrix::Zero(n, n), e2 = Matrix::Zero(n, n), e0 = Matrix::Zero(n, n);
    const double h = len / steps;
    simpson_buckets(model, lr, v, h, steps, ends, odd, e2, e0);
    Matrix fine = (h / 3.0) * (ends + 4.0 * odd + 2.0 * (e2 + e0));
    Matrix coarse = (2.0 * h / 3.0) * (ends + 4.0 * e2 + 2.0 * e0);
    return {symmetrize(fine), max_abs(fine - coarse) / 15.0};
}

}  // namespace

SigmaIntegral sigma_integral_matrix(const Model& model, double t, int steps) {
    steps = round_steps(steps);
    const Index n = model.dim();
    SigmaMatrix s = sigma_matrix(model);
    SigmaIntegral out;
    out.time = t;
    out.steps = steps;
    out.offset = t * s.trace_D_sigma;
    if (t == 0.0) {
        out.matrix = Matrix::Zero(n, n);
        return out;
    }
    LowRankSym lr = low_rank(s.matrix);
    if (lr.rank() == 0) {
        out.matrix = Matrix::Zero(n, n);
        return out;
    }
    Matrix v = lr.factor;
    Piece p = integrate_piece(model, lr, v, t, steps);
    out.matrix = std::move(p.fine);
    out.error_estimate = p.error;
    return out;
}

SigmaIntegral sigma_integral_converged(const Model& model, double t, double tol, int start_steps) {
    SigmaIntegral prev = sigma_integral_matrix(model, t, start_steps);
    for (int level = 0; level < 14; ++level) {
        SigmaIntegral next = sigma_integral_matrix(model, t, prev.steps * 2);
        const double change = max_abs(next.matrix - prev.matrix);
        next.error_estimate = std::max(next.error_estimate, change / 15.0);
        prev = std::move(next);
        if (change < tol) break;
    }
    return prev;
}

std::vector<SigmaIntegral> sigma_integral_series(const Model& model, std::span<const double> times,
                                                 double steps_per_unit) {
    const Index n = model.dim();
    SigmaMatrix s = sigma_matrix(model);
    LowRankSym lr = low_rank(s.matrix);
    std::vector<SigmaIntegral> out;
    Matrix acc = Matrix::Zero(n, n);
    Matrix v = lr.factor;
    double err = 0.0;
    double prev = 0.0;
    for (double t : times) {
        if (std::abs(t) < std::abs(prev) || (prev != 0.0 && (t > 0.0) != (prev > 0.0)))
            throw StructuralError("sigma_integral_series: times must move monotonically away from 0");
        const double len = t - prev;
        int steps = std::max(16, static_cast<int>(std::ceil(steps_per_unit * std::abs(len))));
        steps += (4 - steps % 4) % 4;
        SigmaIntegral si;
        if (len != 0.0 && lr.rank() > 0) {
            Piece p = integrate_piece(model, lr, v, len, steps);
            acc += p.fine;
            err += p.error;
        }
        si.time = t;
        si.matrix = acc;
        si.offset = t * s.trace_D_sigma;
        si.error_estimate = err;
        si.steps = steps;
        out.push_back(std::move(si));
        prev = t;
    }
    return out;
}

LogMeanExp log_mean_exp(std::span<const double> values) {
    LogMeanExp r;
    r.count = values.size();
    if (values.empty()) return r;
    const double top = *std::max_element(values.begin(), values.end());
    std::vector<double> e(values.size()), e2(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        e[i] = std::exp(values[i] - top);
        e2[i] = e[i] * e[i];
    }
    const double nn = static_cast<double>(values.size());
    const double m1 = pairwise_sum(e) / nn;
    const double m2 = pairwise_sum(e2) / nn;
    r.estimate = std::log(m1) + top;
    if (values.size() > 1) {
        const double var = std::max(0.0, m2 - m1 * m1) * nn / (nn - 1.0);
        r.mean_ratio_error = std::sqrt(var / nn) / m1;
        r.std_error = r.mean_ratio_error;
    }
    return r;
}

MgfEstimate empirical_mgf(const Matrix& cov, const SigmaIntegral& b, double alpha, const DomainInterval& domain,
                          std::uint64_t seed, std::size_t count, const SamplerOptions& opts, bool enforce_margin) {
    if (enforce_margin) {
        const double margin = domain.bounded() ? 0.05 * domain.length() : 0.0;
        if (!(alpha > domain.lower + margin && alpha < domain.upper - margin))
            throw DomainError("empirical_mgf: alpha is not inside J_t with the required margin");
    }
    MgfEstimate out;
    out.alpha = alpha;
    out.count = count;
    if (alpha == 0.0) return out;
    const Matrix form = -alpha * b.matrix;
    auto q = quadratic_forms(cov, std::span<const Matrix>(&form, 1), seed, count, opts);
    std::vector<double>& v = q[0];
    for (double& x : v) x += alpha * b.offset;
    LogMeanExp lme = log_mean_exp(v);
    out.estimate = lme.estimate;
    out.std_error = lme.std_error;
    return out;
}

MgfEstimate empirical_mgf(const Model& model, double t, double alpha, std::uint64_t seed, std::size_t count,
                          const SamplerOptions& opts) {
    DomainInterval dom = domain_interval(model, t);
    SigmaIntegral b = sigma_integral_converged(model, t);
    return empirical_mgf(model.covariance(), b, alpha, dom, seed, count, opts);
}

double IdentityCheck::z_score() const {
    if (std_error == 0.0) return empirical == expected ? 0.0 : kInf;
    return (empirical - expected) / std_error;
}

IdentityCheck trace_identity(const Matrix& cov, const Matrix& a, std::uint64_t seed, std::size_t count,
                             const SamplerOptions& opts) {
    auto q = quadratic_forms(cov, std::span<const Matrix>(&a, 1), seed, count, opts);
    RunningStats st = RunningStats::of(q[0]);
    IdentityCheck c;
    c.empirical = st.mean;
    c.expected = cov.cwiseProduct(a.transpose()).sum();
    c.std_error = st.std_error();
    return c;
}

IdentityCheck normalization_check(const Model& model, const FlowPoint& fp, std::uint64_t seed, std::size_t count,
                                  const SamplerOptions& opts) {
    const Matrix form = -0.5 * fp.relative_T;
    auto q = quadratic_forms(model.covariance(), std::span<const Matrix>(&form, 1), seed, count, opts);
    std::vector<double>& v = q[0];
    for (double& x : v) x += fp.logdet_term;
    LogMeanExp lme = log_mean_exp(v);
    IdentityCheck c;
    c.empirical = std::exp(lme.estimate);
    c.expected = 1.0;
    c.std_error = c.empirical * lme.mean_ratio_error;
    return c;
}

std::vector<SllnPoint> slln_trajectory(const std::vector<SigmaIntegral>& series, const Matrix& cov, std::uint64_t seed) {
    const Matrix c = factor_of(cov);
    Vector z(c.cols());
    standard_normals(seed, 1, 0, std::span<double>(z.data(), static_cast<std::size_t>(z.size())));
    Vector x = c * z;
    std::vector<SllnPoint> out;
    out.reserve(series.size());
    for (const auto& b : series) {
        if (b.time == 0.0) continue;
        out.push_back({b.time, (x.dot(b.matrix * x) - b.offset) / b.time});
    }
    return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g;
    if (n <= 0) return g;
    if (n == 1) return {hi};
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < n; ++i) g.push_back(std::exp(a + (b - a) * i / (n - 1)));
    g.back() = hi;
    return g;
}

std::vector<SllnPoint> slln_trajectory(const Model& model, DomainKind measure, double horizon, std::uint64_t seed,
                                       const Matrix* d_plus, int grid_points) {
    if (!(horizon > 0.0)) throw StructuralError("slln_trajectory: horizon must be positive");
    if (measure == DomainKind::ness && !d_plus) throw StructuralError("slln_trajectory: NESS sampling needs D₊");
    std::vector<double> times = log_grid(horizon / 100.0, horizon, grid_points);
    auto series = sigma_integral_series(model, times, 400.0);
    return slln_trajectory(series, measure == DomainKind::ness ? *d_plus : model.covariance(), seed);
}

double ks_normal(std::vector<double> values, double variance) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double nn = static_cast<double>(values.size());
    const double scale = std::sqrt(2.0 * variance);
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double f = 0.5 * std::erfc(-values[i] / scale);
        d = std::max({d, (static_cast<double>(i) + 1.0) / nn - f, f - static_cast<double>(i) / nn});
    }
    return d;
}

CltResult clt_sample(const Matrix& cov, const SigmaIntegral& b, double omega_bar, double a, std::uint64_t seed,
                     std::size_t count, const SamplerOptions& opts, int bins) {
    CltResult r;
    r.count = count;
    if (!(a > 0.0)) {
        r.skipped = true;
        r.reason = "predicted variance is not positive; central limit is degenerate";
        return r;
    }
    if (b.time <= 0.0) throw StructuralError("clt_sample: needs t > 0");
    auto q = quadratic_forms(cov, std::span<const Matrix>(&b.matrix, 1), seed, count, opts);
    std::vector<double>& z = q[0];
    const double root = std::sqrt(b.time);
    for (double& x : z) x = (x - b.offset - b.time * omega_bar) / root;
    RunningStats st = RunningStats::of(z);
    r.mean = st.mean;
    r.variance = st.variance;
    r.ks = ks_normal(z, a);
    if (bins > 0 && !z.empty()) {
        auto [lo_it, hi_it] = std::minmax_element(z.begin(), z.end());
        const double lo = *lo_it, hi = *hi_it;
        const double w = (hi - lo) / bins;
        r.histogram.resize(static_cast<std::size_t>(bins));
        for (int k = 0; k < bins; ++k)
            r.histogram[static_cast<std::size_t>(k)] = {lo + k * w, k + 1 == bins ? hi : lo + (k + 1) * w, 0};
        for (double x : z) {
            int k = w > 0 ? static_cast<int>((x - lo) / w) : 0;
            k = std::clamp(k, 0, bins - 1);
            ++r.histogram[static_cast<std::size_t>(k)].count;
        }
    }
    return r;
}

void write_histogram_csv(std::ostream& os, const std::vector<HistogramBin>& bins) {
    os << "bin_lo,bin_hi,count\n";
    for (const auto& b : bins) os << fmt(b.lo) << ',' << fmt(b.hi) << ',' << b.count << '\n';
}

}  // namespace gfluct
