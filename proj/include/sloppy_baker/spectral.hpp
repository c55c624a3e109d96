#pragma once

// Superoperator representations of Kraus channels and their spectral
// analysis: full spectra, leading eigenvalues, invariant states,
// defectiveness diagnostics and entropy growth.
//
// Vectorization is column stacking, vec(rho)[i + N j] = rho(i, j), so that
// vec(A rho A^H) = (conj(A) (x) A) vec(rho) and the superoperator of a
// channel is sum_i conj(A_i) (x) A_i.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quantum.hpp"

namespace sloppy_baker {

struct SuperoperatorMatrix {
    int n = 0;             // Hilbert-space dimension
    ComplexMatrix matrix;  // N^2 x N^2
};

inline ComplexVector vectorize(const ComplexMatrix& rho) {
    return Eigen::Map<const ComplexVector>(rho.data(), rho.size());
}

inline ComplexMatrix unvectorize(const ComplexVector& v, int n) {
    detail::require(v.size() == static_cast<Eigen::Index>(n) * n, "unvectorize: length must be N^2");
    return Eigen::Map<const ComplexMatrix>(v.data(), n, n);
}

struct SuperoperatorOptions {
    int max_dim = 48;  // refuse larger N unless allow_large is set
    bool allow_large = false;
};

inline SuperoperatorMatrix superoperator_matrix(const KrausChannel& channel, const SuperoperatorOptions& options = {}) {
    const int n = channel.dim();
    if (n > options.max_dim && !options.allow_large) {
        throw PreconditionError("superoperator_matrix: N = " + std::to_string(n) + " exceeds the dense bound " +
                                std::to_string(options.max_dim) + "; pass the override to build it anyway");
    }
    const Eigen::Index dim = static_cast<Eigen::Index>(n) * n;
    ComplexMatrix s = ComplexMatrix::Zero(dim, dim);
    for (const auto& a : channel.operators()) {
        // block (j, l) of conj(A) (x) A is conj(A(j, l)) * A
        for (int j = 0; j < n; ++j) {
            for (int l = 0; l < n; ++l) {
                s.block(static_cast<Eigen::Index>(j) * n, static_cast<Eigen::Index>(l) * n, n, n) += std::conj(a(j, l)) * a;
            }
        }
    }
    return {n, std::move(s)};
}

inline ComplexMatrix apply_superoperator(const SuperoperatorMatrix& s, const ComplexMatrix& rho) {
    return unvectorize(s.matrix * vectorize(rho), s.n);
}

/// The channel as a matrix-free operator on vec(rho).
inline LinearOperator channel_operator(const KrausChannel& channel) {
    const int n = channel.dim();
    return {static_cast<Eigen::Index>(n) * n, [channel, n](const ComplexVector& v) -> ComplexVector {
                const ComplexMatrix x = unvectorize(v, n);
                ComplexMatrix out = ComplexMatrix::Zero(n, n);
                for (const auto& a : channel.operators()) out.noalias() += a * x * a.adjoint();
                return vectorize(out);
            }};
}

// ---------------------------------------------------------------------------
// Spectra

inline constexpr double zero_eigenvalue_threshold = 1e-8;

struct DefectReport {
    int algebraic = 0;
    int geometric = 0;
    bool defective = false;
    int rank = 0;             // rank of M - lambda
    double rank_threshold = 0.0;
};

struct SpectralReport {
    int n = 0;
    bool dense = true;                 // false: only leading eigenvalues available
    std::vector<Complex> eigenvalues;  // descending modulus
    Complex lambda1;
    double lambda2_modulus = 0.0;
    double gap = 0.0;
    int zero_multiplicity = 0;
    std::optional<DefectReport> zero_defect;
};

/// Number of values within `radius` of `lambda`.
inline int count_near(const std::vector<Complex>& values, Complex lambda, double radius) {
    return static_cast<int>(std::count_if(values.begin(), values.end(),
                                          [&](const Complex& v) { return std::abs(v - lambda) < radius; }));
}

/// Jordan-structure probe of `lambda`: the geometric multiplicity is the
/// nullity of M - lambda (rank threshold 1e-8 sigma_max), the algebraic
/// multiplicity the dimension of the generalized eigenspace found by
/// deflate_eigenvalue.
inline DefectReport defectiveness_probe(const ComplexMatrix& m, Complex lambda) {
    const EigenvalueDeflation d = deflate_eigenvalue(m, lambda);
    DefectReport report;
    report.algebraic = d.algebraic;
    report.geometric = d.geometric;
    report.defective = report.geometric < report.algebraic;
    report.rank = static_cast<int>(m.rows()) - d.geometric;
    report.rank_threshold = d.rank_threshold;
    return report;
}

inline DefectReport defectiveness_probe(const KrausChannel& channel, Complex lambda,
                                        const SuperoperatorOptions& options = {}) {
    return defectiveness_probe(superoperator_matrix(channel, options).matrix, lambda);
}

struct SpectrumOptions {
    SuperoperatorOptions superoperator{};
    bool deflate_zero = true;        // dense path: resolve the zero eigenvalue by rank decisions
    int leading_count = 10;          // iterative path
    int max_restarts = 500;
    double tolerance = 1e-10;
};

inline SpectralReport make_report(int n, std::vector<Complex> eigenvalues, bool dense) {
    SpectralReport report;
    report.n = n;
    report.dense = dense;
    report.eigenvalues = std::move(eigenvalues);
    report.lambda1 = report.eigenvalues.front();
    report.lambda2_modulus = report.eigenvalues.size() > 1 ? std::abs(report.eigenvalues[1]) : 0.0;
    report.gap = 1.0 - report.lambda2_modulus;
    report.zero_multiplicity = count_near(report.eigenvalues, 0.0, zero_eigenvalue_threshold);
    return report;
}

/// Dense spectrum when N fits the superoperator bound, otherwise the leading
/// eigenvalues from the matrix-free Arnoldi solver. On the dense path the
/// (typically defective) zero eigenvalue is deflated first, so its algebraic
/// multiplicity appears as exact zeros and `zero_defect` holds its Jordan
/// structure.
inline SpectralReport channel_spectrum(const KrausChannel& channel, const SpectrumOptions& options = {}) {
    const int n = channel.dim();
    if (n <= options.superoperator.max_dim || options.superoperator.allow_large) {
        const SuperoperatorMatrix s = superoperator_matrix(channel, options.superoperator);
        if (!options.deflate_zero) return make_report(n, general_eig(s.matrix), true);
        EigenvalueDeflation zeros;
        SpectralReport report = make_report(n, general_eig_deflated(s.matrix, 0.0, &zeros), true);
        if (zeros.algebraic > 0) {
            report.zero_defect = DefectReport{zeros.algebraic, zeros.geometric, zeros.geometric < zeros.algebraic,
                                              static_cast<int>(s.matrix.rows()) - zeros.geometric,
                                              zeros.rank_threshold};
        }
        return report;
    }
    const int k = std::min<int>(options.leading_count, n * n);
    return make_report(n, leading_eigs(channel_operator(channel), k, options.max_restarts, options.tolerance), false);
}

// ---------------------------------------------------------------------------
// Invariant state

struct InvariantStateResult {
    QuantumState state;
    int iterations = 0;
    double residual = 0.0;  // max |rho_{k+1} - rho_k|
};

/// Power iteration of the channel from the maximally mixed state until
/// successive iterates differ by at most tol in max-entry norm.
inline InvariantStateResult invariant_state(const KrausChannel& channel, double tol = 1e-12, int max_iter = 100000) {
    detail::require(tol > 0.0 && max_iter >= 1, "invariant_state: tol and max_iter must be positive");
    QuantumState current = maximally_mixed_state(channel.dim());
    double residual = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= max_iter; ++k) {
        QuantumState next = apply_channel(channel, current);
        residual = max_abs(next.matrix() - current.matrix());
        current = std::move(next);
        if (residual <= tol) return {std::move(current), k, residual};
    }
    throw ConvergenceError("invariant_state: power iteration did not converge in " + std::to_string(max_iter) +
                               " steps",
                           residual);
}

/// Fixed point from the explicit superoperator: solves (S - 1) vec(rho) = 0
/// with the (0,0) equation replaced by tr(rho) = 1. Requires a simple
/// eigenvalue 1.
inline QuantumState invariant_state_from_superoperator(const KrausChannel& channel,
                                                       const SuperoperatorOptions& options = {}) {
    const int n = channel.dim();
    const SuperoperatorMatrix s = superoperator_matrix(channel, options);
    const Eigen::Index dim = s.matrix.rows();
    ComplexMatrix system = s.matrix - ComplexMatrix::Identity(dim, dim);
    system.row(0).setZero();
    for (int i = 0; i < n; ++i) system(0, static_cast<Eigen::Index>(i) * n + i) = 1.0;
    ComplexVector rhs = ComplexVector::Zero(dim);
    rhs(0) = 1.0;
    const ComplexVector solution = system.partialPivLu().solve(rhs);
    ComplexMatrix rho = unvectorize(solution, n);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return QuantumState::trusted(std::move(rho));
}

// ---------------------------------------------------------------------------
// Entropy growth

struct EntropyCurve {
    int n = 0;
    double delta = 0.0;
    int samples = 0;
    std::uint64_t seed = 0;
    std::vector<int> times;
    std::vector<double> mean;
    std::vector<double> stddev;
    double slope = 0.0;
    double intercept = 0.0;
    int window_end = 1;  // fit used T in [1, window_end]

    double final_mean() const { return mean.back(); }
};

namespace detail {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
};

inline LineFit fit_line(const std::vector<int>& x, const std::vector<double>& y, std::size_t first, std::size_t last) {
    const double count = static_cast<double>(last - first + 1);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = first; i <= last; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += static_cast<double>(x[i]) * x[i];
        sxy += x[i] * y[i];
    }
    LineFit fit;
    const double denom = count * sxx - sx * sx;
    fit.slope = denom != 0.0 ? (count * sxy - sx * sy) / denom : 0.0;
    fit.intercept = (sy - fit.slope * sx) / count;
    for (std::size_t i = first; i <= last; ++i) {
        fit.max_residual = std::max(fit.max_residual, std::abs(y[i] - (fit.slope * x[i] + fit.intercept)));
    }
    return fit;
}

} // namespace detail

/// Mean von Neumann entropy of `samples` random pure states (seeds seed + s)
/// evolved T = 0..t_max steps. The initial slope is a least-squares line over
/// T in [1, T_lin], T_lin the largest T whose fit residuals all stay below 5%
/// of the curve's range.
inline EntropyCurve entropy_curve(int n, double delta, int t_max, int samples, std::uint64_t seed,
                                  ShiftMode mode = ShiftMode::integer) {
    detail::require(n >= 2 && n % 2 == 0, "entropy_curve: N must be even");
    detail::require(samples >= 1, "entropy_curve: samples must be >= 1");
    detail::require(t_max >= 1, "entropy_curve: T_max must be >= 1");
    const KrausChannel channel = sloppy_channel(n, delta, mode);

    std::vector<std::vector<double>> per_sample(static_cast<std::size_t>(samples));
    parallel_for(samples, [&](std::int64_t s) {
        auto& row = per_sample[static_cast<std::size_t>(s)];
        row.reserve(static_cast<std::size_t>(t_max) + 1);
        QuantumState state = random_pure_state(n, seed + static_cast<std::uint64_t>(s));
        row.push_back(von_neumann_entropy(state));
        for (int t = 1; t <= t_max; ++t) {
            state = apply_channel(channel, state);
            row.push_back(von_neumann_entropy(state));
        }
    });

    EntropyCurve curve;
    curve.n = n;
    curve.delta = delta;
    curve.samples = samples;
    curve.seed = seed;
    for (int t = 0; t <= t_max; ++t) {
        double sum = 0.0;
        for (const auto& row : per_sample) sum += row[static_cast<std::size_t>(t)];
        const double mean = sum / samples;
        double var = 0.0;
        for (const auto& row : per_sample) var += (row[static_cast<std::size_t>(t)] - mean) * (row[static_cast<std::size_t>(t)] - mean);
        curve.times.push_back(t);
        curve.mean.push_back(mean);
        curve.stddev.push_back(samples > 1 ? std::sqrt(var / (samples - 1)) : 0.0);
    }

    const auto [lo, hi] = std::minmax_element(curve.mean.begin(), curve.mean.end());
    const double limit = 0.05 * (*hi - *lo);
    std::size_t window = std::min<std::size_t>(2, static_cast<std::size_t>(t_max));
    for (std::size_t last = 2; last <= static_cast<std::size_t>(t_max); ++last) {
        if (detail::fit_line(curve.times, curve.mean, 1, last).max_residual <= limit) window = last;
    }
    const auto fit = detail::fit_line(curve.times, curve.mean, 1, window);
    curve.slope = fit.slope;
    curve.intercept = fit.intercept;
    curve.window_end = static_cast<int>(window);
    return curve;
}

} // namespace sloppy_baker
