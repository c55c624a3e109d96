#pragma once

// Quantum sloppy baker map as a Kraus channel on N x N density matrices.
//
// Conventions: position states |n>, n = 0..N-1, are the computational basis.
// Momentum states have <n|k> = exp(2 pi i k n / N) / sqrt(N), so F_N maps
// position amplitudes to momentum amplitudes and the momentum translation
// V|k> = |k+1> is diagonal in position, V = diag(exp(2 pi i n / N)).
// Momentum index k corresponds to p = k / N; k < N/2 is the bottom half.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "numerics.hpp"

namespace sloppy_baker {

namespace state_tolerance {
inline constexpr double hermiticity = 1e-10;
inline constexpr double trace = 1e-10;
inline constexpr double positivity = 1e-10;
} // namespace state_tolerance

/// Density matrix: Hermitian, unit trace, positive semidefinite.
class QuantumState {
public:
    QuantumState() = default;

    explicit QuantumState(ComplexMatrix rho) : rho_(std::move(rho)) { validate(); }

    /// Wraps a matrix produced by a trusted CPTP operation without the O(N^3)
    /// positivity check.
    static QuantumState trusted(ComplexMatrix rho) {
        QuantumState s;
        s.rho_ = std::move(rho);
        return s;
    }

    int dim() const noexcept { return static_cast<int>(rho_.rows()); }
    const ComplexMatrix& matrix() const noexcept { return rho_; }

    double trace_error() const { return std::abs(rho_.trace() - Complex(1.0)); }
    double hermiticity_error() const { return sloppy_baker::hermiticity_error(rho_); }
    double min_eigenvalue() const { return hermitian_eig(hermitian_part()).values(0); }
    double purity() const { return (rho_ * rho_).trace().real(); }

    void validate() const {
        detail::require(rho_.rows() == rho_.cols() && rho_.rows() > 0, "state: matrix must be square and non-empty");
        detail::require(rho_.rows() % 2 == 0, "state: dimension N must be even");
        detail::require(rho_.allFinite(), "state: entries must be finite");
        detail::require(hermiticity_error() <= state_tolerance::hermiticity, "state: matrix is not Hermitian");
        detail::require(trace_error() <= state_tolerance::trace, "state: trace differs from 1");
        detail::require(min_eigenvalue() >= -state_tolerance::positivity, "state: matrix is not positive semidefinite");
    }

private:
    ComplexMatrix hermitian_part() const { return 0.5 * (rho_ + rho_.adjoint()); }

    ComplexMatrix rho_;
};

inline QuantumState maximally_mixed_state(int n) {
    detail::require(n > 0 && n % 2 == 0, "maximally_mixed_state: N must be positive and even");
    return QuantumState::trusted(ComplexMatrix::Identity(n, n) / static_cast<double>(n));
}

/// |psi><psi| of the normalized vector.
inline QuantumState pure_state(const ComplexVector& psi) {
    const double norm = psi.norm();
    detail::require(norm > 0.0 && std::isfinite(norm), "pure_state: vector must be nonzero and finite");
    const ComplexVector unit = psi / norm;
    return QuantumState::trusted(unit * unit.adjoint());
}

/// Normalized vector of independent standard complex Gaussians: a sample of
/// the unitarily invariant measure on pure states. Deterministic per seed.
inline ComplexVector random_state_vector(int n, std::uint64_t seed) {
    detail::require(n > 0, "random_state_vector: N must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    ComplexVector psi(n);
    for (int i = 0; i < n; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        psi(i) = Complex(re, im);
    }
    return psi.normalized();
}

inline QuantumState random_pure_state(int n, std::uint64_t seed) {
    detail::require(n > 0 && n % 2 == 0, "random_pure_state: N must be positive and even");
    return pure_state(random_state_vector(n, seed));
}

// ---------------------------------------------------------------------------
// Operators

namespace detail {
inline void require_even(int n, const char* who) {
    require(n >= 2 && n % 2 == 0, std::string(who) + ": N must be even and >= 2");
}
} // namespace detail

/// B = F_N^H diag(F_{N/2}, F_{N/2}).
inline ComplexMatrix balazs_voros(int n) {
    detail::require_even(n, "balazs_voros");
    ComplexMatrix blocks = ComplexMatrix::Zero(n, n);
    const ComplexMatrix half = dft_matrix(n / 2);
    blocks.topLeftCorner(n / 2, n / 2) = half;
    blocks.bottomRightCorner(n / 2, n / 2) = half;
    return dft_matrix(n).adjoint() * blocks;
}

struct MomentumProjectors {
    ComplexMatrix bottom;  // D_b, momenta k < N/2
    ComplexMatrix top;     // D_t, momenta k >= N/2
};

inline MomentumProjectors momentum_projectors(int n) {
    detail::require_even(n, "momentum_projectors");
    const ComplexMatrix f = dft_matrix(n);
    // F^H diag(1,0) F = (first N/2 rows of F)^H (first N/2 rows of F)
    const auto upper = f.topRows(n / 2);
    const auto lower = f.bottomRows(n / 2);
    return {upper.adjoint() * upper, lower.adjoint() * lower};
}

/// V^s = diag(exp(2 pi i n s / N)). Integer s gives the momentum shift
/// |k> -> |k+s>; real s is the continuation diagonal in the same basis.
inline ComplexMatrix momentum_translation_power(int n, double s) {
    detail::require(n >= 1, "momentum_translation: N must be positive");
    ComplexMatrix v = ComplexMatrix::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        double phase_units = static_cast<double>(j) * s;
        if (detail::is_integer_value(s)) {
            // exact reduction mod N for integer powers
            const auto power = static_cast<std::int64_t>(std::llround(s));
            phase_units = static_cast<double>(((static_cast<std::int64_t>(j) * power) % n + n) % n);
        }
        v(j, j) = std::polar(1.0, 2.0 * std::numbers::pi * phase_units / n);
    }
    return v;
}

inline ComplexMatrix momentum_translation(int n) { return momentum_translation_power(n, 1.0); }

/// U|n> = |n+1 mod N>.
inline ComplexMatrix position_translation(int n) {
    detail::require(n >= 1, "position_translation: N must be positive");
    ComplexMatrix u = ComplexMatrix::Zero(n, n);
    for (int j = 0; j < n; ++j) u((j + 1) % n, j) = 1.0;
    return u;
}

enum class ShiftMode {
    integer,     // N * delta / 2 must be an integer
    fractional,  // experimental: real powers of V
};

inline double momentum_shift(int n, double delta, ShiftMode mode) {
    detail::require(delta >= 0.0 && delta <= 1.0, "delta must lie in [0, 1]");
    const double shift = n * delta / 2.0;
    if (mode == ShiftMode::integer && !detail::is_integer_value(shift)) {
        throw PreconditionError("N*delta/2 = " + std::to_string(shift) +
                                " is not an integer; enable fractional shift mode to allow real momentum shifts");
    }
    return mode == ShiftMode::integer ? std::round(shift) : shift;
}

/// D'_t = V^{-N delta / 2} D_t.
inline ComplexMatrix shifted_top_projector(int n, double delta, ShiftMode mode = ShiftMode::integer) {
    detail::require_even(n, "shifted_top_projector");
    const double shift = momentum_shift(n, delta, mode);
    return momentum_translation_power(n, -shift) * momentum_projectors(n).top;
}

// ---------------------------------------------------------------------------
// Channels

/// Finite Kraus family with sum_i A_i^H A_i = 1 to 1e-10.
class KrausChannel {
public:
    static constexpr double completeness_tolerance = 1e-10;

    explicit KrausChannel(std::vector<ComplexMatrix> operators) : operators_(std::move(operators)) {
        detail::require(!operators_.empty(), "channel: needs at least one Kraus operator");
        const auto n = operators_.front().rows();
        detail::require(n > 0, "channel: operators must be non-empty");
        for (const auto& a : operators_) {
            detail::require(a.rows() == n && a.cols() == n, "channel: Kraus operators must share one square shape");
            detail::require(a.allFinite(), "channel: Kraus operators must be finite");
        }
        const double residual = completeness_residual();
        detail::require(residual <= completeness_tolerance,
                        "channel: Kraus operators are not trace preserving (residual " + std::to_string(residual) + ")");
    }

    int dim() const noexcept { return static_cast<int>(operators_.front().rows()); }
    std::size_t size() const noexcept { return operators_.size(); }
    const std::vector<ComplexMatrix>& operators() const noexcept { return operators_; }

    double completeness_residual() const {
        const auto n = operators_.front().rows();
        ComplexMatrix sum = ComplexMatrix::Zero(n, n);
        for (const auto& a : operators_) sum.noalias() += a.adjoint() * a;
        return max_abs(sum - ComplexMatrix::Identity(n, n));
    }

private:
    std::vector<ComplexMatrix> operators_;
};

inline KrausChannel identity_channel(int n) { return KrausChannel({ComplexMatrix::Identity(n, n)}); }

inline KrausChannel unitary_channel(const ComplexMatrix& u) { return KrausChannel({u}); }

/// {D_b, D_t}: the up/down momentum measurement.
inline KrausChannel measurement_channel(int n) {
    auto [bottom, top] = momentum_projectors(n);
    return KrausChannel({std::move(bottom), std::move(top)});
}

/// {D_b, D'_t}: measurement followed by shifting the top half down by delta/2.
inline KrausChannel shift_channel(int n, double delta, ShiftMode mode = ShiftMode::integer) {
    auto projectors = momentum_projectors(n);
    const double shift = momentum_shift(n, delta, mode);
    ComplexMatrix shifted_top = momentum_translation_power(n, -shift) * projectors.top;
    return KrausChannel({std::move(projectors.bottom), std::move(shifted_top)});
}

/// The quantum sloppy baker map {D_b B, D'_t B}.
inline KrausChannel sloppy_channel(int n, double delta, ShiftMode mode = ShiftMode::integer) {
    const ComplexMatrix b = balazs_voros(n);
    const KrausChannel shift = shift_channel(n, delta, mode);
    return KrausChannel({shift.operators()[0] * b, shift.operators()[1] * b});
}

/// sum_i A_i rho A_i^H, never forming the superoperator.
inline QuantumState apply_channel(const KrausChannel& channel, const QuantumState& state) {
    detail::require(channel.dim() == state.dim(), "apply_channel: dimension mismatch");
    const auto n = state.dim();
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    ComplexMatrix tmp(n, n);
    for (const auto& a : channel.operators()) {
        tmp.noalias() = a * state.matrix();
        out.noalias() += tmp * a.adjoint();
    }
    return QuantumState::trusted(std::move(out));
}

inline QuantumState evolve(const KrausChannel& channel, QuantumState state, int steps) {
    detail::require(steps >= 0, "evolve: steps must be nonnegative");
    for (int t = 0; t < steps; ++t) state = apply_channel(channel, state);
    return state;
}

/// S = -sum lambda ln lambda in nats, with 0 ln 0 = 0.
inline double von_neumann_entropy(const QuantumState& state) {
    const ComplexMatrix h = 0.5 * (state.matrix() + state.matrix().adjoint());
    detail::require(state.hermiticity_error() <= state_tolerance::hermiticity,
                    "von_neumann_entropy: state is not Hermitian");
    const RealVector values = hermitian_eig(h).values;
    if (values(0) < -state_tolerance::positivity) {
        throw NumericalError("von_neumann_entropy: eigenvalue " + std::to_string(values(0)) +
                             " violates positivity");
    }
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const double lambda = std::clamp(values(i), 0.0, 1.0);
        if (lambda > 0.0) entropy -= lambda * std::log(lambda);
    }
    return entropy;
}

} // namespace sloppy_baker
