#pragma once

// Coherent-state lattice on the quantum torus, Husimi maps and the quantum
// return probability.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "classical.hpp"
#include "quantum.hpp"

namespace sloppy_baker {

/// Integer lattice coordinates (Nq, Np).
struct LatticeIndex {
    int q = 0;
    int p = 0;
    friend bool operator==(const LatticeIndex&, const LatticeIndex&) = default;
};

/// Euclidean distance in lattice units on the N x N torus.
inline double lattice_distance(LatticeIndex a, LatticeIndex b, int n) {
    auto circular = [n](int x, int y) {
        const int d = ((x - y) % n + n) % n;
        return std::min(d, n - d);
    };
    return std::hypot(circular(a.q, b.q), circular(a.p, b.p));
}

inline LatticeIndex nearest_lattice_index(const PhasePoint& x, int n) {
    auto snap = [n](double v) {
        const long k = std::lround(v * n);
        return static_cast<int>(((k % n) + n) % n);
    };
    return {snap(x.q), snap(x.p)};
}

/// The N x N family |q,p> = V^{Np - N/2} U^{Nq - N/2} |1/2,1/2> with the
/// reference packet <n|1/2,1/2> ~ exp(-pi (n - N/2)^2 / N - i pi n),
/// normalized numerically (single winding, no periodization).
class CoherentFrame {
public:
    explicit CoherentFrame(int n) : n_(n), reference_(n) {
        detail::require(n >= 2 && n % 2 == 0, "CoherentFrame: N must be even and >= 2");
        for (int j = 0; j < n; ++j) {
            const double x = j - n / 2.0;
            const double amplitude = std::exp(-std::numbers::pi * x * x / n);
            reference_(j) = amplitude * ((j % 2 == 0) ? 1.0 : -1.0);  // exp(-i pi n)
        }
        reference_.normalize();
        phases_.resize(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) phases_[static_cast<std::size_t>(k)] = std::polar(1.0, 2.0 * std::numbers::pi * k / n);
    }

    int dim() const noexcept { return n_; }
    const ComplexVector& reference() const noexcept { return reference_; }

    /// U^{shift} applied to the reference packet.
    ComplexVector position_shifted(int q_index) const {
        const int shift = q_index - n_ / 2;
        ComplexVector x(n_);
        for (int j = 0; j < n_; ++j) x(j) = reference_(wrap(j - shift));
        return x;
    }

    ComplexVector state(LatticeIndex index) const {
        detail::require(index.q >= 0 && index.q < n_ && index.p >= 0 && index.p < n_,
                        "CoherentFrame: lattice index out of range");
        ComplexVector x = position_shifted(index.q);
        const int c = index.p - n_ / 2;
        for (int j = 0; j < n_; ++j) x(j) *= phase(static_cast<long>(c) * j);
        return x;
    }

    /// Coherent state at (q, p); Nq and Np must be integers in [0, N).
    ComplexVector state_at(double q, double p) const {
        const double nq = q * n_, np = p * n_;
        detail::require(detail::is_integer_value(nq, 1e-9) && detail::is_integer_value(np, 1e-9),
                        "CoherentFrame: (q, p) is not on the N x N lattice");
        const long iq = std::lround(nq), ip = std::lround(np);
        detail::require(iq >= 0 && iq < n_ && ip >= 0 && ip < n_, "CoherentFrame: (q, p) outside [0, 1)^2");
        return state({static_cast<int>(iq), static_cast<int>(ip)});
    }

    /// exp(2 pi i k / N) for any integer k.
    Complex phase(long k) const { return phases_[static_cast<std::size_t>(wrap(k))]; }

private:
    int wrap(long k) const { return static_cast<int>(((k % n_) + n_) % n_); }

    int n_;
    ComplexVector reference_;
    std::vector<Complex> phases_;
};

/// Real values on (a subset of) the coherent-state lattice. values(r, c)
/// belongs to lattice point (q_indices[r], p_indices[c]).
struct HusimiGrid {
    int n = 0;
    std::vector<int> q_indices;
    std::vector<int> p_indices;
    RealMatrix values;

    static HusimiGrid full(int n) {
        HusimiGrid g;
        g.n = n;
        g.q_indices.resize(static_cast<std::size_t>(n));
        g.p_indices.resize(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) g.q_indices[static_cast<std::size_t>(k)] = g.p_indices[static_cast<std::size_t>(k)] = k;
        g.values = RealMatrix::Zero(n, n);
        return g;
    }

    bool is_full() const {
        return static_cast<int>(q_indices.size()) == n && static_cast<int>(p_indices.size()) == n;
    }

    double total() const { return values.sum(); }

    LatticeIndex argmax() const {
        Eigen::Index r = 0, c = 0;
        values.maxCoeff(&r, &c);
        return {q_indices[static_cast<std::size_t>(r)], p_indices[static_cast<std::size_t>(c)]};
    }

    /// Fraction of the total weight on lattice points with p = Np/N > p_min.
    double mass_fraction_above(double p_min) const {
        double above = 0.0;
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            if (static_cast<double>(p_indices[static_cast<std::size_t>(c)]) / n > p_min) above += values.col(c).sum();
        }
        return above / total();
    }

    double median() const {
        std::vector<double> v(values.data(), values.data() + values.size());
        const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        std::nth_element(v.begin(), mid, v.end());
        if (v.size() % 2 == 1) return *mid;
        const double upper = *mid;
        const double lower = *std::max_element(v.begin(), mid);
        return 0.5 * (lower + upper);
    }

    /// Value at a lattice point, if sampled.
    std::optional<double> at(LatticeIndex index) const {
        const auto qi = std::find(q_indices.begin(), q_indices.end(), index.q);
        const auto pi = std::find(p_indices.begin(), p_indices.end(), index.p);
        if (qi == q_indices.end() || pi == p_indices.end()) return std::nullopt;
        return values(qi - q_indices.begin(), pi - p_indices.begin());
    }
};

/// H(q,p) = <q,p| rho |q,p> on the full lattice. For each q row the N
/// momentum values are one length-N Fourier sum of the diagonal-wise
/// collapsed matrix conj(x_m) rho_{m,n} x_n, so the grid costs O(N^3).
inline HusimiGrid husimi(const QuantumState& state, const CoherentFrame& frame) {
    const int n = frame.dim();
    detail::require(state.dim() == n, "husimi: state and frame dimensions differ");
    HusimiGrid grid = HusimiGrid::full(n);
    const ComplexMatrix& rho = state.matrix();
    parallel_for(n, [&](std::int64_t a) {
        const ComplexVector x = frame.position_shifted(static_cast<int>(a));
        // diagonal sums w(d) = sum_m conj(x_m) rho(m, m-d) x_{m-d}
        std::vector<Complex> w(static_cast<std::size_t>(n), Complex(0.0));
        for (int col = 0; col < n; ++col) {
            const Complex xc = x(col);
            for (int row = 0; row < n; ++row) {
                const int d = (row - col + n) % n;
                w[static_cast<std::size_t>(d)] += std::conj(x(row)) * rho(row, col) * xc;
            }
        }
        for (int b = 0; b < n; ++b) {
            const long c = b - n / 2;
            Complex acc = 0.0;
            for (int d = 0; d < n; ++d) acc += w[static_cast<std::size_t>(d)] * frame.phase(-c * d);
            grid.values(a, b) = acc.real();
        }
    });
    return grid;
}

/// Reference evaluation with one matrix-vector product per lattice point.
inline HusimiGrid husimi_direct(const QuantumState& state, const CoherentFrame& frame) {
    const int n = frame.dim();
    detail::require(state.dim() == n, "husimi_direct: state and frame dimensions differ");
    HusimiGrid grid = HusimiGrid::full(n);
    parallel_for(static_cast<std::int64_t>(n) * n, [&](std::int64_t k) {
        const int a = static_cast<int>(k / n), b = static_cast<int>(k % n);
        const ComplexVector psi = frame.state({a, b});
        grid.values(a, b) = psi.dot(state.matrix() * psi).real();
    });
    return grid;
}

// ---------------------------------------------------------------------------
// Return probability

struct LatticeWindow {
    int stride = 1;
    int q_begin = 0, q_end = -1;  // half-open index range, -1 = N
    int p_begin = 0, p_end = -1;
};

/// <psi| Lambda^T(|psi><psi|) |psi>. While the Kraus branching keeps the
/// ensemble below N vectors the state is carried as {A_{i_T}...A_{i_1} psi};
/// afterwards as a density matrix.
inline double return_probability_at(const KrausChannel& channel, const ComplexVector& psi, int steps) {
    detail::require(steps >= 0, "return_probability: T must be nonnegative");
    const int n = channel.dim();
    std::vector<ComplexVector> ensemble{psi};
    int t = 0;
    for (; t < steps; ++t) {
        if (ensemble.size() * channel.size() > static_cast<std::size_t>(n)) break;
        std::vector<ComplexVector> next;
        next.reserve(ensemble.size() * channel.size());
        for (const auto& w : ensemble) {
            for (const auto& a : channel.operators()) next.push_back(a * w);
        }
        ensemble = std::move(next);
    }
    if (t == steps) {
        double r = 0.0;
        for (const auto& w : ensemble) r += std::norm(psi.dot(w));
        return r;
    }
    ComplexMatrix rho = ComplexMatrix::Zero(n, n);
    for (const auto& w : ensemble) rho.noalias() += w * w.adjoint();
    QuantumState state = evolve(channel, QuantumState::trusted(std::move(rho)), steps - t);
    return psi.dot(state.matrix() * psi).real();
}

/// R^T(q,p) = <q,p| Lambda^T(|q,p><q,p|) |q,p> over the (windowed, strided) lattice.
inline HusimiGrid return_probability(const KrausChannel& channel, int steps, const CoherentFrame& frame,
                                     const LatticeWindow& window = {}) {
    const int n = frame.dim();
    detail::require(channel.dim() == n, "return_probability: channel and frame dimensions differ");
    detail::require(steps >= 1, "return_probability: T must be >= 1");
    detail::require(window.stride >= 1, "return_probability: stride must be >= 1");
    auto indices = [&](int begin, int end) {
        if (end < 0) end = n;
        detail::require(begin >= 0 && begin < end && end <= n, "return_probability: invalid lattice window");
        std::vector<int> out;
        for (int k = begin; k < end; k += window.stride) out.push_back(k);
        return out;
    };
    HusimiGrid grid;
    grid.n = n;
    grid.q_indices = indices(window.q_begin, window.q_end);
    grid.p_indices = indices(window.p_begin, window.p_end);
    const auto rows = static_cast<std::int64_t>(grid.q_indices.size());
    const auto cols = static_cast<std::int64_t>(grid.p_indices.size());
    grid.values = RealMatrix::Zero(rows, cols);
    parallel_for(rows * cols, [&](std::int64_t k) {
        const auto r = k / cols, c = k % cols;
        const ComplexVector psi = frame.state({grid.q_indices[static_cast<std::size_t>(r)],
                                               grid.p_indices[static_cast<std::size_t>(c)]});
        grid.values(r, c) = return_probability_at(channel, psi, steps);
    });
    return grid;
}

inline HusimiGrid return_probability(int n, double delta, int steps, const CoherentFrame& frame,
                                     const LatticeWindow& window = {}) {
    return return_probability(sloppy_channel(n, delta), steps, frame, window);
}

struct Peak {
    LatticeIndex index;
    double value = 0.0;
};

/// Points not smaller than any of their 8 periodic neighbours and larger
/// than at least one, by descending value. Requires a full grid.
inline std::vector<Peak> lattice_peaks(const HusimiGrid& grid) {
    detail::require(grid.is_full(), "lattice_peaks: needs a full lattice grid");
    const int n = grid.n;
    std::vector<Peak> peaks;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            const double v = grid.values(a, b);
            bool is_peak = true;
            bool above_some = false;
            for (int da = -1; da <= 1 && is_peak; ++da) {
                for (int db = -1; db <= 1; ++db) {
                    if (da == 0 && db == 0) continue;
                    const double w = grid.values((a + da + n) % n, (b + db + n) % n);
                    if (w > v) {
                        is_peak = false;
                        break;
                    }
                    if (w < v) above_some = true;
                }
            }
            is_peak = is_peak && above_some;
            if (is_peak) peaks.push_back({{a, b}, v});
        }
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& x, const Peak& y) { return x.value > y.value; });
    return peaks;
}

} // namespace sloppy_baker
