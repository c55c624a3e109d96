#pragma once

// Dense complex linear algebra used throughout the toolkit: DFT matrices,
// Hermitian and general eigenvalue problems, deterministic spectrum ordering
// and a restarted Arnoldi (Krylov-Schur) solver for matrix-free operators.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "lapack.hpp"

namespace sloppy_baker {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

namespace tolerance {
inline constexpr double hermiticity = 1e-10;
inline constexpr double unitarity = 1e-10;
inline constexpr double spectral_residual = 1e-8;
} // namespace tolerance

/// Largest entry modulus, the norm used by every tolerance gate.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().maxCoeff();
}

inline double hermiticity_error(const ComplexMatrix& m) {
    return max_abs(m - m.adjoint());
}

inline double unitarity_error(const ComplexMatrix& m) {
    return max_abs(m.adjoint() * m - ComplexMatrix::Identity(m.rows(), m.cols()));
}

// ---------------------------------------------------------------------------
// Threading

/// Worker count: SLOPPY_BAKER_THREADS if set and positive, otherwise the
/// hardware concurrency.
inline unsigned thread_count() {
    if (const char* env = std::getenv("SLOPPY_BAKER_THREADS")) {
        const long requested = std::strtol(env, nullptr, 10);
        if (requested > 0) return static_cast<unsigned>(requested);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count). Each index is processed exactly once and
/// bodies must only write to index-private output, so results do not depend
/// on the thread count.
template <typename Body>
void parallel_for(std::int64_t count, Body&& body) {
    const auto workers = static_cast<std::int64_t>(std::min<std::int64_t>(thread_count(), count));
    if (workers <= 1) {
        for (std::int64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (std::int64_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::int64_t i = w; i < count; i += workers) body(i);
                } catch (...) {
                    const std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Fourier matrices

/// Unitary DFT matrix with entries exp(-2*pi*i*k*l/N)/sqrt(N).
inline ComplexMatrix dft_matrix(int n) {
    detail::require(n >= 1, "dft_matrix: N must be positive");
    ComplexMatrix f(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
            // reduce k*l mod N before the trig call to keep phases exact
            const auto kl = static_cast<std::int64_t>(k) * l % n;
            const double phase = -2.0 * std::numbers::pi * static_cast<double>(kl) / n;
            f(k, l) = std::polar(scale, phase);
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// Eigenvalue problems

struct HermitianEigen {
    RealVector values;      // ascending
    ComplexMatrix vectors;  // orthonormal columns
};

inline HermitianEigen hermitian_eig(const ComplexMatrix& m) {
    detail::require(m.rows() == m.cols(), "hermitian_eig: matrix must be square");
    const double err = hermiticity_error(m);
    detail::require(err <= tolerance::hermiticity,
                    "hermitian_eig: matrix is not Hermitian (max |M - M^H| = " +
                        std::to_string(err) + ")");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m);
    if (solver.info() != Eigen::Success) throw NumericalError("hermitian_eig: solver failed");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Sorts by descending modulus. Values whose moduli agree to within
/// `tie_tolerance` (relative to the largest modulus) form a tie group that is
/// ordered by descending real part, then descending imaginary part.
inline void sort_spectrum(std::vector<Complex>& values, double tie_tolerance = 1e-9) {
    std::sort(values.begin(), values.end(), [](const Complex& a, const Complex& b) {
        const double ma = std::abs(a), mb = std::abs(b);
        if (ma != mb) return ma > mb;
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    if (values.empty()) return;
    const double scale = std::max(1.0, std::abs(values.front()));
    const double gap = tie_tolerance * scale;
    std::size_t start = 0;
    while (start < values.size()) {
        std::size_t end = start + 1;
        while (end < values.size() && std::abs(values[end - 1]) - std::abs(values[end]) <= gap) ++end;
        std::sort(values.begin() + static_cast<std::ptrdiff_t>(start),
                  values.begin() + static_cast<std::ptrdiff_t>(end),
                  [gap](const Complex& a, const Complex& b) {
                      if (std::abs(a.real() - b.real()) > gap) return a.real() > b.real();
                      return a.imag() > b.imag();
                  });
        start = end;
    }
}

/// All eigenvalues of a square matrix, algebraic multiplicity counted, in
/// sort_spectrum order.
inline std::vector<Complex> general_eig(const ComplexMatrix& m) {
    detail::require(m.rows() == m.cols(), "general_eig: matrix must be square");
    if (m.rows() == 0) return {};
    const ComplexVector w = lapack::eigenvalues(m);
    std::vector<Complex> values(w.data(), w.data() + w.size());
    sort_spectrum(values);
    return values;
}

/// Jordan structure of one eigenvalue from a sequence of rank decisions.
struct EigenvalueDeflation {
    Complex lambda;
    int algebraic = 0;            // sum of nullities
    int geometric = 0;            // first nullity
    std::vector<int> nullities;   // per deflation step
    double rank_threshold = 0.0;
    ComplexMatrix remainder;      // (M - lambda) restricted to a complement of the generalized eigenspace
};

/// Repeatedly splits off the numerical null space of A = M - lambda: with
/// Z spanning ker A and W its orthogonal complement, A is block upper
/// triangular in [Z W] with a zero leading block, so the search continues on
/// W^H A W. Singular values at or below rel_threshold * sigma_max(M - lambda)
/// count as zero. The nullities give the Jordan structure of lambda, and
/// eigenvalues of `remainder` + lambda are the rest of the spectrum.
inline EigenvalueDeflation deflate_eigenvalue(const ComplexMatrix& m, Complex lambda, double rel_threshold = 1e-8) {
    detail::require(m.rows() == m.cols(), "deflate_eigenvalue: matrix must be square");
    EigenvalueDeflation out;
    out.lambda = lambda;
    ComplexMatrix a = m - lambda * ComplexMatrix::Identity(m.rows(), m.cols());
    bool first = true;
    while (a.rows() > 0) {
        const lapack::Svd svd = lapack::svd(a);
        const RealVector& sigma = svd.singular_values;
        if (first) {
            out.rank_threshold = rel_threshold * (sigma.size() > 0 ? sigma(0) : 0.0);
            first = false;
        }
        const auto rank = static_cast<Eigen::Index>((sigma.array() > out.rank_threshold).count());
        const Eigen::Index nullity = a.rows() - rank;
        if (nullity == 0) break;
        out.nullities.push_back(static_cast<int>(nullity));
        out.algebraic += static_cast<int>(nullity);
        // singular values are descending, so the trailing columns of V span the null space
        const ComplexMatrix w = svd.v.leftCols(rank);
        a = (w.adjoint() * a * w).eval();
    }
    out.geometric = out.nullities.empty() ? 0 : out.nullities.front();
    out.remainder = std::move(a);
    return out;
}

/// Spectrum with the eigenvalue `lambda` resolved by deflate_eigenvalue: its
/// algebraic multiplicity is reported as exact copies of lambda instead of the
/// O(eps^{1/k}) cluster a dense QR iteration produces for Jordan blocks of
/// size k.
inline std::vector<Complex> general_eig_deflated(const ComplexMatrix& m, Complex lambda,
                                                 EigenvalueDeflation* deflation = nullptr) {
    EigenvalueDeflation d = deflate_eigenvalue(m, lambda);
    std::vector<Complex> values(static_cast<std::size_t>(d.algebraic), lambda);
    if (d.remainder.rows() > 0) {
        for (const Complex& v : general_eig(d.remainder)) values.push_back(v + lambda);
    }
    sort_spectrum(values);
    if (deflation != nullptr) *deflation = std::move(d);
    return values;
}

// ---------------------------------------------------------------------------
// Matrix-free operators

struct LinearOperator {
    Eigen::Index dimension = 0;
    std::function<ComplexVector(const ComplexVector&)> apply;
};

inline LinearOperator as_operator(const ComplexMatrix& m) {
    return {m.rows(), [&m](const ComplexVector& x) -> ComplexVector { return m * x; }};
}

namespace detail {

/// Plane rotation [c s; -conj(s) c] mapping (f, g) to (r, 0), c real.
inline void complex_givens(Complex f, Complex g, double& c, Complex& s) {
    if (g == Complex(0.0)) {
        c = 1.0;
        s = 0.0;
        return;
    }
    if (f == Complex(0.0)) {
        c = 0.0;
        s = std::conj(g) / std::abs(g);
        return;
    }
    const double fa = std::abs(f);
    const double norm = std::hypot(fa, std::abs(g));
    c = fa / norm;
    s = (f / fa) * std::conj(g) / norm;
}

/// Swaps diagonal entries i and i+1 of the upper-triangular t while keeping
/// q * t * q^H unchanged.
inline void swap_schur_pair(ComplexMatrix& t, ComplexMatrix& q, Eigen::Index i) {
    const Eigen::Index n = t.rows();
    const Complex t11 = t(i, i);
    const Complex t22 = t(i + 1, i + 1);
    double c = 0.0;
    Complex s;
    complex_givens(t(i, i + 1), t22 - t11, c, s);
    for (Eigen::Index col = i + 2; col < n; ++col) {
        const Complex x = t(i, col), y = t(i + 1, col);
        t(i, col) = c * x + s * y;
        t(i + 1, col) = c * y - std::conj(s) * x;
    }
    const Complex sc = std::conj(s);
    for (Eigen::Index row = 0; row < i; ++row) {
        const Complex x = t(row, i), y = t(row, i + 1);
        t(row, i) = c * x + sc * y;
        t(row, i + 1) = c * y - std::conj(sc) * x;
    }
    t(i, i) = t22;
    t(i + 1, i + 1) = t11;
    for (Eigen::Index row = 0; row < q.rows(); ++row) {
        const Complex x = q(row, i), y = q(row, i + 1);
        q(row, i) = c * x + sc * y;
        q(row, i + 1) = c * y - std::conj(sc) * x;
    }
}

/// Moves the diagonal entries flagged in `selected` to the leading block of a
/// complex Schur form, preserving their relative order.
inline void reorder_schur(ComplexMatrix& t, ComplexMatrix& q, std::vector<bool> selected) {
    Eigen::Index target = 0;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        if (!selected[static_cast<std::size_t>(i)]) continue;
        for (Eigen::Index j = i; j > target; --j) {
            swap_schur_pair(t, q, j - 1);
            std::swap(selected[static_cast<std::size_t>(j - 1)], selected[static_cast<std::size_t>(j)]);
        }
        ++target;
    }
}

/// Two passes of classical Gram-Schmidt against the first `cols` columns of v.
inline ComplexVector orthogonalize(const ComplexMatrix& v, Eigen::Index cols, ComplexVector w,
                                   ComplexVector& coefficients) {
    coefficients = ComplexVector::Zero(cols);
    for (int pass = 0; pass < 2; ++pass) {
        const ComplexVector h = v.leftCols(cols).adjoint() * w;
        w.noalias() -= v.leftCols(cols) * h;
        coefficients += h;
    }
    return w;
}

} // namespace detail

struct ArnoldiOptions {
    Eigen::Index krylov_dimension = 0;  // 0 picks max(2k + 20, 40), capped at the operator dimension
    std::uint64_t seed = 0x5eed5eedULL;
};

/// Up to k eigenvalues of largest modulus, computed by a Krylov-Schur
/// restarted Arnoldi iteration. Converged when every wanted Ritz pair has
/// residual norm <= tol * max(1, |theta|). Throws ConvergenceError after
/// max_iter restarts.
inline std::vector<Complex> leading_eigs(const LinearOperator& op, int k, int max_iter, double tol,
                                         ArnoldiOptions options = {}) {
    const Eigen::Index n = op.dimension;
    detail::require(n >= 1, "leading_eigs: operator dimension must be positive");
    detail::require(k >= 1 && k <= n, "leading_eigs: need 1 <= k <= dimension");
    detail::require(max_iter >= 1, "leading_eigs: max_iter must be positive");

    Eigen::Index m = options.krylov_dimension > 0 ? options.krylov_dimension
                                                  : std::max<Eigen::Index>(2 * k + 20, 40);
    m = std::clamp<Eigen::Index>(m, std::min<Eigen::Index>(k + 2, n), n);
    // keep one extra vector when possible so a conjugate partner is not split
    const Eigen::Index wanted = std::min<Eigen::Index>(k + 1, m);
    const Eigen::Index keep = std::min<Eigen::Index>(m - 1, std::max<Eigen::Index>(wanted, (m + wanted) / 2));

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal;
    auto random_vector = [&] {
        ComplexVector x(n);
        for (Eigen::Index i = 0; i < n; ++i) x(i) = Complex(normal(rng), normal(rng));
        return x;
    };

    ComplexMatrix basis = ComplexMatrix::Zero(n, m);
    ComplexMatrix h = ComplexMatrix::Zero(m, m);
    ComplexVector residual_row = ComplexVector::Zero(m);  // A V = V H + f r^T
    ComplexVector f = random_vector();
    f.normalize();
    Eigen::Index size = 0;
    bool first = true;
    double best_residual = std::numeric_limits<double>::infinity();
    double scale = 0.0;

    for (int iteration = 0; iteration < max_iter; ++iteration) {
        while (size < m) {
            double beta = f.norm();
            ComplexVector coeff;
            if (first) {
                basis.col(0) = f / beta;
                first = false;
            } else if (beta <= 1e-13 * std::max(scale, 1.0)) {
                // invariant subspace found; continue with a fresh direction
                ComplexVector fresh = detail::orthogonalize(basis, size, random_vector(), coeff);
                basis.col(size) = fresh.normalized();
                h.row(size).head(size).setZero();
            } else {
                basis.col(size) = f / beta;
                h.row(size).head(size) = beta * residual_row.head(size).transpose();
            }
            ComplexVector w = op.apply(basis.col(size));
            scale = std::max(scale, w.norm());
            f = detail::orthogonalize(basis, size + 1, std::move(w), coeff);
            h.col(size).head(size + 1) = coeff;
            ++size;
            residual_row.head(size).setZero();
            residual_row(size - 1) = 1.0;
        }

        Eigen::ComplexSchur<ComplexMatrix> schur(h);
        if (schur.info() != Eigen::Success) throw NumericalError("leading_eigs: Schur decomposition failed");
        ComplexMatrix t = schur.matrixT();
        ComplexMatrix q = schur.matrixU();

        // rank Ritz values with the same ordering used for dense spectra
        std::vector<Complex> diag(static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < m; ++i) diag[static_cast<std::size_t>(i)] = t(i, i);
        std::vector<Complex> ordered = diag;
        sort_spectrum(ordered);
        std::vector<Eigen::Index> rank(static_cast<std::size_t>(m), m);
        for (Eigen::Index j = 0; j < m; ++j) {
            for (Eigen::Index i = 0; i < m; ++i) {
                if (rank[static_cast<std::size_t>(i)] == m && diag[static_cast<std::size_t>(i)] == ordered[static_cast<std::size_t>(j)]) {
                    rank[static_cast<std::size_t>(i)] = j;
                    break;
                }
            }
        }
        // move the kept values to the front in ranked order
        for (Eigen::Index j = 0; j < keep; ++j) {
            Eigen::Index i = j;
            while (rank[static_cast<std::size_t>(i)] != j) ++i;
            for (; i > j; --i) {
                detail::swap_schur_pair(t, q, i - 1);
                std::swap(rank[static_cast<std::size_t>(i - 1)], rank[static_cast<std::size_t>(i)]);
            }
        }

        // Ritz residuals of the wanted values: |f| * |r^T q y| with T y = theta y
        const double fnorm = f.norm();
        const ComplexVector rq = (residual_row.transpose() * q).transpose();
        bool converged = true;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < wanted; ++j) {
            // eigenvector of the leading (j+1)x(j+1) triangular block
            ComplexVector y = ComplexVector::Zero(j + 1);
            y(j) = 1.0;
            for (Eigen::Index r = j - 1; r >= 0; --r) {
                Complex acc = 0.0;
                for (Eigen::Index c = r + 1; c <= j; ++c) acc += t(r, c) * y(c);
                Complex denom = t(j, j) - t(r, r);
                if (std::abs(denom) < 1e-14 * std::max(1.0, std::abs(t(j, j)))) denom = 1e-14;
                y(r) = acc / denom;
            }
            const double res = fnorm * std::abs(rq.head(j + 1).transpose().dot(y.conjugate())) / y.norm();
            const double bound = tol * std::max(1.0, std::abs(t(j, j)));
            worst = std::max(worst, res / std::max(1.0, std::abs(t(j, j))));
            if (res > bound) converged = false;
        }
        best_residual = std::min(best_residual, worst);

        if (converged || m == n) {
            std::vector<Complex> values(diag.begin(), diag.end());
            for (Eigen::Index i = 0; i < m; ++i) values[static_cast<std::size_t>(i)] = t(i, i);
            values.resize(static_cast<std::size_t>(wanted));
            sort_spectrum(values);
            values.resize(static_cast<std::size_t>(k));
            return values;
        }

        // Krylov-Schur restart on the leading `keep` Schur vectors
        const ComplexMatrix kept = basis * q.leftCols(keep);
        basis.leftCols(keep) = kept;
        h.setZero();
        h.topLeftCorner(keep, keep) = t.topLeftCorner(keep, keep).triangularView<Eigen::Upper>();
        residual_row.setZero();
        residual_row.head(keep) = rq.head(keep);
        size = keep;
    }
    throw ConvergenceError("leading_eigs: Arnoldi iteration did not converge", best_residual);
}

} // namespace sloppy_baker
