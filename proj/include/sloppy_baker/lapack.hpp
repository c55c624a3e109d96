#pragma once

// Thin LAPACK bindings for the two dense kernels where Eigen 3.4 falls short:
// the general complex eigenvalue problem (zgeev is several times faster than
// Eigen's unblocked ComplexSchur at N^2 = 1024) and the SVD (Eigen's BDCSVD
// asserts on matrices with large numerically-zero blocks).

#include <complex>
#include <string>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include <Eigen/Dense>

#include "errors.hpp"

namespace sloppy_baker::lapack {

/// Eigenvalues of a general complex square matrix (unsorted).
inline Eigen::VectorXcd eigenvalues(Eigen::MatrixXcd a) {
    const auto n = static_cast<lapack_int>(a.rows());
    Eigen::VectorXcd w(n);
    const lapack_int info =
        LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, w.data(), nullptr, 1, nullptr, 1);
    if (info != 0) throw NumericalError("zgeev failed with info = " + std::to_string(info));
    return w;
}

struct Svd {
    Eigen::VectorXd singular_values;  // descending
    Eigen::MatrixXcd v;               // right singular vectors as columns
};

inline Svd svd(Eigen::MatrixXcd a) {
    const auto m = static_cast<lapack_int>(a.rows());
    const auto n = static_cast<lapack_int>(a.cols());
    Svd out;
    out.singular_values.resize(std::min(m, n));
    Eigen::MatrixXcd u(m, m);
    Eigen::MatrixXcd vh(n, n);
    const lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'A', m, n, a.data(), m, out.singular_values.data(),
                                           u.data(), m, vh.data(), n);
    if (info != 0) throw NumericalError("zgesdd failed with info = " + std::to_string(info));
    out.v = vh.adjoint();
    return out;
}

} // namespace sloppy_baker::lapack
