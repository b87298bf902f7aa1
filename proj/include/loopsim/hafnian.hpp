#pragma once

// Hafnian via the power-trace formula. For A of size n = 2k,
//
//   haf(A) = sum_{Z subset of pairs} (-1)^{k-|Z|} f(X_Z A_Z),
//
// where A_Z keeps rows/columns {2i, 2i+1 : i in Z}, X_Z swaps inside each
// kept pair, and f(C) is the eta^k coefficient of exp(sum_j tr(C^j) eta^j / 2j).
// Cost O(2^k k^4); fine up to n ~ 24.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

#include "loopsim/errors.hpp"

namespace loopsim {

namespace detail {

// eta^k coefficient of exp(sum_{j=1}^k tr(C^j) eta^j / (2j)).
template <typename Scalar>
std::complex<Scalar> power_trace_coefficient(const Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>& C,
                                             std::size_t k) {
    using Cx = std::complex<Scalar>;
    using Mat = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic>;
    if (C.size() == 0) return k == 0 ? Cx(1) : Cx(0);
    // coef[j] = tr(C^j) / (2j)
    std::vector<Cx> coef(k + 1, Cx(0));
    Mat P = C;
    for (std::size_t j = 1; j <= k; ++j) {
        coef[j] = P.trace() / Scalar(2 * j);
        if (j < k) P = (P * C).eval();
    }
    std::vector<Cx> e(k + 1, Cx(0));
    e[0] = Cx(1);
    for (std::size_t n = 1; n <= k; ++n) {
        Cx acc(0);
        for (std::size_t j = 1; j <= n; ++j) acc += Scalar(j) * coef[j] * e[n - j];
        e[n] = acc / Scalar(n);
    }
    return e[k];
}

}  // namespace detail

template <typename Derived>
std::complex<typename Eigen::NumTraits<typename Derived::Scalar>::Real> hafnian(const Eigen::MatrixBase<Derived>& A_in,
                                                                               double symmetry_tol = 1e-10) {
    using Scalar = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
    using Cx = std::complex<Scalar>;
    using Mat = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic>;
    const Mat A = A_in.template cast<Cx>();
    if (A.rows() != A.cols()) throw NonSymmetric("hafnian needs a square matrix");
    const auto n = static_cast<std::size_t>(A.rows());
    if (n == 0) return Cx(1);
    const Scalar scale = std::max<Scalar>(Scalar(1), A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > static_cast<Scalar>(symmetry_tol) * scale)
        throw NonSymmetric("hafnian needs a symmetric matrix");
    if (n % 2 != 0) return Cx(0);
    const std::size_t k = n / 2;
    if (k > 30) throw ScaleExceeded("hafnian size too large for exact evaluation");

    Cx total(0);
    std::vector<Eigen::Index> idx;
    idx.reserve(n);
    for (std::uint64_t mask = 1; mask < (std::uint64_t(1) << k); ++mask) {
        idx.clear();
        for (std::size_t i = 0; i < k; ++i)
            if (mask & (std::uint64_t(1) << i)) {
                idx.push_back(static_cast<Eigen::Index>(2 * i));
                idx.push_back(static_cast<Eigen::Index>(2 * i + 1));
            }
        const auto sz = static_cast<Eigen::Index>(idx.size());
        // C = X_Z A_Z: swap rows inside each pair.
        Mat C(sz, sz);
        for (Eigen::Index r = 0; r < sz; ++r) {
            const Eigen::Index src = idx[static_cast<std::size_t>(r ^ 1)];
            for (Eigen::Index c = 0; c < sz; ++c) C(r, c) = A(src, idx[static_cast<std::size_t>(c)]);
        }
        const Cx f = detail::power_trace_coefficient<Scalar>(C, k);
        const bool negative = ((k - idx.size() / 2) % 2) != 0;
        total += negative ? -f : f;
    }
    return total;
}

}  // namespace loopsim
