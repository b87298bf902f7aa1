#pragma once

// Independent reference implementations for the tests. Nothing here calls the
// library's gate builders: operators are assembled from Kronecker products of
// truncated ladder matrices and exponentiated directly.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "loopsim/gates.hpp"

namespace oracle {

using Cx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat ladder(std::size_t d) {
    Mat a = Mat::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t n = 1; n < d; ++n) a(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(n)) = std::sqrt(double(n));
    return a;
}

// Operator `op` on mode k of m modes (mode 0 slowest).
inline Mat embed(const Mat& op, std::size_t k, std::size_t m, std::size_t d) {
    Mat out = Mat::Identity(1, 1);
    for (std::size_t j = 0; j < m; ++j) {
        const Mat f = j == k ? op : Mat::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        out = Eigen::kroneckerProduct(out, f).eval();
    }
    return out;
}

// Anti-Hermitian generator G of the gate on the full m-mode space at cutoff D.
inline Mat generator(const loopsim::GateOp& g, std::size_t m, std::size_t D) {
    const Cx I(0, 1);
    return std::visit(
        [&](const auto& op) -> Mat {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, loopsim::Displace>) {
                const Mat a = embed(ladder(D), op.mode, m, D);
                return op.beta * a.adjoint() - std::conj(op.beta) * a;
            } else if constexpr (std::is_same_v<T, loopsim::Squeeze>) {
                const Mat a = embed(ladder(D), op.mode, m, D);
                return (op.r / 2) * (std::exp(-2.0 * I * op.phi) * a * a - std::exp(2.0 * I * op.phi) * a.adjoint() * a.adjoint());
            } else if constexpr (std::is_same_v<T, loopsim::BeamSplitter>) {
                const Mat ai = embed(ladder(D), op.mode_i, m, D), aj = embed(ladder(D), op.mode_j, m, D);
                return op.theta * (std::exp(I * op.phi) * ai.adjoint() * aj - std::exp(-I * op.phi) * ai * aj.adjoint());
            } else if constexpr (std::is_same_v<T, loopsim::Phase>) {
                const Mat a = embed(ladder(D), op.mode, m, D);
                return I * op.phi * a.adjoint() * a;
            } else if constexpr (std::is_same_v<T, loopsim::Kerr>) {
                const Mat a = embed(ladder(D), op.mode, m, D);
                const Mat n = a.adjoint() * a;
                return I * op.phi * n * (n - Mat::Identity(n.rows(), n.cols()));
            } else {
                throw std::invalid_argument("no generator for loss");
            }
        },
        g);
}

// Index map from the cutoff-d flat layout into the cutoff-D one.
inline std::vector<Eigen::Index> lift_indices(std::size_t m, std::size_t d, std::size_t D) {
    std::size_t n = 1;
    for (std::size_t k = 0; k < m; ++k) n *= d;
    std::vector<Eigen::Index> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rest = i, big = 0, scale = 1;
        for (std::size_t k = 0; k < m; ++k) {
            big += (rest % d) * scale;
            rest /= d;
            scale *= D;
        }
        out[i] = static_cast<Eigen::Index>(big);
    }
    return out;
}

// exp(G) applied in a padded space of cutoff D, then cropped back to d. The
// result is the untruncated gate action restricted to the first d levels.
inline Vec apply_padded(const loopsim::GateOp& g, const Vec& psi, std::size_t m, std::size_t d, std::size_t D) {
    const Mat U = generator(g, m, D).exp();
    const auto idx = lift_indices(m, d, D);
    Vec big = Vec::Zero(U.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) big(idx[i]) = psi(static_cast<Eigen::Index>(i));
    const Vec out = U * big;
    Vec small(psi.size());
    for (std::size_t i = 0; i < idx.size(); ++i) small(static_cast<Eigen::Index>(i)) = out(idx[i]);
    return small;
}

// e^{-|a|^2/2} a^n / sqrt(n!) for n < d, untruncated normalization.
inline Vec coherent(Cx alpha, std::size_t d) {
    Vec v(static_cast<Eigen::Index>(d));
    for (std::size_t n = 0; n < d; ++n)
        v(static_cast<Eigen::Index>(n)) = std::exp(-0.5 * std::norm(alpha) + double(n) * std::log(std::abs(alpha) + 1e-300) -
                                                    0.5 * std::lgamma(double(n) + 1.0)) *
                                           std::polar(1.0, double(n) * std::arg(alpha));
    return v;
}

// Hafnian as a sum over perfect matchings.
inline Cx hafnian_matchings(const Mat& A) {
    const auto n = A.rows();
    if (n == 0) return 1.0;
    if (n % 2) return 0.0;
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    std::function<Cx()> rec = [&]() -> Cx {
        Eigen::Index i = 0;
        while (i < n && used[static_cast<std::size_t>(i)]) ++i;
        if (i == n) return 1.0;
        used[static_cast<std::size_t>(i)] = true;
        Cx acc = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (!used[static_cast<std::size_t>(j)]) {
                used[static_cast<std::size_t>(j)] = true;
                acc += A(i, j) * rec();
                used[static_cast<std::size_t>(j)] = false;
            }
        used[static_cast<std::size_t>(i)] = false;
        return acc;
    };
    return rec();
}

// Pure-state fidelity |<a|b>|^2 for normalized vectors.
inline double overlap2(const Vec& a, const Vec& b) { return std::norm(a.dot(b)); }

// ---- generators ------------------------------------------------------------

struct Gen {
    std::mt19937_64 eng;
    explicit Gen(std::uint64_t seed) : eng(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(eng); }
    Cx complex(double scale) { return {uniform(-scale, scale), uniform(-scale, scale)}; }

    // Normalized random vector supported on levels < support in each mode.
    Vec state(std::size_t m, std::size_t d, std::size_t support) {
        std::size_t n = 1;
        for (std::size_t k = 0; k < m; ++k) n *= d;
        Vec v = Vec::Zero(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t rest = i;
            bool inside = true;
            for (std::size_t k = 0; k < m; ++k) {
                inside = inside && rest % d < support;
                rest /= d;
            }
            if (inside) v(static_cast<Eigen::Index>(i)) = complex(1.0);
        }
        return v.normalized();
    }

    // A random unitary gate on m modes with small parameters.
    loopsim::GateOp gate(std::size_t m) {
        const std::size_t k = index(m);
        switch (index(m > 1 ? 5 : 4)) {
            case 0: return loopsim::Displace{k, complex(0.4)};
            case 1: return loopsim::Squeeze{k, uniform(0.0, 0.3), uniform(0.0, M_PI)};
            case 2: return loopsim::Phase{k, uniform(-M_PI, M_PI)};
            case 3: return loopsim::Kerr{k, uniform(-1.0, 1.0)};
            default: {
                std::size_t j = index(m - 1);
                if (j >= k) ++j;
                return loopsim::BeamSplitter{k, j, uniform(0.0, M_PI / 2), uniform(-M_PI, M_PI)};
            }
        }
    }
};

}  // namespace oracle
