#pragma once

// Truncated gate matrices.
//
// Single-mode generators are exponentiated in an enlarged space and cropped
// back to the cutoff, so the d x d block is (to working precision) the exact
// matrix element block of the infinite-dimensional unitary. Applying it to a
// state inside the cutoff loses exactly the population the real gate pushes
// above level d-1; that deficit is the leakage the truncation guard reads.
//
// Beamsplitters conserve total photon number, so each sector
// {|k, N-k>} is closed. It is exponentiated exactly and cropped.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/MatrixFunctions>

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "loopsim/gates.hpp"

namespace loopsim {

template <typename Scalar>
using DenseGate = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using SparseGate = Eigen::SparseMatrix<std::complex<Scalar>, Eigen::RowMajor>;

inline std::size_t padded_dimension(std::size_t cutoff) {
    return cutoff + std::max<std::size_t>(cutoff, 32);
}

template <typename Scalar>
DenseGate<Scalar> annihilation(std::size_t dim) {
    DenseGate<Scalar> a = DenseGate<Scalar>::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t n = 1; n < dim; ++n)
        a(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(n)) = std::sqrt(static_cast<Scalar>(n));
    return a;
}

template <typename Scalar>
DenseGate<Scalar> cropped_exp(const DenseGate<Scalar>& generator, std::size_t cutoff) {
    const DenseGate<Scalar> u = generator.exp();
    const auto d = static_cast<Eigen::Index>(cutoff);
    return u.topLeftCorner(d, d);
}

template <typename Scalar>
DenseGate<Scalar> squeeze_matrix(Scalar r, Scalar phi, std::size_t cutoff) {
    using C = std::complex<Scalar>;
    const auto a = annihilation<Scalar>(padded_dimension(cutoff));
    const DenseGate<Scalar> a2 = a * a;
    const DenseGate<Scalar> ad2 = a2.adjoint();
    const DenseGate<Scalar> g =
        (r / Scalar(2)) * (std::exp(C(0, -2 * phi)) * a2 - std::exp(C(0, 2 * phi)) * ad2);
    return cropped_exp<Scalar>(g, cutoff);
}

template <typename Scalar>
DenseGate<Scalar> displace_matrix(std::complex<Scalar> beta, std::size_t cutoff) {
    const auto a = annihilation<Scalar>(padded_dimension(cutoff));
    const DenseGate<Scalar> g = beta * a.adjoint() - std::conj(beta) * a;
    return cropped_exp<Scalar>(g, cutoff);
}

// Annihilation / creation cropped to the cutoff (a^dag drops |d-1> -> |d>).
template <typename Scalar>
DenseGate<Scalar> creation(std::size_t cutoff) {
    return annihilation<Scalar>(cutoff).adjoint();
}

// Diagonal of exp[i phi n].
template <typename Scalar>
Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1> phase_diagonal(Scalar phi, std::size_t cutoff) {
    Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1> diag(static_cast<Eigen::Index>(cutoff));
    for (std::size_t n = 0; n < cutoff; ++n)
        diag(static_cast<Eigen::Index>(n)) = std::polar(Scalar(1), phi * static_cast<Scalar>(n));
    return diag;
}

// Diagonal of exp[i Phi n(n-1)].
template <typename Scalar>
Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1> kerr_diagonal(Scalar phi, std::size_t cutoff) {
    Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1> diag(static_cast<Eigen::Index>(cutoff));
    for (std::size_t n = 0; n < cutoff; ++n) {
        const auto nn = static_cast<Scalar>(n);
        diag(static_cast<Eigen::Index>(n)) = std::polar(Scalar(1), phi * nn * (nn - 1));
    }
    return diag;
}

// Two-mode beamsplitter on the d^2 space indexed as n_i * d + n_j.
template <typename Scalar>
SparseGate<Scalar> beamsplitter_matrix(Scalar theta, Scalar phi, std::size_t cutoff) {
    using C = std::complex<Scalar>;
    const std::size_t d = cutoff;
    std::vector<Eigen::Triplet<C>> triplets;
    for (std::size_t total = 0; total + 1 < 2 * d; ++total) {
        const auto dim = static_cast<Eigen::Index>(total + 1);
        // Sector basis |k, total-k>, k = occupation of mode i.
        DenseGate<Scalar> g = DenseGate<Scalar>::Zero(dim, dim);
        for (std::size_t k = 0; k < total; ++k) {
            const Scalar amp = std::sqrt(static_cast<Scalar>((k + 1) * (total - k)));
            // a_i^dag a_j : |k, N-k> -> |k+1, N-k-1>
            g(static_cast<Eigen::Index>(k + 1), static_cast<Eigen::Index>(k)) += theta * std::exp(C(0, phi)) * amp;
            g(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k + 1)) -= theta * std::exp(C(0, -phi)) * amp;
        }
        const DenseGate<Scalar> u = g.exp();
        for (std::size_t out = 0; out <= total; ++out) {
            if (out >= d || total - out >= d) continue;
            for (std::size_t in = 0; in <= total; ++in) {
                if (in >= d || total - in >= d) continue;
                const C v = u(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
                if (v == C(0)) continue;
                triplets.emplace_back(static_cast<Eigen::Index>(out * d + (total - out)),
                                      static_cast<Eigen::Index>(in * d + (total - in)), v);
            }
        }
    }
    SparseGate<Scalar> m(static_cast<Eigen::Index>(d * d), static_cast<Eigen::Index>(d * d));
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

// Kraus operators of the pure-loss channel:
//   K_k = sum_n sqrt(C(n,k)) eta^{(n-k)/2} (1-eta)^{k/2} |n-k><n|.
template <typename Scalar>
std::vector<DenseGate<Scalar>> loss_kraus(Scalar eta, std::size_t cutoff) {
    std::vector<DenseGate<Scalar>> kraus;
    const auto d = static_cast<Eigen::Index>(cutoff);
    for (std::size_t k = 0; k < cutoff; ++k) {
        DenseGate<Scalar> K = DenseGate<Scalar>::Zero(d, d);
        for (std::size_t n = k; n < cutoff; ++n) {
            const Scalar binom = std::exp(std::lgamma(Scalar(n + 1)) - std::lgamma(Scalar(k + 1)) -
                                          std::lgamma(Scalar(n - k + 1)));
            const Scalar amp = std::sqrt(binom) * std::pow(std::sqrt(eta), Scalar(n - k)) *
                               std::pow(std::sqrt(Scalar(1) - eta), Scalar(k));
            K(static_cast<Eigen::Index>(n - k), static_cast<Eigen::Index>(n)) = amp;
        }
        if (k > 0 && K.cwiseAbs().maxCoeff() == Scalar(0)) break;
        kraus.push_back(std::move(K));
    }
    return kraus;
}

// Memoized gate matrices keyed by (gate kind, parameters, cutoff). Lookups
// take a shared lock, so one cache can serve concurrent trajectories.
template <typename Scalar>
class GateCache {
public:
    std::shared_ptr<const DenseGate<Scalar>> squeeze(Scalar r, Scalar phi, std::size_t cutoff) {
        return dense(Key{1, bits(r), bits(phi), 0, cutoff}, [&] { return squeeze_matrix<Scalar>(r, phi, cutoff); });
    }

    std::shared_ptr<const DenseGate<Scalar>> displace(std::complex<Scalar> beta, std::size_t cutoff) {
        return dense(Key{2, bits(beta.real()), bits(beta.imag()), 0, cutoff},
                     [&] { return displace_matrix<Scalar>(beta, cutoff); });
    }

    std::shared_ptr<const SparseGate<Scalar>> beamsplitter(Scalar theta, Scalar phi, std::size_t cutoff) {
        const Key key{3, bits(theta), bits(phi), 0, cutoff};
        {
            std::shared_lock lock(mutex_);
            if (auto it = sparse_.find(key); it != sparse_.end()) return it->second;
        }
        auto m = std::make_shared<const SparseGate<Scalar>>(beamsplitter_matrix<Scalar>(theta, phi, cutoff));
        std::unique_lock lock(mutex_);
        return sparse_.try_emplace(key, std::move(m)).first->second;
    }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return dense_.size() + sparse_.size();
    }

    void clear() {
        std::unique_lock lock(mutex_);
        dense_.clear();
        sparse_.clear();
    }

private:
    struct Key {
        int kind;
        std::uint64_t a, b, c;
        std::size_t cutoff;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            std::uint64_t h = static_cast<std::uint64_t>(k.kind) * 0x9e3779b97f4a7c15ULL;
            for (std::uint64_t v : {k.a, k.b, k.c, static_cast<std::uint64_t>(k.cutoff)})
                h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            return static_cast<std::size_t>(h);
        }
    };

    static std::uint64_t bits(Scalar v) {
        const long double widened = static_cast<long double>(v);
        const double narrowed = static_cast<double>(widened);
        return std::bit_cast<std::uint64_t>(narrowed == 0.0 ? 0.0 : narrowed);
    }

    template <typename Build>
    std::shared_ptr<const DenseGate<Scalar>> dense(const Key& key, Build&& build) {
        {
            std::shared_lock lock(mutex_);
            if (auto it = dense_.find(key); it != dense_.end()) return it->second;
        }
        auto m = std::make_shared<const DenseGate<Scalar>>(build());
        std::unique_lock lock(mutex_);
        return dense_.try_emplace(key, std::move(m)).first->second;
    }

    mutable std::shared_mutex mutex_;
    std::unordered_map<Key, std::shared_ptr<const DenseGate<Scalar>>, KeyHash> dense_;
    std::unordered_map<Key, std::shared_ptr<const SparseGate<Scalar>>, KeyHash> sparse_;
};

template <typename Scalar>
GateCache<Scalar>& default_gate_cache() {
    static GateCache<Scalar> cache;
    return cache;
}

}  // namespace loopsim
