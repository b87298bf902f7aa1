#pragma once

// Two-rail time-multiplexed EPR chain.
//
// Bin k carries modes A_k (index k) and B_k (index n + k). A_k starts
// x-squeezed, B_k p-squeezed. Layers: squeeze, 50:50 on every (A_k, B_k),
// one-bin delay on rail B (B_k -> B_{k+1}, cyclic), 50:50 again. The delay
// wraps around so every bin sees the same neighbourhood; an open chain would
// give the two end bins different forms.
//
// Nullifiers are the images of the squeezed input quadratures under the
// passive part O of the circuit: c = O e. With O orthogonal, c^T cov c is
// exactly e^{-2r}/2 and |c| = 1, so the ratio to vacuum is e^{-2r}.

#include <Eigen/Sparse>

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "loopsim/errors.hpp"
#include "loopsim/gaussian.hpp"

namespace loopsim {

enum class NullifierKind { X, P };

struct Nullifier {
    Eigen::SparseVector<double> coefficients;
    NullifierKind kind = NullifierKind::X;
    std::size_t bin = 0;

    Nullifier() = default;
    Nullifier(Eigen::SparseVector<double> c, NullifierKind k, std::size_t b)
        : coefficients(std::move(c)), kind(k), bin(b) {
        if (coefficients.nonZeros() == 0 || coefficients.norm() == 0.0)
            throw InvalidArgument("nullifier coefficient vector must be nonzero");
    }
    explicit Nullifier(const Eigen::VectorXd& dense, NullifierKind k = NullifierKind::X, std::size_t b = 0)
        : Nullifier(Eigen::SparseVector<double>(dense.sparseView()), k, b) {}

    std::string label() const { return (kind == NullifierKind::X ? "x_" : "p_") + std::to_string(bin); }
};

struct NullifierVariance {
    double variance;
    double db_vs_vacuum;  // 10 log10(variance / (c^T c / 2))
};

template <typename CovType>
NullifierVariance nullifier_variance(const GaussianState<CovType>& s, const Nullifier& nf) {
    const auto& c = nf.coefficients;
    if (c.size() != s.mean().size()) throw ShapeMismatch("nullifier length does not match the state");
    double var = 0.0;
    if constexpr (GaussianState<CovType>::is_sparse) {
        const Eigen::SparseVector<double> cc = s.cov() * c;
        var = c.dot(cc);
    } else {
        const Eigen::VectorXd cd(c);
        var = cd.dot(s.cov() * cd);
    }
    const double vac = 0.5 * c.squaredNorm();
    return {var, 10.0 * std::log10(var / vac)};
}

struct EprChain {
    SparseGaussianState state;
    SparseMatrixd passive;  // O, quadratures out = O * quadratures in (after squeezing)
    std::vector<Nullifier> nullifiers;  // x_0, p_0, x_1, p_1, ...
    std::size_t n_bins;
};

inline EprChain epr_chain_generate(std::size_t n_bins, double r) {
    if (n_bins < 2) throw InvalidArgument("EPR chain needs at least 2 bins");
    if (r < 0.0) throw InvalidArgument("squeezing parameter must be >= 0");
    const std::size_t n = n_bins;
    const std::size_t m = 2 * n;
    auto A = [](std::size_t k) { return k; };
    auto B = [n](std::size_t k) { return n + k; };

    std::vector<LocalSymplectic> squeezers, bs;
    for (std::size_t k = 0; k < n; ++k) {
        squeezers.push_back(squeeze_symplectic(m, A(k), r, 0.0));
        squeezers.push_back(squeeze_symplectic(m, B(k), r, M_PI / 2));
        bs.push_back(beamsplitter_symplectic(m, A(k), B(k), M_PI / 4, 0.0));
    }
    const SparseMatrixd Sq = embed(m, squeezers);
    const SparseMatrixd BS = embed(m, bs);

    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t q = 0; q < 2 * m; ++q) {
        const std::size_t mode = q % m;
        const std::size_t offset = q - mode;
        std::size_t target = mode;
        if (mode >= n) target = n + (mode - n + 1) % n;
        trip.emplace_back(static_cast<Eigen::Index>(offset + target), static_cast<Eigen::Index>(q), 1.0);
    }
    SparseMatrixd delay(static_cast<Eigen::Index>(2 * m), static_cast<Eigen::Index>(2 * m));
    delay.setFromTriplets(trip.begin(), trip.end());

    SparseMatrixd O = BS * delay * BS;
    O.prune(1e-15);
    SparseMatrixd S = O * Sq;
    SparseMatrixd cov = 0.5 * S * SparseMatrixd(S.transpose());
    cov.prune(1e-15);

    EprChain chain{SparseGaussianState::from_moments(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * m)),
                                                     std::move(cov)),
                   O, {}, n};
    chain.nullifiers.reserve(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        chain.nullifiers.emplace_back(Eigen::SparseVector<double>(O.col(static_cast<Eigen::Index>(A(k)))),
                                      NullifierKind::X, k);
        chain.nullifiers.emplace_back(Eigen::SparseVector<double>(O.col(static_cast<Eigen::Index>(m + B(k)))),
                                      NullifierKind::P, k);
    }
    return chain;
}

struct NullifierRow {
    std::size_t bin_index;
    double x_variance_db;
    double p_variance_db;
};

inline std::vector<NullifierRow> nullifier_sweep(const EprChain& chain) {
    std::vector<NullifierRow> rows(chain.n_bins);
    for (std::size_t k = 0; k < chain.n_bins; ++k) {
        rows[k].bin_index = k;
        rows[k].x_variance_db = nullifier_variance(chain.state, chain.nullifiers[2 * k]).db_vs_vacuum;
        rows[k].p_variance_db = nullifier_variance(chain.state, chain.nullifiers[2 * k + 1]).db_vs_vacuum;
    }
    return rows;
}

inline void write_nullifier_csv(std::ostream& out, const std::vector<NullifierRow>& rows) {
    out << "bin_index,x_variance_db,p_variance_db\n";
    out.precision(12);
    for (const auto& r : rows) out << r.bin_index << ',' << r.x_variance_db << ',' << r.p_variance_db << '\n';
}

}  // namespace loopsim
