#pragma once

// Gaussian states in xxpp ordering: q = (x_0..x_{m-1}, p_0..p_{m-1}),
// Omega = [[0, I], [-I, 0]], vacuum cov = I/2.
//
// GaussianState is templated on the covariance type so the same code drives a
// dense 4-mode GBS circuit and a sparse 16000-mode cluster chain.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <type_traits>
#include <variant>
#include <vector>

#include "loopsim/errors.hpp"
#include "loopsim/gates.hpp"

namespace loopsim {

using SparseMatrixd = Eigen::SparseMatrix<double>;

template <typename CovType = Eigen::MatrixXd>
class GaussianState {
public:
    using Scalar = typename CovType::Scalar;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    static constexpr bool is_sparse = std::is_base_of_v<Eigen::SparseMatrixBase<CovType>, CovType>;

    explicit GaussianState(std::size_t mode_count) : mode_count_(mode_count) {
        if (mode_count == 0) throw InvalidArgument("gaussian state needs at least one mode");
        const auto n = static_cast<Eigen::Index>(2 * mode_count);
        mean_ = Vector::Zero(n);
        if constexpr (is_sparse) {
            cov_.resize(n, n);
            cov_.setIdentity();
            cov_ *= Scalar(0.5);
        } else {
            cov_ = Scalar(0.5) * CovType::Identity(n, n);
        }
    }

    static GaussianState vacuum(std::size_t mode_count) { return GaussianState(mode_count); }

    static GaussianState from_moments(Vector mean, CovType cov) {
        if (mean.size() % 2 != 0 || cov.rows() != mean.size() || cov.cols() != mean.size())
            throw ShapeMismatch("mean/covariance dimensions disagree");
        GaussianState s(static_cast<std::size_t>(mean.size() / 2));
        s.mean_ = std::move(mean);
        s.cov_ = std::move(cov);
        return s;
    }

    std::size_t mode_count() const noexcept { return mode_count_; }
    const Vector& mean() const noexcept { return mean_; }
    const CovType& cov() const noexcept { return cov_; }
    Vector& mean() noexcept { return mean_; }
    CovType& cov() noexcept { return cov_; }

    Eigen::Index x_index(std::size_t mode) const { return static_cast<Eigen::Index>(mode); }
    Eigen::Index p_index(std::size_t mode) const { return static_cast<Eigen::Index>(mode_count_ + mode); }

private:
    std::size_t mode_count_;
    Vector mean_;
    CovType cov_;
};

using GaussianStateD = GaussianState<Eigen::MatrixXd>;
using SparseGaussianState = GaussianState<SparseMatrixd>;

inline Eigen::MatrixXd symplectic_form(std::size_t mode_count) {
    const auto m = static_cast<Eigen::Index>(mode_count);
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    omega.topRightCorner(m, m).setIdentity();
    omega.bottomLeftCorner(m, m) = -Eigen::MatrixXd::Identity(m, m);
    return omega;
}

// A local linear map: `block` acts on the quadrature indices `index`, the rest
// is identity. All Gaussian gates reduce to one of these.
struct LocalSymplectic {
    std::vector<Eigen::Index> index;
    Eigen::MatrixXd block;
};

inline LocalSymplectic squeeze_symplectic(std::size_t m, std::size_t mode, double r, double phi) {
    const double c = std::cosh(r), s = std::sinh(r), th = 2.0 * phi;
    LocalSymplectic L;
    L.index = {static_cast<Eigen::Index>(mode), static_cast<Eigen::Index>(m + mode)};
    L.block.resize(2, 2);
    L.block << c - s * std::cos(th), -s * std::sin(th), -s * std::sin(th), c + s * std::cos(th);
    return L;
}

inline LocalSymplectic phase_symplectic(std::size_t m, std::size_t mode, double phi) {
    LocalSymplectic L;
    L.index = {static_cast<Eigen::Index>(mode), static_cast<Eigen::Index>(m + mode)};
    L.block.resize(2, 2);
    L.block << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    return L;
}

// Heisenberg action of exp[th (e^{i phi} a_i^dag a_j - h.c.)] on
// (x_i, p_i, x_j, p_j).
inline LocalSymplectic beamsplitter_symplectic(std::size_t m, std::size_t i, std::size_t j, double theta,
                                               double phi) {
    const double t = std::cos(theta), s = std::sin(theta);
    const double c = std::cos(phi), sn = std::sin(phi);
    LocalSymplectic L;
    L.index = {static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m + i), static_cast<Eigen::Index>(j),
               static_cast<Eigen::Index>(m + j)};
    L.block.resize(4, 4);
    L.block << t, 0, s * c, -s * sn,
               0, t, s * sn, s * c,
               -s * c, -s * sn, t, 0,
               s * sn, -s * c, 0, t;
    return L;
}

// Embeds local maps (on disjoint index sets) into one sparse 2m x 2m matrix.
inline SparseMatrixd embed(std::size_t m, const std::vector<LocalSymplectic>& parts) {
    const auto n = static_cast<Eigen::Index>(2 * m);
    std::vector<char> touched(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& L : parts) {
        for (std::size_t a = 0; a < L.index.size(); ++a) {
            if (touched[static_cast<std::size_t>(L.index[a])])
                throw InvalidArgument("overlapping local symplectics in one layer");
            touched[static_cast<std::size_t>(L.index[a])] = 1;
            for (std::size_t b = 0; b < L.index.size(); ++b) {
                const double v = L.block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                if (v != 0.0) trip.emplace_back(L.index[a], L.index[b], v);
            }
        }
    }
    for (Eigen::Index k = 0; k < n; ++k)
        if (!touched[static_cast<std::size_t>(k)]) trip.emplace_back(k, k, 1.0);
    SparseMatrixd S(n, n);
    S.setFromTriplets(trip.begin(), trip.end());
    return S;
}

namespace detail {

inline void check_gaussian_mode(std::size_t mode, std::size_t m) {
    if (mode >= m)
        throw InvalidMode("mode " + std::to_string(mode) + " out of range for " + std::to_string(m) + "-mode state");
}

// cov -> S cov S^T (+ noise), mean -> S mean.
template <typename CovType>
void transform(GaussianState<CovType>& s, const SparseMatrixd& S) {
    s.mean() = (S * s.mean()).eval();
    if constexpr (GaussianState<CovType>::is_sparse) {
        CovType next = S * s.cov() * SparseMatrixd(S.transpose());
        next.prune(0.0);
        s.cov() = std::move(next);
    } else {
        s.cov() = (S * s.cov() * S.transpose()).eval();
    }
}

}  // namespace detail

template <typename CovType>
GaussianState<CovType> apply_symplectic(GaussianState<CovType> state, const SparseMatrixd& S) {
    if (S.rows() != state.mean().size() || S.cols() != state.mean().size())
        throw ShapeMismatch("symplectic dimension does not match the state");
    detail::transform(state, S);
    return state;
}

template <typename CovType>
GaussianState<CovType> apply_symplectic(GaussianState<CovType> state, const Eigen::MatrixXd& S) {
    return apply_symplectic(std::move(state), SparseMatrixd(S.sparseView()));
}

// Gaussian gate on the covariance representation. Kerr is rejected.
template <typename CovType>
GaussianState<CovType> apply_symplectic(GaussianState<CovType> state, const GateOp& op) {
    const std::size_t m = state.mode_count();
    for (std::size_t mode : modes_of(op)) detail::check_gaussian_mode(mode, m);
    std::visit(
        [&](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Kerr>) {
                throw NonGaussianOp("Kerr gate has no symplectic representation");
            } else if constexpr (std::is_same_v<T, Displace>) {
                state.mean()(state.x_index(g.mode)) += std::sqrt(2.0) * g.beta.real();
                state.mean()(state.p_index(g.mode)) += std::sqrt(2.0) * g.beta.imag();
            } else if constexpr (std::is_same_v<T, Squeeze>) {
                if (g.r < 0.0) throw InvalidArgument("squeezing parameter must be >= 0");
                detail::transform(state, embed(m, {squeeze_symplectic(m, g.mode, g.r, g.phi)}));
            } else if constexpr (std::is_same_v<T, Phase>) {
                detail::transform(state, embed(m, {phase_symplectic(m, g.mode, g.phi)}));
            } else if constexpr (std::is_same_v<T, BeamSplitter>) {
                if (g.mode_i == g.mode_j) throw InvalidMode("beamsplitter needs two distinct modes");
                detail::transform(state, embed(m, {beamsplitter_symplectic(m, g.mode_i, g.mode_j, g.theta, g.phi)}));
            } else if constexpr (std::is_same_v<T, Loss>) {
                if (!(g.eta >= 0.0 && g.eta <= 1.0))
                    throw InvalidEta("transmissivity must lie in [0,1], got " + std::to_string(g.eta));
                LocalSymplectic L;
                L.index = {state.x_index(g.mode), state.p_index(g.mode)};
                L.block = std::sqrt(g.eta) * Eigen::Matrix2d::Identity();
                detail::transform(state, embed(m, {L}));
                const double noise = 0.5 * (1.0 - g.eta);
                state.cov().coeffRef(state.x_index(g.mode), state.x_index(g.mode)) += noise;
                state.cov().coeffRef(state.p_index(g.mode), state.p_index(g.mode)) += noise;
            }
        },
        op);
    return state;
}

template <typename CovType>
GaussianState<CovType> apply_circuit(GaussianState<CovType> state, const std::vector<GateOp>& ops) {
    for (const auto& op : ops) state = apply_symplectic(std::move(state), op);
    return state;
}

// Dense covariance of a (possibly sparse) state, for checks at small m.
template <typename CovType>
Eigen::MatrixXd dense_cov(const GaussianState<CovType>& s) {
    return Eigen::MatrixXd(s.cov());
}

inline bool is_symplectic(const Eigen::MatrixXd& S, double tol = 1e-10) {
    if (S.rows() != S.cols() || S.rows() % 2 != 0) return false;
    const auto omega = symplectic_form(static_cast<std::size_t>(S.rows() / 2));
    return (S * omega * S.transpose() - omega).cwiseAbs().maxCoeff() <= tol;
}

template <typename CovType>
bool is_symmetric(const GaussianState<CovType>& s, double tol = 1e-10) {
    const Eigen::MatrixXd c = dense_cov(s);
    return (c - c.transpose()).cwiseAbs().maxCoeff() <= tol;
}

// Robertson-Schroedinger condition cov + (i/2) Omega >= 0.
template <typename CovType>
bool is_physical(const GaussianState<CovType>& s, double tol = 1e-8) {
    const Eigen::MatrixXd c = dense_cov(s);
    const Eigen::MatrixXd omega = symplectic_form(s.mode_count());
    const Eigen::MatrixXcd h = c.cast<std::complex<double>>() +
                               std::complex<double>(0, 0.5) * omega.cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

// det(2 cov); 1 for pure states.
template <typename CovType>
double purity_determinant(const GaussianState<CovType>& s) {
    return (2.0 * dense_cov(s)).determinant();
}

// Reduced state on `modes` (in the given order).
inline GaussianStateD reduced_state(const GaussianStateD& s, const std::vector<std::size_t>& modes) {
    const std::size_t m = s.mode_count();
    const auto k = static_cast<Eigen::Index>(modes.size());
    std::vector<Eigen::Index> idx;
    for (std::size_t mode : modes) {
        detail::check_gaussian_mode(mode, m);
        idx.push_back(static_cast<Eigen::Index>(mode));
    }
    for (std::size_t mode : modes) idx.push_back(static_cast<Eigen::Index>(m + mode));
    Eigen::VectorXd mean(2 * k);
    Eigen::MatrixXd cov(2 * k, 2 * k);
    for (Eigen::Index a = 0; a < 2 * k; ++a) {
        mean(a) = s.mean()(idx[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < 2 * k; ++b)
            cov(a, b) = s.cov()(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    return GaussianStateD::from_moments(std::move(mean), std::move(cov));
}

}  // namespace loopsim
