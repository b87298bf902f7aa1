#pragma once

// Gate application on truncated Fock carriers.
//
// The density-operator path reuses the state-vector kernels: a D x D
// column-major matrix is a vector over 2m "modes" where the m column digits
// are slowest and the m row digits fastest. U rho U^dag is then U on the row
// copy of a mode and conj(U) on its column copy.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "loopsim/errors.hpp"
#include "loopsim/fock_state.hpp"
#include "loopsim/gate_matrix.hpp"
#include "loopsim/gates.hpp"

namespace loopsim {

template <typename Scalar>
struct BasicEngineOptions {
    // Leakage above `tolerance` throws TruncationError; above `warn_tolerance`
    // it is reported through `on_warning` when one is installed.
    double tolerance = 1e-6;
    double warn_tolerance = 1e-8;
    std::function<void(std::string_view gate, double leakage)> on_warning;
    GateCache<Scalar>* cache = nullptr;
    // States are renormalized after every gate. With this set, the retained
    // fraction is also multiplied into norm_weight / trace_weight, so
    // |amplitude|^2 * weight stays the untruncated probability of any pattern
    // the cutoff can represent.
    bool weight_leakage = false;

    GateCache<Scalar>& gate_cache() const { return cache ? *cache : default_gate_cache<Scalar>(); }
};

using EngineOptions = BasicEngineOptions<double>;

namespace detail {

template <typename Scalar>
using CVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using CMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

// v is a flat tensor over m modes of dimension d. Applies the d x d matrix U
// to `mode` in place.
template <typename Scalar, typename Derived>
void apply_mode_dense(std::complex<Scalar>* data, std::size_t m, std::size_t d, std::size_t mode,
                      const Eigen::MatrixBase<Derived>& U) {
    using Map = Eigen::Map<CMatrix<Scalar>>;
    const auto inner = static_cast<Eigen::Index>(ipow(d, m - 1 - mode));
    const auto outer = ipow(d, mode);
    const auto dd = static_cast<Eigen::Index>(d);
    const CMatrix<Scalar> Ut = U.transpose();
    for (std::size_t o = 0; o < outer; ++o) {
        Map block(data + static_cast<Eigen::Index>(o) * dd * inner, inner, dd);
        block = (block * Ut).eval();
    }
}

template <typename Scalar>
void apply_mode_diagonal(std::complex<Scalar>* data, std::size_t m, std::size_t d, std::size_t mode,
                         const CVector<Scalar>& diag) {
    using Map = Eigen::Map<CMatrix<Scalar>>;
    const auto inner = static_cast<Eigen::Index>(ipow(d, m - 1 - mode));
    const auto outer = ipow(d, mode);
    const auto dd = static_cast<Eigen::Index>(d);
    for (std::size_t o = 0; o < outer; ++o) {
        Map block(data + static_cast<Eigen::Index>(o) * dd * inner, inner, dd);
        block = block * diag.asDiagonal();
    }
}

// Two-mode operator S on the d^2 space indexed n_i * d + n_j.
template <typename Scalar>
void apply_modes_sparse(std::complex<Scalar>* data, std::size_t m, std::size_t d, std::size_t mode_i,
                        std::size_t mode_j, const SparseGate<Scalar>& S) {
    const std::size_t total = ipow(d, m);
    const std::size_t si = mode_stride(d, m, mode_i);
    const std::size_t sj = mode_stride(d, m, mode_j);
    CVector<Scalar> buf(static_cast<Eigen::Index>(d * d));
    CVector<Scalar> out(static_cast<Eigen::Index>(d * d));
    for (std::size_t base = 0; base < total; ++base) {
        if ((base / si) % d != 0 || (base / sj) % d != 0) continue;
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) buf(static_cast<Eigen::Index>(a * d + b)) = data[base + a * si + b * sj];
        out.noalias() = S * buf;
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) data[base + a * si + b * sj] = out(static_cast<Eigen::Index>(a * d + b));
    }
}

// Contracts `mode` against the weights w: out(rest) = sum_n w_n v(.., n, ..).
template <typename Scalar>
CVector<Scalar> contract_mode(const std::complex<Scalar>* data, std::size_t m, std::size_t d, std::size_t mode,
                              const CVector<Scalar>& w) {
    using CMap = Eigen::Map<const CMatrix<Scalar>>;
    const auto inner = static_cast<Eigen::Index>(ipow(d, m - 1 - mode));
    const auto outer = ipow(d, mode);
    const auto dd = static_cast<Eigen::Index>(d);
    CVector<Scalar> out(static_cast<Eigen::Index>(outer) * inner);
    for (std::size_t o = 0; o < outer; ++o) {
        CMap block(data + static_cast<Eigen::Index>(o) * dd * inner, inner, dd);
        out.segment(static_cast<Eigen::Index>(o) * inner, inner).noalias() = block * w;
    }
    return out;
}

inline void check_mode(std::size_t mode, std::size_t mode_count) {
    if (mode >= mode_count)
        throw InvalidMode("mode " + std::to_string(mode) + " out of range for " + std::to_string(mode_count) +
                          "-mode state");
}

inline void check_eta(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidEta("transmissivity must lie in [0,1], got " + std::to_string(eta));
}

inline void check_gate(const GateOp& op, std::size_t mode_count) {
    for (std::size_t mode : modes_of(op)) check_mode(mode, mode_count);
    if (const auto* bs = std::get_if<BeamSplitter>(&op); bs && bs->mode_i == bs->mode_j)
        throw InvalidMode("beamsplitter needs two distinct modes");
    if (const auto* sq = std::get_if<Squeeze>(&op); sq && sq->r < 0.0)
        throw InvalidArgument("squeezing parameter must be >= 0");
    if (const auto* l = std::get_if<Loss>(&op)) check_eta(l->eta);
}

template <typename Scalar>
void guard_leakage(double leakage, std::string_view gate, const BasicEngineOptions<Scalar>& opt) {
    if (leakage > opt.tolerance)
        throw TruncationError(std::string(gate) + " leaked " + std::to_string(leakage) +
                                  " of the population above the cutoff",
                              leakage);
    if (leakage > opt.warn_tolerance && opt.on_warning) opt.on_warning(gate, leakage);
}

// Applies a unitary gate (not Loss) to a flat tensor over m modes. `conj`
// selects the complex-conjugated matrix, used for density-matrix columns.
template <typename Scalar>
void apply_unitary_flat(std::complex<Scalar>* data, std::size_t m, std::size_t d, std::size_t offset,
                        const GateOp& op, bool conj, GateCache<Scalar>& cache) {
    using C = std::complex<Scalar>;
    std::visit(
        [&](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Displace>) {
                const auto U = cache.displace(C(static_cast<Scalar>(g.beta.real()), static_cast<Scalar>(g.beta.imag())), d);
                if (conj) apply_mode_dense<Scalar>(data, m, d, offset + g.mode, U->conjugate());
                else apply_mode_dense<Scalar>(data, m, d, offset + g.mode, *U);
            } else if constexpr (std::is_same_v<T, Squeeze>) {
                const auto U = cache.squeeze(static_cast<Scalar>(g.r), static_cast<Scalar>(g.phi), d);
                if (conj) apply_mode_dense<Scalar>(data, m, d, offset + g.mode, U->conjugate());
                else apply_mode_dense<Scalar>(data, m, d, offset + g.mode, *U);
            } else if constexpr (std::is_same_v<T, BeamSplitter>) {
                const auto S = cache.beamsplitter(static_cast<Scalar>(g.theta), static_cast<Scalar>(g.phi), d);
                if (conj) {
                    const SparseGate<Scalar> Sc = S->conjugate();
                    apply_modes_sparse<Scalar>(data, m, d, offset + g.mode_i, offset + g.mode_j, Sc);
                } else {
                    apply_modes_sparse<Scalar>(data, m, d, offset + g.mode_i, offset + g.mode_j, *S);
                }
            } else if constexpr (std::is_same_v<T, Phase> || std::is_same_v<T, Kerr>) {
                CVector<Scalar> diag = std::is_same_v<T, Phase> ? phase_diagonal<Scalar>(static_cast<Scalar>(g.phi), d)
                                                                : kerr_diagonal<Scalar>(static_cast<Scalar>(g.phi), d);
                if (conj) diag = diag.conjugate().eval();
                apply_mode_diagonal<Scalar>(data, m, d, offset + g.mode, diag);
            }
        },
        op);
}

inline bool is_diagonal_gate(const GateOp& op) {
    return std::holds_alternative<Phase>(op) || std::holds_alternative<Kerr>(op);
}

}  // namespace detail

// Applies `op` to a pure state. Loss requires a DensityOperator.
template <typename Scalar>
FockState<Scalar> apply_gate(const FockState<Scalar>& state, const GateOp& op,
                             const BasicEngineOptions<Scalar>& opt = {}) {
    detail::check_gate(op, state.mode_count());
    if (std::holds_alternative<Loss>(op))
        throw InvalidArgument("loss needs a density operator; promote the pure state first");
    auto v = state.amplitudes();
    detail::apply_unitary_flat<Scalar>(v.data(), state.mode_count(), state.cutoff(), 0, op, false, opt.gate_cache());
    const Scalar retained = v.squaredNorm();
    if (!detail::is_diagonal_gate(op)) {
        const double leakage = std::max(0.0, 1.0 - static_cast<double>(retained));
        detail::guard_leakage(leakage, kind_name(to_program_op(op)), opt);
    }
    FockState<Scalar> out = state;
    out.assign(std::move(v));
    if (opt.weight_leakage) out.set_norm_weight(state.norm_weight() * retained);
    return out;
}

template <typename Scalar>
DensityOperator<Scalar> apply_loss(const DensityOperator<Scalar>& rho, std::size_t mode, double eta);

template <typename Scalar>
DensityOperator<Scalar> apply_gate(const DensityOperator<Scalar>& rho, const GateOp& op,
                                   const BasicEngineOptions<Scalar>& opt = {}) {
    detail::check_gate(op, rho.mode_count());
    if (const auto* l = std::get_if<Loss>(&op)) return apply_loss(rho, l->mode, l->eta);
    const std::size_t m = rho.mode_count();
    auto M = rho.matrix();
    // Rows carry digits m..2m-1, columns 0..m-1.
    detail::apply_unitary_flat<Scalar>(M.data(), 2 * m, rho.cutoff(), m, op, false, opt.gate_cache());
    detail::apply_unitary_flat<Scalar>(M.data(), 2 * m, rho.cutoff(), 0, op, true, opt.gate_cache());
    const Scalar retained = M.trace().real();
    if (!detail::is_diagonal_gate(op)) {
        const double leakage = std::max(0.0, 1.0 - static_cast<double>(retained));
        detail::guard_leakage(leakage, kind_name(to_program_op(op)), opt);
    }
    M = (Scalar(0.5) * (M + M.adjoint())).eval();
    DensityOperator<Scalar> out = rho;
    out.assign(std::move(M));
    if (opt.weight_leakage) out.set_trace_weight(rho.trace_weight() * retained);
    return out;
}

// Pure-loss channel: sum_k K_k rho K_k^dag.
template <typename Scalar>
DensityOperator<Scalar> apply_loss(const DensityOperator<Scalar>& rho, std::size_t mode, double eta) {
    detail::check_mode(mode, rho.mode_count());
    detail::check_eta(eta);
    if (eta == 1.0) return rho;
    const std::size_t m = rho.mode_count();
    const std::size_t d = rho.cutoff();
    using Matrix = typename DensityOperator<Scalar>::Matrix;
    Matrix acc = Matrix::Zero(rho.matrix().rows(), rho.matrix().cols());
    for (const auto& K : loss_kraus<Scalar>(static_cast<Scalar>(eta), d)) {
        Matrix term = rho.matrix();
        detail::apply_mode_dense<Scalar>(term.data(), 2 * m, d, m + mode, K);
        detail::apply_mode_dense<Scalar>(term.data(), 2 * m, d, mode, K.conjugate());
        acc += term;
    }
    acc = (Scalar(0.5) * (acc + acc.adjoint())).eval();
    DensityOperator<Scalar> out = rho;
    out.assign(std::move(acc));
    return out;
}

template <typename Scalar>
FockState<Scalar> apply_circuit(FockState<Scalar> state, const std::vector<GateOp>& ops,
                                const BasicEngineOptions<Scalar>& opt = {}) {
    for (const auto& op : ops) state = apply_gate(state, op, opt);
    return state;
}

template <typename Scalar>
DensityOperator<Scalar> apply_circuit(DensityOperator<Scalar> rho, const std::vector<GateOp>& ops,
                                      const BasicEngineOptions<Scalar>& opt = {}) {
    for (const auto& op : ops) rho = apply_gate(rho, op, opt);
    return rho;
}

// Applies an arbitrary d x d operator to one mode without renormalizing;
// returns the raw image (possibly unnormalized).
template <typename Scalar, typename Derived>
typename FockState<Scalar>::Vector apply_mode_operator(const FockState<Scalar>& state, std::size_t mode,
                                                       const Eigen::MatrixBase<Derived>& op) {
    detail::check_mode(mode, state.mode_count());
    auto v = state.amplitudes();
    detail::apply_mode_dense<Scalar>(v.data(), state.mode_count(), state.cutoff(), mode, op);
    return v;
}

template <typename State>
struct Heralded {
    State state;
    double weight;  // squared norm of the unnormalized image
};

template <typename Scalar>
Scalar mean_photon_number(const FockState<Scalar>& state, std::size_t mode) {
    detail::check_mode(mode, state.mode_count());
    const std::size_t m = state.mode_count();
    const std::size_t d = state.cutoff();
    const std::size_t stride = mode_stride(d, m, mode);
    Scalar acc = 0;
    for (std::size_t i = 0; i < state.dimension(); ++i)
        acc += static_cast<Scalar>((i / stride) % d) * std::norm(state.amplitudes()(static_cast<Eigen::Index>(i)));
    return acc;
}

template <typename Scalar>
Scalar mean_photon_number(const DensityOperator<Scalar>& rho, std::size_t mode) {
    detail::check_mode(mode, rho.mode_count());
    const std::size_t stride = mode_stride(rho.cutoff(), rho.mode_count(), mode);
    Scalar acc = 0;
    for (std::size_t i = 0; i < rho.dimension(); ++i)
        acc += static_cast<Scalar>((i / stride) % rho.cutoff()) *
               rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    return acc;
}

// Population of one mode's top Fock level.
template <typename Scalar>
Scalar top_level_population(const FockState<Scalar>& state, std::size_t mode) {
    const std::size_t d = state.cutoff();
    const std::size_t stride = mode_stride(d, state.mode_count(), mode);
    Scalar acc = 0;
    for (std::size_t i = 0; i < state.dimension(); ++i)
        if ((i / stride) % d == d - 1) acc += std::norm(state.amplitudes()(static_cast<Eigen::Index>(i)));
    return acc;
}

// a^dag on one mode. The exact image norm is <n>+1; the part promoted out of
// the top level is lost, so a populated top level is a truncation failure.
template <typename Scalar>
Heralded<FockState<Scalar>> photon_add(const FockState<Scalar>& state, std::size_t mode,
                                       const BasicEngineOptions<Scalar>& opt = {}) {
    detail::check_mode(mode, state.mode_count());
    const Scalar top = top_level_population(state, mode);
    detail::guard_leakage(static_cast<double>(top), "photon_add", opt);
    auto v = apply_mode_operator(state, mode, creation<Scalar>(state.cutoff()));
    const double weight = static_cast<double>(mean_photon_number(state, mode)) + 1.0;
    FockState<Scalar> out = state;
    out.assign(std::move(v));
    return {std::move(out), weight};
}

template <typename Scalar>
Heralded<FockState<Scalar>> photon_subtract(const FockState<Scalar>& state, std::size_t mode) {
    detail::check_mode(mode, state.mode_count());
    auto v = apply_mode_operator(state, mode, annihilation<Scalar>(state.cutoff()));
    const double weight = static_cast<double>(v.squaredNorm());
    if (!(weight > 1e-300)) throw ZeroNormError("photon subtraction on a state with no photons in the mode");
    FockState<Scalar> out = state;
    out.assign(std::move(v));
    return {std::move(out), weight};
}

template <typename Scalar>
Heralded<DensityOperator<Scalar>> photon_subtract(const DensityOperator<Scalar>& rho, std::size_t mode) {
    detail::check_mode(mode, rho.mode_count());
    const std::size_t m = rho.mode_count();
    const auto a = annihilation<Scalar>(rho.cutoff());
    auto M = rho.matrix();
    detail::apply_mode_dense<Scalar>(M.data(), 2 * m, rho.cutoff(), m + mode, a);
    detail::apply_mode_dense<Scalar>(M.data(), 2 * m, rho.cutoff(), mode, a.conjugate());
    const double weight = static_cast<double>(M.trace().real());
    if (!(weight > 1e-300)) throw ZeroNormError("photon subtraction on a state with no photons in the mode");
    DensityOperator<Scalar> out = rho;
    out.assign(std::move(M));
    return {std::move(out), weight};
}

template <typename Scalar>
Heralded<DensityOperator<Scalar>> photon_add(const DensityOperator<Scalar>& rho, std::size_t mode,
                                             const BasicEngineOptions<Scalar>& opt = {}) {
    detail::check_mode(mode, rho.mode_count());
    const std::size_t m = rho.mode_count();
    const std::size_t d = rho.cutoff();
    const std::size_t stride = mode_stride(d, m, mode);
    Scalar top = 0;
    for (std::size_t i = 0; i < rho.dimension(); ++i)
        if ((i / stride) % d == d - 1) top += rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    detail::guard_leakage(static_cast<double>(top), "photon_add", opt);
    const auto ad = creation<Scalar>(d);
    auto M = rho.matrix();
    detail::apply_mode_dense<Scalar>(M.data(), 2 * m, d, m + mode, ad);
    detail::apply_mode_dense<Scalar>(M.data(), 2 * m, d, mode, ad.conjugate());
    const double weight = static_cast<double>(mean_photon_number(rho, mode)) + 1.0;
    DensityOperator<Scalar> out = rho;
    out.assign(std::move(M));
    return {std::move(out), weight};
}

namespace detail {

// Eigenvalues of a PSD matrix with rounding noise (|lambda| below a relative
// floor) set to zero; their square roots would otherwise add ~1e-8 each.
template <typename Vec>
Vec clamp_noise(const Vec& vals) {
    using Scalar = typename Vec::Scalar;
    const Scalar floor = std::numeric_limits<Scalar>::epsilon() * Scalar(64) *
                         std::max(Scalar(1), vals.cwiseAbs().maxCoeff()) * Scalar(vals.size());
    return vals.unaryExpr([floor](Scalar v) { return v > floor ? v : Scalar(0); });
}

template <typename Scalar>
CMatrix<Scalar> psd_sqrt(const CMatrix<Scalar>& m) {
    Eigen::SelfAdjointEigenSolver<CMatrix<Scalar>> es(m);
    const auto vals = clamp_noise(es.eigenvalues()).cwiseSqrt().eval();
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

template <typename A, typename B>
void check_same_shape(const A& a, const B& b) {
    if (a.mode_count() != b.mode_count() || a.cutoff() != b.cutoff())
        throw ShapeMismatch("fidelity needs states with matching mode_count and cutoff");
}

inline double clamp_unit(double f) { return std::clamp(f, 0.0, 1.0); }

}  // namespace detail

template <typename Scalar>
double fidelity(const FockState<Scalar>& a, const FockState<Scalar>& b) {
    detail::check_same_shape(a, b);
    return detail::clamp_unit(static_cast<double>(std::norm(a.amplitudes().dot(b.amplitudes()))));
}

template <typename Scalar>
double fidelity(const FockState<Scalar>& a, const DensityOperator<Scalar>& b) {
    detail::check_same_shape(a, b);
    return detail::clamp_unit(
        static_cast<double>((a.amplitudes().adjoint() * b.matrix() * a.amplitudes())(0).real()));
}

template <typename Scalar>
double fidelity(const DensityOperator<Scalar>& a, const FockState<Scalar>& b) {
    return fidelity(b, a);
}

// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2.
template <typename Scalar>
double fidelity(const DensityOperator<Scalar>& a, const DensityOperator<Scalar>& b) {
    detail::check_same_shape(a, b);
    const auto sa = detail::psd_sqrt<Scalar>(a.matrix());
    const detail::CMatrix<Scalar> inner = sa * b.matrix() * sa;
    Eigen::SelfAdjointEigenSolver<detail::CMatrix<Scalar>> es(Scalar(0.5) * (inner + inner.adjoint()));
    const Scalar tr = detail::clamp_noise(es.eigenvalues()).cwiseSqrt().sum();
    return detail::clamp_unit(static_cast<double>(tr * tr));
}

// Per-mode population near the cutoff. `top_level` is the literal population
// of level d-1. `edge_band` sums levels >= max(1, d-2), which also catches
// parity-structured states (squeezed vacuum lives on even levels only, so at
// even d its top level is empty even when the tail is badly clipped).
struct TruncationReport {
    std::vector<double> top_level;
    std::vector<double> edge_band;

    double max_top_level() const {
        return top_level.empty() ? 0.0 : *std::max_element(top_level.begin(), top_level.end());
    }
    double max_edge_band() const {
        return edge_band.empty() ? 0.0 : *std::max_element(edge_band.begin(), edge_band.end());
    }
    bool exceeds(double tol) const { return max_edge_band() > tol; }
};

namespace detail {
template <typename Get>
TruncationReport truncation_report_impl(std::size_t m, std::size_t d, std::size_t dim, Get&& population) {
    TruncationReport rep;
    rep.top_level.assign(m, 0.0);
    rep.edge_band.assign(m, 0.0);
    const std::size_t band_start = std::max<std::size_t>(1, d - 2);
    for (std::size_t i = 0; i < dim; ++i) {
        const double p = population(i);
        if (p == 0.0) continue;
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t n = (i / mode_stride(d, m, k)) % d;
            if (n == d - 1) rep.top_level[k] += p;
            if (n >= band_start) rep.edge_band[k] += p;
        }
    }
    return rep;
}
}  // namespace detail

template <typename Scalar>
TruncationReport truncation_report(const FockState<Scalar>& s) {
    return detail::truncation_report_impl(s.mode_count(), s.cutoff(), s.dimension(), [&](std::size_t i) {
        return static_cast<double>(std::norm(s.amplitudes()(static_cast<Eigen::Index>(i))));
    });
}

template <typename Scalar>
TruncationReport truncation_report(const DensityOperator<Scalar>& rho) {
    return detail::truncation_report_impl(rho.mode_count(), rho.cutoff(), rho.dimension(), [&](std::size_t i) {
        const auto k = static_cast<Eigen::Index>(i);
        return static_cast<double>(rho.matrix()(k, k).real());
    });
}

// Reduced density operator on `keep` (kept in the given order).
template <typename Scalar>
DensityOperator<Scalar> reduced_density(const FockState<Scalar>& s, const std::vector<std::size_t>& keep) {
    const std::size_t m = s.mode_count();
    const std::size_t d = s.cutoff();
    for (std::size_t k : keep) detail::check_mode(k, m);
    std::vector<std::size_t> traced;
    for (std::size_t k = 0; k < m; ++k)
        if (std::find(keep.begin(), keep.end(), k) == keep.end()) traced.push_back(k);
    const std::size_t dk = ipow(d, keep.size());
    const std::size_t dt = ipow(d, traced.size());
    detail::CMatrix<Scalar> M(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dt));
    for (std::size_t i = 0; i < s.dimension(); ++i) {
        std::size_t row = 0, col = 0;
        for (std::size_t k : keep) row = row * d + (i / mode_stride(d, m, k)) % d;
        for (std::size_t k : traced) col = col * d + (i / mode_stride(d, m, k)) % d;
        M(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = s.amplitudes()(static_cast<Eigen::Index>(i));
    }
    return DensityOperator<Scalar>::from_matrix(keep.size(), d, M * M.adjoint(), s.norm_weight());
}

template <typename Scalar>
DensityOperator<Scalar> trace_out_mode(const DensityOperator<Scalar>& rho, std::size_t mode) {
    detail::check_mode(mode, rho.mode_count());
    const std::size_t m = rho.mode_count();
    const std::size_t d = rho.cutoff();
    const auto dr = static_cast<Eigen::Index>(ipow(d, m - 1));
    detail::CMatrix<Scalar> acc = detail::CMatrix<Scalar>::Zero(dr, dr);
    for (std::size_t n = 0; n < d; ++n) {
        detail::CVector<Scalar> e = detail::CVector<Scalar>::Zero(static_cast<Eigen::Index>(d));
        e(static_cast<Eigen::Index>(n)) = 1;
        auto rows = detail::contract_mode<Scalar>(rho.matrix().data(), 2 * m, d, m + mode, e);
        auto both = detail::contract_mode<Scalar>(rows.data(), 2 * m - 1, d, mode, e);
        acc += Eigen::Map<detail::CMatrix<Scalar>>(both.data(), dr, dr);
    }
    return DensityOperator<Scalar>::from_matrix(m - 1, d, std::move(acc), rho.trace_weight());
}

template <typename Scalar>
DensityOperator<Scalar> reduced_density(const DensityOperator<Scalar>& rho, const std::vector<std::size_t>& keep) {
    for (std::size_t k : keep) detail::check_mode(k, rho.mode_count());
    if (!std::is_sorted(keep.begin(), keep.end()))
        throw InvalidArgument("reduced_density on a density operator keeps modes in ascending order");
    DensityOperator<Scalar> out = rho;
    for (std::size_t k = rho.mode_count(); k-- > 0;)
        if (std::find(keep.begin(), keep.end(), k) == keep.end()) out = trace_out_mode(out, k);
    return out;
}

// <psi| D(beta) |psi> on one mode. Uses only the d x d block of D, which is
// exact for states supported inside the cutoff.
template <typename Scalar>
std::complex<Scalar> expect_displacement(const FockState<Scalar>& s, std::size_t mode, std::complex<Scalar> beta,
                                         GateCache<Scalar>& cache = default_gate_cache<Scalar>()) {
    const auto D = cache.displace(beta, s.cutoff());
    return s.amplitudes().dot(apply_mode_operator(s, mode, *D));
}

template <typename Scalar>
std::complex<Scalar> expect_displacement(const DensityOperator<Scalar>& rho, std::size_t mode,
                                         std::complex<Scalar> beta,
                                         GateCache<Scalar>& cache = default_gate_cache<Scalar>()) {
    detail::check_mode(mode, rho.mode_count());
    const auto D = cache.displace(beta, rho.cutoff());
    auto M = rho.matrix();
    detail::apply_mode_dense<Scalar>(M.data(), 2 * rho.mode_count(), rho.cutoff(), rho.mode_count() + mode, *D);
    return M.trace();
}

}  // namespace loopsim
