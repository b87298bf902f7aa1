#pragma once

// Homodyne and photon-number measurements with conditional states.
//
// A measured mode is removed: the conditional state lives on the remaining
// modes (in their original order) and its norm_weight / trace_weight is
// multiplied by the branch probability or density.

#include <Eigen/Dense>

#include <cmath>
#include <algorithm>
#include <complex>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "loopsim/errors.hpp"
#include "loopsim/fock_engine.hpp"
#include "loopsim/fock_state.hpp"
#include "loopsim/hermite.hpp"
#include "loopsim/rng.hpp"

namespace loopsim {

// Branches below this probability (or density) are treated as impossible.
inline constexpr double kMinBranchWeight = 1e-14;

enum class MeasurementKind { Homodyne, Pnrd };

struct MeasurementRecord {
    MeasurementKind kind = MeasurementKind::Homodyne;
    std::size_t mode = 0;
    double theta = 0.0;
    double outcome = 0.0;  // x for homodyne, n for pnrd
    double weight = 0.0;
    bool accepted = true;
};

inline double wrap_angle(double theta) {
    double t = std::fmod(theta, 2.0 * M_PI);
    if (t < 0) t += 2.0 * M_PI;
    if (t >= 2.0 * M_PI) t = 0.0;
    return t;
}

inline nlohmann::ordered_json to_json(const MeasurementRecord& r) {
    nlohmann::ordered_json j;
    j["kind"] = r.kind == MeasurementKind::Homodyne ? "homodyne" : "pnrd";
    j["mode"] = r.mode;
    j["theta"] = r.theta;
    if (r.kind == MeasurementKind::Pnrd) j["outcome"] = static_cast<long long>(std::llround(r.outcome));
    else j["outcome"] = r.outcome;
    j["weight"] = r.weight;
    j["accepted"] = r.accepted;
    return j;
}

inline void write_records_jsonl(std::ostream& out, const std::vector<MeasurementRecord>& records) {
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

template <typename State>
struct Conditioned {
    State state;
    double weight;  // probability (pnrd) or probability density (homodyne)
};

namespace detail {

template <typename Scalar>
CVector<Scalar> homodyne_weights(std::size_t cutoff, double theta, double x) {
    const auto psi = hermite_functions<double>(x, cutoff);
    CVector<Scalar> w(static_cast<Eigen::Index>(cutoff));
    for (std::size_t n = 0; n < cutoff; ++n)
        w(static_cast<Eigen::Index>(n)) =
            std::polar(static_cast<Scalar>(psi(static_cast<Eigen::Index>(n))), static_cast<Scalar>(-theta * n));
    return w;
}

template <typename Scalar>
CVector<Scalar> basis_weights(std::size_t cutoff, int n) {
    CVector<Scalar> w = CVector<Scalar>::Zero(static_cast<Eigen::Index>(cutoff));
    w(n) = 1;
    return w;
}

// Projects `mode` of a pure state onto <w| (w given as the bra's conjugate,
// i.e. out = sum_n w_n psi(.., n, ..)).
template <typename Scalar>
std::pair<CVector<Scalar>, double> project_pure(const FockState<Scalar>& s, std::size_t mode, const CVector<Scalar>& w) {
    check_mode(mode, s.mode_count());
    auto out = contract_mode<Scalar>(s.amplitudes().data(), s.mode_count(), s.cutoff(), mode, w);
    const double p = static_cast<double>(out.squaredNorm());
    return {std::move(out), p};
}

template <typename Scalar>
std::pair<CMatrix<Scalar>, double> project_mixed(const DensityOperator<Scalar>& rho, std::size_t mode,
                                                 const CVector<Scalar>& w) {
    const std::size_t m = rho.mode_count();
    check_mode(mode, m);
    auto rows = contract_mode<Scalar>(rho.matrix().data(), 2 * m, rho.cutoff(), m + mode, w);
    const CVector<Scalar> wc = w.conjugate();
    auto both = contract_mode<Scalar>(rows.data(), 2 * m - 1, rho.cutoff(), mode, wc);
    const auto dr = static_cast<Eigen::Index>(ipow(rho.cutoff(), m - 1));
    CMatrix<Scalar> out = Eigen::Map<CMatrix<Scalar>>(both.data(), dr, dr);
    out = (Scalar(0.5) * (out + out.adjoint())).eval();
    const double p = static_cast<double>(out.trace().real());
    return {std::move(out), p};
}

template <typename Scalar>
FockState<Scalar> conditioned_pure(const FockState<Scalar>& s, CVector<Scalar> v, double weight) {
    return FockState<Scalar>::from_amplitudes(s.mode_count() - 1, s.cutoff(), std::move(v),
                                              s.norm_weight() * static_cast<Scalar>(weight));
}

template <typename Scalar>
DensityOperator<Scalar> conditioned_mixed(const DensityOperator<Scalar>& rho, CMatrix<Scalar> M, double weight) {
    return DensityOperator<Scalar>::from_matrix(rho.mode_count() - 1, rho.cutoff(), std::move(M),
                                                rho.trace_weight() * static_cast<Scalar>(weight));
}

inline void check_outcome(double x, const QuadratureGrid& grid) {
    if (!grid.contains(x))
        throw InvalidArgument("homodyne outcome " + std::to_string(x) + " outside the quadrature grid");
}

}  // namespace detail

// Conditions on quadrature x_theta = x cos(theta) + p sin(theta) taking value x.
template <typename Scalar>
Conditioned<FockState<Scalar>> homodyne_project(const FockState<Scalar>& s, std::size_t mode, double theta, double x,
                                                const QuadratureGrid& grid = {}) {
    detail::check_outcome(x, grid);
    auto [v, density] = detail::project_pure(s, mode, detail::homodyne_weights<Scalar>(s.cutoff(), theta, x));
    if (!(density > kMinBranchWeight)) throw ZeroDensity("homodyne outcome has vanishing probability density");
    return {detail::conditioned_pure(s, std::move(v), density), density};
}

template <typename Scalar>
Conditioned<DensityOperator<Scalar>> homodyne_project(const DensityOperator<Scalar>& rho, std::size_t mode,
                                                      double theta, double x, const QuadratureGrid& grid = {}) {
    detail::check_outcome(x, grid);
    auto [M, density] = detail::project_mixed(rho, mode, detail::homodyne_weights<Scalar>(rho.cutoff(), theta, x));
    if (!(density > kMinBranchWeight)) throw ZeroDensity("homodyne outcome has vanishing probability density");
    return {detail::conditioned_mixed(rho, std::move(M), density), density};
}

template <typename Scalar>
double pnrd_probability(const FockState<Scalar>& s, std::size_t mode, int n) {
    if (n < 0 || static_cast<std::size_t>(n) >= s.cutoff()) throw InvalidArgument("photon count outside the cutoff");
    return detail::project_pure(s, mode, detail::basis_weights<Scalar>(s.cutoff(), n)).second;
}

template <typename Scalar>
double pnrd_probability(const DensityOperator<Scalar>& rho, std::size_t mode, int n) {
    if (n < 0 || static_cast<std::size_t>(n) >= rho.cutoff()) throw InvalidArgument("photon count outside the cutoff");
    return detail::project_mixed(rho, mode, detail::basis_weights<Scalar>(rho.cutoff(), n)).second;
}

template <typename Scalar>
Conditioned<FockState<Scalar>> pnrd_project(const FockState<Scalar>& s, std::size_t mode, int n) {
    if (n < 0 || static_cast<std::size_t>(n) >= s.cutoff()) throw InvalidArgument("photon count outside the cutoff");
    auto [v, p] = detail::project_pure(s, mode, detail::basis_weights<Scalar>(s.cutoff(), n));
    if (!(p > kMinBranchWeight)) throw ZeroProbability("detection of " + std::to_string(n) + " photons is impossible");
    return {detail::conditioned_pure(s, std::move(v), p), p};
}

template <typename Scalar>
Conditioned<DensityOperator<Scalar>> pnrd_project(const DensityOperator<Scalar>& rho, std::size_t mode, int n) {
    if (n < 0 || static_cast<std::size_t>(n) >= rho.cutoff()) throw InvalidArgument("photon count outside the cutoff");
    auto [M, p] = detail::project_mixed(rho, mode, detail::basis_weights<Scalar>(rho.cutoff(), n));
    if (!(p > kMinBranchWeight)) throw ZeroProbability("detection of " + std::to_string(n) + " photons is impossible");
    return {detail::conditioned_mixed(rho, std::move(M), p), p};
}

// Loss-degraded Fock state: |n><n| through a pure-loss channel of
// transmissivity eta_herald.
inline DensityOperatorD heralded_fock_source(int n, double eta_herald, std::size_t cutoff = 12) {
    detail::check_eta(eta_herald);
    if (n < 0 || static_cast<std::size_t>(n) >= cutoff) throw InvalidArgument("photon number outside the cutoff");
    return apply_loss(DensityOperatorD::basis(cutoff, {n}), 0, eta_herald);
}

// Single-mode reduced density matrix used by the marginal routines.
template <typename Scalar>
detail::CMatrix<Scalar> single_mode_density(const FockState<Scalar>& s, std::size_t mode) {
    return reduced_density(s, {mode}).matrix();
}

template <typename Scalar>
detail::CMatrix<Scalar> single_mode_density(const DensityOperator<Scalar>& rho, std::size_t mode) {
    return reduced_density(rho, {mode}).matrix();
}

// p(x) = w^T rho conj(w), w_n = e^{-i theta n} psi_n(x), on the grid points.
template <typename State>
std::vector<double> marginal_distribution(const State& s, std::size_t mode, double theta,
                                          const QuadratureGrid& grid = {}) {
    detail::check_mode(mode, s.mode_count());
    const auto rho = single_mode_density(s, mode).template cast<std::complex<double>>().eval();
    const std::size_t d = s.cutoff();
    const Eigen::MatrixXd table = hermite_table(grid, d);
    Eigen::VectorXcd phases(static_cast<Eigen::Index>(d));
    for (std::size_t n = 0; n < d; ++n) phases(static_cast<Eigen::Index>(n)) = std::polar(1.0, -theta * n);
    const Eigen::MatrixXcd W = table.cast<std::complex<double>>() * phases.asDiagonal();
    const Eigen::MatrixXcd WR = W * rho;
    std::vector<double> p(grid.points);
    for (std::size_t i = 0; i < grid.points; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        p[i] = std::max(0.0, (WR.row(k).array() * W.row(k).conjugate().array()).sum().real());
    }
    return p;
}

template <typename State>
struct Sampled {
    double outcome;
    State state;
    MeasurementRecord record;
};

// Inverse-CDF sampler over a density tabulated on a grid. The CDF is the
// trapezoid integral, so within a cell x is drawn as if the density were
// constant there; sampling_density reports the cell-average density.
class MarginalSampler {
public:
    MarginalSampler(std::vector<double> density, const QuadratureGrid& grid)
        : grid_(grid), density_(std::move(density)), cdf_(density_.size(), 0.0) {
        const double h = grid_.step();
        for (std::size_t i = 1; i < density_.size(); ++i)
            cdf_[i] = cdf_[i - 1] + 0.5 * h * (density_[i - 1] + density_[i]);
        if (!(cdf_.back() > 0.0)) throw ZeroDensity("homodyne marginal vanishes on the grid");
    }

    double total() const { return cdf_.back(); }
    const std::vector<double>& density() const { return density_; }
    const QuadratureGrid& grid() const { return grid_; }

    double draw(Rng& rng, double* sampling_density = nullptr) const {
        const double u = rng.uniform() * cdf_.back();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        std::size_t hi = static_cast<std::size_t>(std::distance(cdf_.begin(), it));
        hi = std::clamp<std::size_t>(hi, 1, cdf_.size() - 1);
        const std::size_t lo = hi - 1;
        const double span = cdf_[hi] - cdf_[lo];
        const double frac = span > 0.0 ? (u - cdf_[lo]) / span : 0.5;
        if (sampling_density) *sampling_density = span / grid_.step() / cdf_.back();
        return grid_.at(lo) + frac * grid_.step();
    }

private:
    QuadratureGrid grid_;
    std::vector<double> density_;
    std::vector<double> cdf_;
};

template <typename State>
Sampled<State> homodyne_sample(const State& s, std::size_t mode, double theta, Rng& rng,
                               const QuadratureGrid& grid = {}) {
    const MarginalSampler sampler(marginal_distribution(s, mode, theta, grid), grid);
    const double x = sampler.draw(rng);
    auto c = homodyne_project(s, mode, theta, x, grid);
    MeasurementRecord rec{MeasurementKind::Homodyne, mode, wrap_angle(theta), x, c.weight, true};
    return {x, std::move(c.state), rec};
}

// Photon-number sample from P(n) over n < cutoff.
template <typename State>
Sampled<State> pnrd_sample(const State& s, std::size_t mode, Rng& rng) {
    std::vector<double> probs(s.cutoff());
    double total = 0.0;
    for (std::size_t n = 0; n < s.cutoff(); ++n) total += probs[n] = pnrd_probability(s, mode, static_cast<int>(n));
    double u = rng.uniform() * total;
    int pick = static_cast<int>(s.cutoff()) - 1;
    for (std::size_t n = 0; n < s.cutoff(); ++n) {
        u -= probs[n];
        if (u < 0.0 && probs[n] > kMinBranchWeight) {
            pick = static_cast<int>(n);
            break;
        }
    }
    auto c = pnrd_project(s, mode, pick);
    MeasurementRecord rec{MeasurementKind::Pnrd, mode, 0.0, static_cast<double>(pick), c.weight, true};
    return {static_cast<double>(pick), std::move(c.state), rec};
}

}  // namespace loopsim
