#include <algorithm>
#include <cmath>
#include <functional>

#include "loopsim/protocols.hpp"

namespace loopsim {

namespace {

// Golden-section maximisation of a unimodal f on [a, b].
double golden_max(const std::function<double(double)>& f, double a, double b, double tol) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Scan on a 0.01 lattice to bracket the global maximum, then refine.
double bracket_and_refine(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double step = 0.01;
    double best = lo, fbest = -1.0;
    for (double a = lo; a <= hi + 1e-12; a += step) {
        const double v = f(a);
        if (v > fbest) {
            fbest = v;
            best = a;
        }
    }
    return golden_max(f, std::max(lo, best - step), std::min(hi, best + step), tol);
}

Eigen::VectorXcd coherent_amplitudes(std::complex<double> alpha, std::size_t d) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(d));
    std::complex<double> term = std::exp(-0.5 * std::norm(alpha));
    for (std::size_t n = 0; n < d; ++n) {
        v(static_cast<Eigen::Index>(n)) = term;
        term *= alpha / std::sqrt(static_cast<double>(n + 1));
    }
    return v;
}

// Largest fidelity of s with any state in span(vectors).
double span_fidelity(const Eigen::MatrixXcd& rho, const std::vector<Eigen::VectorXcd>& vectors) {
    const auto k = static_cast<Eigen::Index>(vectors.size());
    Eigen::MatrixXcd V(rho.rows(), k);
    for (Eigen::Index i = 0; i < k; ++i) V.col(i) = vectors[static_cast<std::size_t>(i)];
    // Orthonormal basis of the span, dropping near-degenerate directions.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(V.adjoint() * V);
    Eigen::MatrixXcd Q(rho.rows(), 0);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double ev = es.eigenvalues()(i);
        if (ev > 1e-10 * es.eigenvalues().maxCoeff()) {
            Q.conservativeResize(Eigen::NoChange, Q.cols() + 1);
            Q.col(Q.cols() - 1) = V * es.eigenvectors().col(i) / std::sqrt(ev);
        }
    }
    // Best pure state inside the span: top eigenvalue of Q^dag rho Q.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> inner(Q.adjoint() * rho * Q, Eigen::EigenvaluesOnly);
    return inner.eigenvalues().maxCoeff();
}

double best_span_fit(const FockStateD& s, int components, double& alpha_out) {
    const Eigen::MatrixXcd rho = s.amplitudes() * s.amplitudes().adjoint();
    const std::size_t d = s.cutoff();
    double best = -1.0;
    for (int k = 0; k < 16; ++k) {
        const double phase = (components == 4 ? M_PI / 2 : M_PI) * k / 16.0;
        auto f = [&](double a) {
            a = std::max(a, 1e-3);
            std::vector<Eigen::VectorXcd> vs;
            for (int c = 0; c < components; ++c)
                vs.push_back(coherent_amplitudes(std::polar(a, phase + 2.0 * M_PI * c / components), d));
            return span_fidelity(rho, vs);
        };
        const double a = bracket_and_refine(f, 0.05, 3.0, 1e-4);
        const double v = f(a);
        if (v > best) {
            best = v;
            alpha_out = a;
        }
    }
    return best;
}

void check_single_mode(std::size_t m, const char* who) {
    if (m != 1) throw InvalidArgument(std::string(who) + " needs single-mode inputs");
}

}  // namespace

FockStateD coherent_state(std::complex<double> alpha, std::size_t cutoff) {
    return FockStateD::from_amplitudes(1, cutoff, coherent_amplitudes(alpha, cutoff));
}

FockStateD cat_state(std::complex<double> alpha, int parity, std::size_t cutoff) {
    if (parity != 0 && parity != 1) throw InvalidArgument("cat parity must be 0 (even) or 1 (odd)");
    // Unnormalized alpha^n/sqrt(n!) on the chosen parity; the common factor drops out.
    if (std::abs(alpha) < 1e-6) alpha = std::polar(1e-6, std::arg(alpha));
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(cutoff));
    std::complex<double> term = 1.0;
    for (std::size_t n = 0; n < cutoff; ++n) {
        if (static_cast<int>(n % 2) == parity) v(static_cast<Eigen::Index>(n)) = term;
        term *= alpha / std::sqrt(static_cast<double>(n + 1));
    }
    return FockStateD::from_amplitudes(1, cutoff, std::move(v));
}

FockStateD make_small_cat(double r, std::size_t cutoff, double phi, const EngineOptions& opt) {
    if (r < 0.0) throw InvalidArgument("squeezing parameter must be >= 0");
    return apply_gate(FockStateD::basis(cutoff, {1}), GateOp{Squeeze{0, r, phi}}, opt);
}

CatFit fit_cat(const FockStateD& s, int parity, double phase, double lo, double hi, double tol) {
    check_single_mode(s.mode_count(), "fit_cat");
    auto f = [&](double a) { return fidelity(cat_state(std::polar(a, phase), parity, s.cutoff()), s); };
    const double a = bracket_and_refine(f, lo, hi, tol);
    return {a, f(a)};
}

CatFit fit_cat(const DensityOperatorD& rho, int parity, double phase, double lo, double hi, double tol) {
    check_single_mode(rho.mode_count(), "fit_cat");
    auto f = [&](double a) { return fidelity(cat_state(std::polar(a, phase), parity, rho.cutoff()), rho); };
    const double a = bracket_and_refine(f, lo, hi, tol);
    return {a, f(a)};
}

FockStateD tensor(const FockStateD& a, const FockStateD& b) {
    check_single_mode(a.mode_count(), "tensor");
    check_single_mode(b.mode_count(), "tensor");
    if (a.cutoff() != b.cutoff()) throw ShapeMismatch("tensor needs equal cutoffs");
    const auto d = static_cast<Eigen::Index>(a.cutoff());
    Eigen::VectorXcd v(d * d);
    for (Eigen::Index i = 0; i < d; ++i) v.segment(i * d, d) = a.amplitudes()(i) * b.amplitudes();
    return FockStateD::from_amplitudes(2, a.cutoff(), std::move(v), a.norm_weight() * b.norm_weight());
}

DensityOperatorD tensor(const DensityOperatorD& a, const DensityOperatorD& b) {
    check_single_mode(a.mode_count(), "tensor");
    check_single_mode(b.mode_count(), "tensor");
    if (a.cutoff() != b.cutoff()) throw ShapeMismatch("tensor needs equal cutoffs");
    const auto d = static_cast<Eigen::Index>(a.cutoff());
    Eigen::MatrixXcd M(d * d, d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) M.block(i * d, j * d, d, d) = a.matrix()(i, j) * b.matrix();
    return DensityOperatorD::from_matrix(2, a.cutoff(), std::move(M), a.trace_weight() * b.trace_weight());
}

void BreedingConfig::validate() const {
    if (r_initial < 0.0) throw InvalidArgument("r_initial must be >= 0");
    if (n_rounds < 0 || n_rounds > 4) throw InvalidArgument("n_rounds must lie in [0, 4]");
    if (accept_window && !(*accept_window > 0.0)) throw InvalidArgument("accept_window must be > 0");
    if (!(herald_eta >= 0.0 && herald_eta <= 1.0)) throw InvalidEta("herald_eta must lie in [0,1]");
    if (!(loss_eta_per_step >= 0.0 && loss_eta_per_step <= 1.0)) throw InvalidEta("loss_eta_per_step must lie in [0,1]");
    if (cutoff < 2) throw InvalidArgument("cutoff must be >= 2");
    if (trajectories == 0) throw InvalidArgument("trajectories must be >= 1");
}

namespace {

const GateOp kBreedSplitter = BeamSplitter{0, 1, M_PI / 4, 0.0};
constexpr double kBreedTheta = M_PI / 2;

template <typename State>
State feed_forward(const State& kept, double outcome, const EngineOptions& opt) {
    return apply_gate(kept, GateOp{Displace{0, std::complex<double>(0.0, -outcome / std::sqrt(2.0))}}, opt);
}

template <typename State>
BreedResult<State> finish(const State& joint, double outcome, bool ff, const EngineOptions& opt,
                          const QuadratureGrid& grid) {
    auto c = homodyne_project(joint, 1, kBreedTheta, outcome, grid);
    State kept = ff ? feed_forward(c.state, outcome, opt) : std::move(c.state);
    MeasurementRecord rec{MeasurementKind::Homodyne, 1, wrap_angle(kBreedTheta), outcome, c.weight, true};
    return {std::move(kept), rec};
}

DensityOperatorD lossy_inputs(const DensityOperatorD& a, const DensityOperatorD& b, double eta) {
    DensityOperatorD joint = tensor(a, b);
    if (eta < 1.0) {
        joint = apply_loss(joint, 0, eta);
        joint = apply_loss(joint, 1, eta);
    }
    return joint;
}

}  // namespace

BreedResult<FockStateD> breed_at_outcome(const FockStateD& a, const FockStateD& b, double outcome, bool ff,
                                         const EngineOptions& opt, const QuadratureGrid& grid) {
    const FockStateD joint = apply_gate(tensor(a, b), kBreedSplitter, opt);
    return finish(joint, outcome, ff, opt, grid);
}

BreedResult<DensityOperatorD> breed_at_outcome(const DensityOperatorD& a, const DensityOperatorD& b, double outcome,
                                               bool ff, const EngineOptions& opt, const QuadratureGrid& grid) {
    const DensityOperatorD joint = apply_gate(tensor(a, b), kBreedSplitter, opt);
    return finish(joint, outcome, ff, opt, grid);
}

BreedResult<FockStateD> breed_round(const FockStateD& a, const FockStateD& b, const BreedingConfig& cfg, Rng& rng,
                                    const EngineOptions& opt) {
    if (cfg.loss_eta_per_step < 1.0) throw InvalidArgument("lossy breeding needs density-operator inputs");
    const FockStateD joint = apply_gate(tensor(a, b), kBreedSplitter, opt);
    const MarginalSampler sampler(marginal_distribution(joint, 1, kBreedTheta, cfg.grid), cfg.grid);
    auto res = finish(joint, sampler.draw(rng), cfg.feed_forward, opt, cfg.grid);
    if (cfg.accept_window) res.record.accepted = std::abs(res.record.outcome) < *cfg.accept_window;
    return res;
}

BreedResult<DensityOperatorD> breed_round(const DensityOperatorD& a, const DensityOperatorD& b,
                                          const BreedingConfig& cfg, Rng& rng, const EngineOptions& opt) {
    const DensityOperatorD joint = apply_gate(lossy_inputs(a, b, cfg.loss_eta_per_step), kBreedSplitter, opt);
    const MarginalSampler sampler(marginal_distribution(joint, 1, kBreedTheta, cfg.grid), cfg.grid);
    auto res = finish(joint, sampler.draw(rng), cfg.feed_forward, opt, cfg.grid);
    if (cfg.accept_window) res.record.accepted = std::abs(res.record.outcome) < *cfg.accept_window;
    return res;
}

CompassResult make_compass(double r, std::size_t cutoff, const EngineOptions& opt) {
    if (r < 0.0) throw InvalidArgument("squeezing parameter must be >= 0");
    const FockStateD cat = make_small_cat(r, cutoff, 0.0, opt);
    const FockStateD turned = apply_gate(cat, GateOp{Phase{0, M_PI / 2}}, opt);
    const FockStateD joint = apply_gate(tensor(cat, turned), GateOp{BeamSplitter{0, 1, M_PI / 4, 0.0}}, opt);
    auto c = pnrd_project(joint, 1, 2);
    return {std::move(c.state), c.weight};
}

CompassFit compass_fit(const FockStateD& s) {
    check_single_mode(s.mode_count(), "compass_fit");
    CompassFit fit{};
    fit.single_cat_fidelity = best_span_fit(s, 2, fit.single_cat_alpha);
    fit.four_component_fidelity = best_span_fit(s, 4, fit.four_component_alpha);
    return fit;
}

}  // namespace loopsim
