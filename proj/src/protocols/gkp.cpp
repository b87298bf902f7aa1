#include <cmath>
#include <numeric>
#include <optional>

#include "loopsim/protocols.hpp"

namespace loopsim {

namespace {

template <typename State>
GKPMetrics metrics_impl(const State& s, const QuadratureGrid& grid) {
    if (s.mode_count() != 1) throw InvalidArgument("gkp_metrics needs a single-mode state");
    GKPMetrics m;
    const double l = kGkpLength;
    m.s_x = std::abs(expect_displacement(s, 0, std::complex<double>(l / std::sqrt(2.0), 0.0)));
    m.s_logical = std::abs(expect_displacement(s, 0, std::complex<double>(0.0, l / (2.0 * std::sqrt(2.0)))));
    const std::vector<double> xs = grid.values();
    m.var_x_peak = peak_analysis(xs, marginal_distribution(s, 0, 0.0, grid)).central_peak().variance;
    m.var_p_peak = peak_analysis(xs, marginal_distribution(s, 0, M_PI / 2, grid)).central_peak().variance;
    m.var_product = m.var_x_peak * m.var_p_peak;
    return m;
}

// One node of the breeding tree: a kept state, the ancilla records that led
// to it, and the ratio of exact to sampling densities along the way.
template <typename State>
struct Node {
    State state;
    std::vector<MeasurementRecord> records;
    double ratio = 1.0;
};

FockStateD prepare(const FockStateD& a, const FockStateD& b, const BreedingConfig&, const EngineOptions& opt) {
    return apply_gate(tensor(a, b), GateOp{BeamSplitter{0, 1, M_PI / 4, 0.0}}, opt);
}

DensityOperatorD prepare(const DensityOperatorD& a, const DensityOperatorD& b, const BreedingConfig& cfg,
                         const EngineOptions& opt) {
    DensityOperatorD joint = tensor(a, b);
    if (cfg.loss_eta_per_step < 1.0) {
        joint = apply_loss(joint, 0, cfg.loss_eta_per_step);
        joint = apply_loss(joint, 1, cfg.loss_eta_per_step);
    }
    return apply_gate(joint, GateOp{BeamSplitter{0, 1, M_PI / 4, 0.0}}, opt);
}

template <typename State>
Node<State> sample_breed(const State& joint, const MarginalSampler& sampler, const BreedingConfig& cfg, Rng& rng,
                         const EngineOptions& opt) {
    double q = 0.0;
    const double x = sampler.draw(rng, &q);
    auto c = homodyne_project(joint, 1, M_PI / 2, x, cfg.grid);
    State kept = std::move(c.state);
    if (cfg.feed_forward)
        kept = apply_gate(kept, GateOp{Displace{0, std::complex<double>(0.0, -x / std::sqrt(2.0))}}, opt);
    MeasurementRecord rec{MeasurementKind::Homodyne, 1, wrap_angle(M_PI / 2), x, c.weight, true};
    if (cfg.accept_window) rec.accepted = std::abs(x) < *cfg.accept_window;
    return {std::move(kept), {rec}, c.weight / q};
}

void reset_weight(FockStateD& s) { s.set_norm_weight(1.0); }
void reset_weight(DensityOperatorD& s) { s.set_trace_weight(1.0); }

FockStateD leaf_state(FockStateD*, const BreedingConfig& cfg, const EngineOptions& opt) {
    return make_small_cat(cfg.r_initial, cfg.cutoff, M_PI / 2, opt);
}

DensityOperatorD leaf_state(DensityOperatorD*, const BreedingConfig& cfg, const EngineOptions& opt) {
    const DensityOperatorD src = heralded_fock_source(1, cfg.herald_eta, cfg.cutoff);
    return apply_gate(src, GateOp{Squeeze{0, cfg.r_initial, M_PI / 2}}, opt);
}

template <typename State>
GkpEnsemble synthesize_impl(const BreedingConfig& cfg, const EngineOptions& opt) {
    // Leaves are identical, so the first round's joint state and its sampler
    // are shared by every trajectory.
    State leaf = leaf_state(static_cast<State*>(nullptr), cfg, opt);
    reset_weight(leaf);
    std::optional<State> first_joint;
    std::optional<MarginalSampler> first_sampler;
    if (cfg.n_rounds > 0) {
        first_joint = prepare(leaf, leaf, cfg, opt);
        first_sampler.emplace(marginal_distribution(*first_joint, 1, M_PI / 2, cfg.grid), cfg.grid);
    }

    GkpEnsemble out;
    const auto n_traj = cfg.n_rounds == 0 ? std::size_t{1} : cfg.trajectories;
    out.trajectories.reserve(n_traj);
    for (std::size_t t = 0; t < n_traj; ++t) {
        Rng rng = Rng::stream(cfg.seed, t);
        std::vector<Node<State>> level;
        if (cfg.n_rounds == 0) {
            level.push_back({leaf, {}, 1.0});
        } else {
            const std::size_t pairs = std::size_t{1} << (cfg.n_rounds - 1);
            for (std::size_t k = 0; k < pairs; ++k) level.push_back(sample_breed(*first_joint, *first_sampler, cfg, rng, opt));
        }
        while (level.size() > 1) {
            std::vector<Node<State>> next;
            for (std::size_t k = 0; k + 1 < level.size(); k += 2) {
                const State joint = prepare(level[k].state, level[k + 1].state, cfg, opt);
                const MarginalSampler sampler(marginal_distribution(joint, 1, M_PI / 2, cfg.grid), cfg.grid);
                Node<State> n = sample_breed(joint, sampler, cfg, rng, opt);
                std::vector<MeasurementRecord> recs = level[k].records;
                recs.insert(recs.end(), level[k + 1].records.begin(), level[k + 1].records.end());
                recs.insert(recs.end(), n.records.begin(), n.records.end());
                n.records = std::move(recs);
                n.ratio *= level[k].ratio * level[k + 1].ratio;
                next.push_back(std::move(n));
            }
            level = std::move(next);
        }
        Node<State>& root = level.front();
        GkpTrajectory tr{DensityOperatorD(root.state), std::move(root.records), true,
                         root.ratio / static_cast<double>(n_traj)};
        tr.state.set_trace_weight(1.0);
        if (cfg.accept_window && !tr.records.empty()) {
            if (cfg.window_on_output)
                tr.accepted = tr.records.back().accepted;
            else
                for (const auto& r : tr.records) tr.accepted = tr.accepted && r.accepted;
        }
        out.trajectories.push_back(std::move(tr));
    }

    const std::size_t dim = out.trajectories.front().state.dimension();
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(dim, dim), acc = full;
    double w_full = 0.0, w_acc = 0.0;
    for (const auto& tr : out.trajectories) {
        full += tr.weight * tr.state.matrix();
        w_full += tr.weight;
        if (tr.accepted) {
            acc += tr.weight * tr.state.matrix();
            w_acc += tr.weight;
        }
    }
    out.full_mixture = DensityOperatorD::from_matrix(1, cfg.cutoff, full);
    out.acceptance = w_acc / w_full;
    if (!(w_acc > 0.0)) throw ZeroProbability("no trajectory passed the acceptance window");
    out.accepted_mixture = DensityOperatorD::from_matrix(1, cfg.cutoff, acc);
    out.metrics = gkp_metrics(out.accepted_mixture, cfg.grid);

    // Per-trajectory <D> projected on the direction of the ensemble mean.
    const std::complex<double> beta(kGkpLength / std::sqrt(2.0), 0.0);
    std::vector<std::complex<double>> z;
    std::vector<double> w;
    std::complex<double> mean = 0.0;
    for (const auto& tr : out.trajectories)
        if (tr.accepted) {
            z.push_back(expect_displacement(tr.state, 0, beta));
            w.push_back(tr.weight / w_acc);
            mean += w.back() * z.back();
        }
    if (z.size() > 1) {
        const std::complex<double> dir = std::abs(mean) > 0.0 ? mean / std::abs(mean) : 1.0;
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double y = std::real(z[i] * std::conj(dir)) * w[i] * static_cast<double>(z.size());
            s1 += y;
            s2 += y * y;
        }
        const double n = static_cast<double>(z.size());
        const double var = (s2 - s1 * s1 / n) / (n - 1.0);
        out.s_x_stderr = std::sqrt(std::max(var, 0.0) / n);
    }
    return out;
}

}  // namespace

GKPMetrics gkp_metrics(const FockStateD& s, const QuadratureGrid& grid) { return metrics_impl(s, grid); }
GKPMetrics gkp_metrics(const DensityOperatorD& rho, const QuadratureGrid& grid) { return metrics_impl(rho, grid); }

GkpEnsemble synthesize_gkp(const BreedingConfig& cfg, const EngineOptions& opt) {
    cfg.validate();
    if (cfg.lossless()) return synthesize_impl<FockStateD>(cfg, opt);
    return synthesize_impl<DensityOperatorD>(cfg, opt);
}

}  // namespace loopsim
