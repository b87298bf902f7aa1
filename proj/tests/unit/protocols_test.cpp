#include <gtest/gtest.h>

#include <cmath>

#include "loopsim/protocols.hpp"
#include "loopsim/wigner.hpp"
#include "oracles.hpp"

using namespace loopsim;

namespace {

const double kL = 2.0 * std::sqrt(M_PI);

double parity(const FockStateD& s) {
    double acc = 0;
    for (std::size_t n = 0; n < s.cutoff(); ++n)
        acc += (n % 2 ? -1.0 : 1.0) * std::norm(s.amplitudes()(static_cast<Eigen::Index>(n)));
    return acc;
}

// Cat built from the oracle's coherent amplitudes, independent of cat_state.
FockStateD oracle_cat(std::complex<double> a, int par, std::size_t d) {
    const Eigen::VectorXcd v = oracle::coherent(a, d) + (par ? -1.0 : 1.0) * oracle::coherent(-a, d);
    return FockStateD::from_amplitudes(1, d, v / v.norm());
}

double best_parity_fit(const FockStateD& s, double phase, double* alpha) {
    const auto even = fit_cat(s, 0, phase), odd = fit_cat(s, 1, phase);
    const auto& best = even.fidelity > odd.fidelity ? even : odd;
    *alpha = best.alpha;
    return best.fidelity;
}

// Position-space comb: narrow Gaussians at k*l under a Gaussian envelope.
// Fock coefficients by quadrature against Hermite functions; s_x and
// s_logical from the wavefunction directly.
struct Comb {
    FockStateD state{1, 2};
    double s_x, s_logical;
};

Comb make_comb(double sigma, double envelope, std::size_t d) {
    const double lo = -20.0, hi = 20.0;
    const int n = 16001;
    const double h = (hi - lo) / (n - 1);
    auto psi = [&](double x) {
        double acc = 0.0;
        for (int k = -8; k <= 8; ++k) acc += std::exp(-(x - k * kL) * (x - k * kL) / (2 * sigma * sigma));
        return acc * std::exp(-x * x / (2 * envelope * envelope));
    };
    Eigen::VectorXd coeff = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    double norm = 0.0, shift = 0.0, logical_re = 0.0, logical_im = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = lo + h * i, f = psi(x);
        double hm = 0.0, hn = std::pow(M_PI, -0.25) * std::exp(-x * x / 2);
        for (std::size_t k = 0; k < d; ++k) {
            coeff(static_cast<Eigen::Index>(k)) += h * hn * f;
            const double next = std::sqrt(2.0 / (k + 1.0)) * x * hn - std::sqrt(k / (k + 1.0)) * hm;
            hm = hn;
            hn = next;
        }
        norm += h * f * f;
        shift += h * f * psi(x - kL);
        logical_re += h * f * f * std::cos(kL * x / 2);
        logical_im += h * f * f * std::sin(kL * x / 2);
    }
    EXPECT_GT(coeff.squaredNorm() / norm, 1.0 - 1e-8) << "comb not resolved by the cutoff";
    const Eigen::VectorXcd c = coeff.cast<std::complex<double>>() / coeff.norm();
    return {FockStateD::from_amplitudes(1, d, c), std::abs(shift) / norm, std::hypot(logical_re, logical_im) / norm};
}

DensityOperatorD mix(const DensityOperatorD& a, const DensityOperatorD& b, double lam) {
    return DensityOperatorD::from_matrix(1, a.cutoff(), lam * a.matrix() + (1 - lam) * b.matrix());
}

BreedingConfig gkp_config(bool ff, std::size_t trajectories) {
    BreedingConfig cfg;
    cfg.r_initial = 0.48;
    cfg.n_rounds = 2;
    cfg.feed_forward = ff;
    cfg.accept_window = 0.75;
    cfg.trajectories = trajectories;
    return cfg;
}

}  // namespace

// ---- small cats ------------------------------------------------------------

TEST(SmallCat, ZeroSqueezingIsSinglePhoton) {
    EXPECT_NEAR(fidelity(make_small_cat(0.0), FockStateD::basis(24, {1})), 1.0, 1e-12);
}

TEST(SmallCat, FitsOddCat) {
    const auto s = make_small_cat(0.3);
    const auto fit = fit_cat(s, 1, M_PI / 2);
    EXPECT_GT(fit.fidelity, 0.99);
    EXPECT_NEAR(fit.alpha, 0.960, 0.005);
    // the lobes lie along p: the real-axis odd cat fits worse
    EXPECT_LT(fit_cat(s, 1, 0.0).fidelity, fit.fidelity);
}

TEST(SmallCat, WignerAtOriginFixedByParity) {
    const auto s = make_small_cat(0.3);
    EXPECT_NEAR(wigner_point(single_mode_density(s, 0), 0.0, 0.0), -1.0 / M_PI, 1e-10);
}

TEST(SmallCat, Errors) {
    EXPECT_THROW(make_small_cat(-0.1), InvalidArgument);
    EXPECT_THROW(make_small_cat(2.0, 12), TruncationError);
}

TEST(SmallCatProperty, OddParity) {
    oracle::Gen gen(41);
    for (int trial = 0; trial < 20; ++trial) {
        const double r = gen.uniform(0.0, 0.6), phi = gen.uniform(0.0, 2 * M_PI);
        EXPECT_NEAR(parity(make_small_cat(r, 40, phi)), -1.0, 1e-10) << "r " << r << " phi " << phi;
    }
}

TEST(CatFit, RecoversOracleCat) {
    for (int par : {0, 1})
        for (double a : {0.5, 1.1, 2.0}) {
            const auto fit = fit_cat(oracle_cat({0.0, a}, par, 30), par, M_PI / 2);
            EXPECT_NEAR(fit.alpha, a, 2e-4);
            EXPECT_NEAR(fit.fidelity, 1.0, 1e-8);
        }
}

// ---- breeding --------------------------------------------------------------

TEST(Breeding, OddCatsBreedToLargerCat) {
    const double a = 1.5;
    const auto cat = oracle_cat({0.0, a}, 1, 30);
    const auto out = breed_at_outcome(cat, cat, 0.0, true);
    EXPECT_GT(fidelity(out.state, oracle_cat({0.0, std::sqrt(2.0) * a}, 0, 30)), 0.98);
    EXPECT_EQ(out.record.kind, MeasurementKind::Homodyne);
    EXPECT_EQ(out.record.mode, 1u);
    EXPECT_NEAR(out.record.theta, M_PI / 2, 1e-15);
}

// Amplitude ratio after one zero-outcome round, ideal cat inputs.
TEST(BreedingProperty, ZeroOutcomeGrowsAmplitudeBySqrt2) {
    for (double a : {0.8, 1.0, 1.2, 1.5}) {
        const auto cat = oracle_cat({0.0, a}, 1, 30);
        const auto out = breed_at_outcome(cat, cat, 0.0, true);
        double fitted = 0.0;
        best_parity_fit(out.state, M_PI / 2, &fitted);
        EXPECT_NEAR(fitted / a, std::sqrt(2.0), 0.02 * std::sqrt(2.0)) << "alpha " << a;
    }
}

TEST(Breeding, VacuumInputs) {
    const auto vac = FockStateD::vacuum(1, 8);
    const auto out = breed_at_outcome(vac, vac, 0.4, true);
    // p-homodyne on vacuum: kept mode stays vacuum; feed-forward shifts it by -0.4 in p
    EXPECT_NEAR(fidelity(breed_at_outcome(vac, vac, 0.4, false).state, vac), 1.0, 1e-10);
    EXPECT_NEAR(fidelity(out.state, FockStateD::from_amplitudes(1, 8, oracle::coherent({0.0, -0.4 / std::sqrt(2.0)}, 8))),
                1.0, 1e-8);

    BreedingConfig cfg;
    cfg.cutoff = 8;
    cfg.feed_forward = false;
    Rng rng = Rng::stream(5, 0);
    double s1 = 0, s2 = 0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        const double x = breed_round(vac, vac, cfg, rng).record.outcome;
        s1 += x;
        s2 += x * x;
    }
    const double mean = s1 / n, var = s2 / n - mean * mean;
    EXPECT_LT(std::abs(mean), 4 * std::sqrt(0.5 / n));
    EXPECT_NEAR(var, 0.5, 4 * 0.5 * std::sqrt(2.0 / n));
}

TEST(Breeding, AcceptWindowMarksRecords) {
    const auto cat = make_small_cat(0.3);
    BreedingConfig cfg;
    cfg.cutoff = 24;
    cfg.feed_forward = false;
    cfg.accept_window = 0.5;
    Rng rng = Rng::stream(9, 0);
    int rejected = 0;
    for (int i = 0; i < 30; ++i) {
        const auto res = breed_round(cat, cat, cfg, rng);
        EXPECT_EQ(res.record.accepted, std::abs(res.record.outcome) < 0.5);
        rejected += !res.record.accepted;
    }
    EXPECT_GT(rejected, 0);
}

TEST(Breeding, LossyPureInputsRejected) {
    const auto cat = make_small_cat(0.3);
    BreedingConfig cfg;
    cfg.loss_eta_per_step = 0.9;
    Rng rng = Rng::stream(1, 0);
    EXPECT_THROW(breed_round(cat, cat, cfg, rng), InvalidArgument);
}

TEST(Breeding, DensityPathMatchesPurePath) {
    const auto cat = make_small_cat(0.3);
    const auto p = breed_at_outcome(cat, cat, 0.3, true);
    const auto m = breed_at_outcome(DensityOperatorD(cat), DensityOperatorD(cat), 0.3, true);
    EXPECT_NEAR(fidelity(p.state, m.state), 1.0, 1e-10);
    EXPECT_NEAR(p.record.weight, m.record.weight, 1e-10);
}

TEST(Breeding, TwoRoundsStayNegative) {
    const auto cat = make_small_cat(0.3);
    const auto one = breed_at_outcome(cat, cat, 0.0, true).state;
    const auto two = breed_at_outcome(one, one, 0.0, true).state;
    EXPECT_LT(wigner(one).min(), 0.0);
    EXPECT_LT(wigner(two).min(), 0.0);
}

// ---- compass ---------------------------------------------------------------

TEST(Compass, FourfoldSymmetricAndNegative) {
    const auto c = make_compass(0.6);
    const auto g = wigner(c.state);
    const auto n = static_cast<Eigen::Index>(g.spec.nx);
    double mirror = 0.0, swap = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            mirror = std::max(mirror, std::abs(g.values(i, j) - g.values(n - 1 - i, j)));
            swap = std::max(swap, std::abs(g.values(i, j) - g.values(j, i)));
        }
    EXPECT_LT(mirror, 1e-6);
    EXPECT_LT(swap, 1e-6);
    EXPECT_LT(g.min(), 0.0);
    // sign changes along the x axis (and by symmetry along p)
    int flips = 0;
    for (Eigen::Index i = 1; i < n; ++i) flips += (g.values(i, n / 2) < 0) != (g.values(i - 1, n / 2) < 0);
    EXPECT_GE(flips, 2);
    EXPECT_GT(c.herald_probability, 0.0);
}

TEST(Compass, DegenerateInput) {
    // |1> and i|1> on a 50:50 splitter: (|2,0> - |0,2>)/sqrt2 up to phase;
    // two photons in the ancilla leave vacuum with probability 1/2.
    const auto c = make_compass(0.0);
    EXPECT_NEAR(c.herald_probability, 0.5, 1e-12);
    EXPECT_NEAR(fidelity(c.state, FockStateD::vacuum(1, 32)), 1.0, 1e-12);
}

TEST(Compass, FourComponentFitBeatsSingleCat) {
    const auto fit = compass_fit(make_compass(0.6).state);
    EXPECT_LT(fit.single_cat_fidelity, fit.four_component_fidelity);
    EXPECT_GT(fit.four_component_fidelity, 0.9);
}

// ---- GKP metrics -----------------------------------------------------------

TEST(GkpMetrics, Vacuum) {
    const auto m = gkp_metrics(FockStateD::vacuum(1, 24));
    EXPECT_NEAR(m.s_x, std::exp(-kL * kL / 4), 1e-10);
    EXPECT_NEAR(m.s_logical, std::exp(-kL * kL / 16), 1e-10);
    EXPECT_NEAR(m.var_product, 0.25, 0.25 * 0.05);
    EXPECT_GT(m.var_x_peak, 0.0);
    EXPECT_GT(m.var_p_peak, 0.0);
}

TEST(GkpMetrics, CombMatchesWavefunctionOracle) {
    double prev = 0.0;
    for (double env : {1.0, 2.0, 3.0}) {
        const auto comb = make_comb(0.35, env, 120);
        const auto m = gkp_metrics(comb.state);
        EXPECT_NEAR(m.s_x, comb.s_x, 1e-6) << "envelope " << env;
        EXPECT_NEAR(m.s_logical, comb.s_logical, 1e-6) << "envelope " << env;
        EXPECT_GT(m.s_x, prev);
        prev = m.s_x;
    }
    EXPECT_GT(prev, 0.7);
    // narrower teeth sharpen the logical stabilizer
    EXPECT_GT(gkp_metrics(make_comb(0.35, 3.0, 120).state).s_logical, gkp_metrics(make_comb(0.5, 3.0, 120).state).s_logical);
}

TEST(GkpMetrics, RangesForRandomStates) {
    oracle::Gen gen(43);
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = make_small_cat(gen.uniform(0.0, 0.6), 24, gen.uniform(0.0, 2 * M_PI));
        const auto m = gkp_metrics(s);
        for (double v : {m.s_x, m.s_logical}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        EXPECT_GT(m.var_x_peak, 0.0);
        EXPECT_GT(m.var_p_peak, 0.0);
    }
}

TEST(GkpMetricsProperty, ConvexOnMixtures) {
    oracle::Gen gen(47);
    const std::size_t d = 24;
    for (int trial = 0; trial < 10; ++trial) {
        // Centred Gaussian states have real positive characteristic values.
        const DensityOperatorD a(apply_gate(FockStateD::vacuum(1, d), GateOp{Squeeze{0, gen.uniform(0, 0.6), gen.uniform(0, 2 * M_PI)}}));
        const DensityOperatorD b(apply_gate(FockStateD::vacuum(1, d), GateOp{Squeeze{0, gen.uniform(0, 0.6), gen.uniform(0, 2 * M_PI)}}));
        const double lam = gen.uniform(0.0, 1.0);
        const auto ma = gkp_metrics(a), mb = gkp_metrics(b), mm = gkp_metrics(mix(a, b, lam));
        EXPECT_GE(mm.s_x, std::min(ma.s_x, mb.s_x) - 1e-12);
        EXPECT_LE(mm.s_x, std::max(ma.s_x, mb.s_x) + 1e-12);
        EXPECT_GE(mm.s_logical, std::min(ma.s_logical, mb.s_logical) - 1e-12);
        EXPECT_LE(mm.s_logical, std::max(ma.s_logical, mb.s_logical) + 1e-12);
        EXPECT_NEAR(mm.s_x, lam * ma.s_x + (1 - lam) * mb.s_x, 1e-12);
    }
}

// ---- synthesis -------------------------------------------------------------

TEST(Synthesis, ZeroRoundsIsBareSource) {
    BreedingConfig cfg;
    cfg.n_rounds = 0;
    const auto e = synthesize_gkp(cfg);
    ASSERT_EQ(e.trajectories.size(), 1u);
    EXPECT_NEAR(fidelity(e.accepted_mixture, make_small_cat(0.48, cfg.cutoff, M_PI / 2)), 1.0, 1e-10);
    // No comb: the bare x-lobed photon has two mirror-image peaks.
    const auto pa = peak_analysis(cfg.grid.values(), marginal_distribution(e.accepted_mixture, 0, 0.0, cfg.grid));
    ASSERT_EQ(pa.peaks.size(), 2u);
    EXPECT_NEAR(pa.peaks[0].position, -pa.peaks[1].position, 1e-9);
    EXPECT_NEAR(e.acceptance, 1.0, 1e-15);
}

TEST(Synthesis, TwoRoundsBuildComb) {
    const auto cfg = gkp_config(true, 200);
    const auto e = synthesize_gkp(cfg);
    const auto pa = peak_analysis(cfg.grid.values(), marginal_distribution(e.accepted_mixture, 0, 0.0, cfg.grid));
    EXPECT_GE(pa.peaks.size(), 3u);
    EXPECT_LT(e.metrics.var_product, 0.25);
    EXPECT_GT(e.acceptance, 0.0);
    EXPECT_LT(e.acceptance, 1.0);
    for (const auto& tr : e.trajectories) EXPECT_EQ(tr.records.size(), 3u);
}

TEST(Synthesis, DeterministicUnderSeed) {
    const auto cfg = gkp_config(true, 40);
    const auto a = synthesize_gkp(cfg), b = synthesize_gkp(cfg);
    EXPECT_EQ(a.metrics.s_x, b.metrics.s_x);
    EXPECT_EQ(a.acceptance, b.acceptance);
    EXPECT_EQ((a.accepted_mixture.matrix() - b.accepted_mixture.matrix()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SynthesisProperty, WeightsFormProbabilityMeasure) {
    for (int rounds : {1, 2}) {
        auto cfg = gkp_config(true, 300);
        cfg.n_rounds = rounds;
        cfg.seed = 11;
        const auto e = synthesize_gkp(cfg);
        double sum = 0.0, sq = 0.0;
        const double n = static_cast<double>(e.trajectories.size());
        for (const auto& tr : e.trajectories) {
            sum += tr.weight;
            sq += (tr.weight * n) * (tr.weight * n);
        }
        const double se = std::sqrt(std::max(sq / n - sum * sum, 0.0) / n);
        EXPECT_NEAR(sum, 1.0, 3 * se + 1e-3) << "rounds " << rounds;
    }
}

TEST(SynthesisProperty, FeedForwardRaisesStabilizer) {
    const auto on = synthesize_gkp(gkp_config(true, 1000));
    const auto off = synthesize_gkp(gkp_config(false, 1000));
    const double sigma = std::hypot(on.s_x_stderr, off.s_x_stderr);
    EXPECT_GT(on.metrics.s_x - off.metrics.s_x, 3 * sigma);
}

TEST(Synthesis, LossyRunUsesDensityPath) {
    auto cfg = gkp_config(true, 10);
    cfg.n_rounds = 1;
    cfg.herald_eta = 0.9;
    cfg.loss_eta_per_step = 0.95;
    cfg.cutoff = 30;
    const auto e = synthesize_gkp(cfg);
    EXPECT_LT(e.accepted_mixture.purity(), 1.0 - 1e-6);
}

TEST(Synthesis, ConfigValidation) {
    BreedingConfig cfg;
    cfg.n_rounds = 5;
    EXPECT_THROW(synthesize_gkp(cfg), InvalidArgument);
    cfg = {};
    cfg.accept_window = 0.0;
    EXPECT_THROW(synthesize_gkp(cfg), InvalidArgument);
    cfg = {};
    cfg.r_initial = -1;
    EXPECT_THROW(synthesize_gkp(cfg), InvalidArgument);
    cfg = {};
    cfg.herald_eta = 1.2;
    EXPECT_THROW(synthesize_gkp(cfg), InvalidEta);
}

// ---- rates -----------------------------------------------------------------

TEST(RateModel, Examples) {
    EXPECT_DOUBLE_EQ(rate_model(1e6, 1.0, 0.85), 0.85e6);
    EXPECT_DOUBLE_EQ(rate_model(250e3, 0.008, 1.0), 2000.0);
    EXPECT_EQ(rate_model(0.0, 0.5, 0.9), 0.0);
    EXPECT_DOUBLE_EQ(rate_model(1e6, 0.5, 0.9, 2), 1e6 * 0.5 * 0.81);
    EXPECT_THROW(rate_model(-1.0, 0.5, 0.9), InvalidArgument);
}
