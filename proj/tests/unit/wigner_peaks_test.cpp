#include <gtest/gtest.h>

#include "loopsim/fock_engine.hpp"
#include "loopsim/measurement.hpp"
#include "loopsim/peaks.hpp"
#include "loopsim/wigner.hpp"
#include "oracles.hpp"

using namespace loopsim;

namespace {

FockStateD coherent(std::complex<double> a, std::size_t d) {
    return FockStateD::from_amplitudes(1, d, oracle::coherent(a, d));
}

double parity(const FockStateD& s) {
    double acc = 0;
    for (std::size_t n = 0; n < s.cutoff(); ++n) acc += (n % 2 ? -1.0 : 1.0) * std::norm(s.amplitudes()(static_cast<Eigen::Index>(n)));
    return acc;
}

std::vector<double> gaussian_mix(const std::vector<double>& xs, const std::vector<double>& centers, double sigma) {
    std::vector<double> out(xs.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (double c : centers)
            out[i] += std::exp(-(xs[i] - c) * (xs[i] - c) / (2 * sigma * sigma)) /
                      (std::sqrt(2 * M_PI) * sigma * static_cast<double>(centers.size()));
    return out;
}

}  // namespace

TEST(Wigner, ConventionAnchors) {
    const auto vac = wigner(FockStateD::vacuum(1, 4));
    EXPECT_NEAR(vac.values(100, 100), 1.0 / M_PI, 1e-14);
    EXPECT_NEAR(vac.integral(), 1.0, 1e-4);
    const auto one = wigner(FockStateD::basis(4, {1}));
    EXPECT_NEAR(one.values(100, 100), -1.0 / M_PI, 1e-14);
}

TEST(Wigner, SinglePhotonMatchesClosedForm) {
    const auto g = wigner(FockStateD::basis(6, {1}));
    for (std::size_t i = 0; i < 201; i += 17)
        for (std::size_t j = 0; j < 201; j += 13) {
            const double r2 = g.spec.x(i) * g.spec.x(i) + g.spec.p(j) * g.spec.p(j);
            EXPECT_NEAR(g.values(i, j), (2 * r2 - 1) * std::exp(-r2) / M_PI, 1e-13);
        }
}

TEST(Wigner, CoherentStateIsDisplacedGaussian) {
    const std::complex<double> a(0.7, -0.3);
    const auto g = wigner(coherent(a, 30));
    const double x0 = std::sqrt(2.0) * a.real(), p0 = std::sqrt(2.0) * a.imag();
    for (std::size_t i = 0; i < 201; i += 23)
        for (std::size_t j = 0; j < 201; j += 19) {
            const double dx = g.spec.x(i) - x0, dp = g.spec.p(j) - p0;
            EXPECT_NEAR(g.values(i, j), std::exp(-dx * dx - dp * dp) / M_PI, 1e-10);
        }
}

TEST(Wigner, NegativityVolume) {
    EXPECT_EQ(negativity_volume(wigner(FockStateD::vacuum(1, 4))), 0.0);
    EXPECT_LT(negativity_volume(wigner(coherent({0.8, 0.4}, 30))), 1e-12);
    // Integral of the negative core of W_1: 2 e^{-1/2} - 1.
    EXPECT_NEAR(negativity_volume(wigner(FockStateD::basis(4, {1}))), 2 * std::exp(-0.5) - 1, 1e-3);
    EXPECT_NEAR(negativity_volume_adaptive(FockStateD::basis(4, {1})), 2 * std::exp(-0.5) - 1, 1e-8);
    EXPECT_LT(negativity_volume_adaptive(coherent({0.8, 0.4}, 30)), 1e-12);
}

TEST(Wigner, KerrOnCoherentIsNegative) {
    const auto s = apply_gate(coherent({0.5, 0.0}, 12), GateOp{Kerr{0, M_PI / 3}});
    EXPECT_LT(wigner(s).min(), -0.01);
}

TEST(Wigner, Errors) {
    EXPECT_THROW(wigner(FockStateD::vacuum(2, 3)), InvalidArgument);
    EXPECT_THROW(wigner(coherent({2.0, 0.0}, 30), WignerGridSpec::symmetric(1.0, 41)), GridTooCoarse);
}

TEST(Wigner, DensityPathMatchesPurePath) {
    oracle::Gen gen(31);
    const auto s = FockStateD::from_amplitudes(1, 8, gen.state(1, 8, 6));
    const auto a = wigner(s), b = wigner(DensityOperatorD(s));
    EXPECT_LT((a.values - b.values).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(WignerProperty, ParityAtOrigin) {
    oracle::Gen gen(33);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = FockStateD::from_amplitudes(1, 10, gen.state(1, 10, 1 + gen.index(10)));
        const auto rho = single_mode_density(s, 0);
        EXPECT_NEAR(wigner_point(rho, 0.0, 0.0) * M_PI, parity(s), 1e-6);
    }
}

TEST(WignerProperty, MarginalsMatchHomodyne) {
    oracle::Gen gen(35);
    const QuadratureGrid line{-6.0, 6.0, 201};
    for (int trial = 0; trial < 8; ++trial) {
        const auto s = FockStateD::from_amplitudes(1, 10, gen.state(1, 10, 6));
        const auto g = wigner(s);
        const auto wx = g.x_marginal(), wp = g.p_marginal();
        const auto hx = marginal_distribution(s, 0, 0.0, line), hp = marginal_distribution(s, 0, M_PI / 2, line);
        for (std::size_t i = 0; i < 201; ++i) {
            EXPECT_NEAR(wx[i], hx[i], 1e-3);
            EXPECT_NEAR(wp[i], hp[i], 1e-3);
        }
    }
}

TEST(WignerProperty, NegativityPhaseInvariant) {
    oracle::Gen gen(37);
    for (int trial = 0; trial < 4; ++trial) {
        const auto s = FockStateD::from_amplitudes(1, 8, gen.state(1, 8, 4));
        const double base = negativity_volume_adaptive(s);
        EXPECT_NEAR(negativity_volume(wigner(s)), base, 1e-3);
        for (double phi : {0.4, 1.3, 2.9}) {
            const auto rotated = apply_gate(s, GateOp{Phase{0, phi}});
            EXPECT_NEAR(negativity_volume_adaptive(rotated), base, 1e-6) << "trial " << trial << " phi " << phi;
        }
    }
}

// ---- peaks -----------------------------------------------------------------

TEST(Peaks, VacuumMarginal) {
    const QuadratureGrid grid;
    const auto pa = peak_analysis(grid.values(), marginal_distribution(FockStateD::vacuum(1, 4), 0, 0.0, grid));
    ASSERT_EQ(pa.peaks.size(), 1u);
    EXPECT_NEAR(pa.central_peak().position, 0.0, 1e-9);
    EXPECT_NEAR(pa.central_peak().variance, 0.5, 0.025);
}

TEST(Peaks, TwoGaussianComb) {
    const QuadratureGrid grid;
    const double c = std::sqrt(M_PI);
    const auto pa = peak_analysis(grid.values(), gaussian_mix(grid.values(), {-c, c}, 0.2));
    ASSERT_EQ(pa.peaks.size(), 2u);
    EXPECT_NEAR(pa.peaks[0].position, -c, 1e-3);
    EXPECT_NEAR(pa.peaks[1].position, c, 1e-3);
    for (const auto& pk : pa.peaks) EXPECT_NEAR(pk.variance, 0.04, 0.002);
    EXPECT_NEAR(pa.window_half_width, c, 1e-3);
}

TEST(Peaks, EvenCombHasUniformSpacing) {
    const QuadratureGrid grid;
    const double l = 2 * std::sqrt(M_PI);
    const auto pa = peak_analysis(grid.values(), gaussian_mix(grid.values(), {-2 * l / 2, -l / 2, 0.0, l / 2, l}, 0.25));
    ASSERT_EQ(pa.peaks.size(), 5u);
    EXPECT_LT(pa.spacing_deviation(), 1e-3);
    EXPECT_EQ(pa.central, 2u);
}

TEST(Peaks, ThresholdDropsSmallBumps) {
    const QuadratureGrid grid;
    auto d = gaussian_mix(grid.values(), {0.0}, 0.3);
    const auto small = gaussian_mix(grid.values(), {3.0}, 0.3);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += 0.05 * small[i];
    EXPECT_EQ(peak_analysis(grid.values(), d).peaks.size(), 1u);
    EXPECT_EQ(peak_analysis(grid.values(), d, 0.01).peaks.size(), 2u);
}

TEST(Peaks, Errors) {
    const std::vector<double> xs{0, 1, 2, 3};
    EXPECT_THROW(peak_analysis(xs, {0, 0, 0, 0}), NoPeakFound);
    EXPECT_THROW(peak_analysis(xs, {0, 1}), InvalidArgument);
    EXPECT_THROW(peak_analysis(xs, {1, 2, 3, 4}), NoPeakFound);  // monotone, no interior maximum
}
