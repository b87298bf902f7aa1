#pragma once

// Non-Gaussian state protocols: small cats from squeezed single photons,
// breeding, compass states, GKP synthesis, and the throughput model.
//
// Orientation. S(r, 0)|1> squeezes x, so its lobes sit along p (an
// imaginary-amplitude odd cat). Breeding measures the ancilla's p quadrature:
// along the lobes this enlarges the cat, across the lobes (S(r, pi/2)|1>, as
// used for GKP) it builds the binomial comb in x.
//
// GKP convention: square lattice with stabilizer length l = 2 sqrt(pi).
//   s_x       = |<exp(-i l p)>|     = |<D(l/sqrt2)>|         (shift x by l)
//   s_logical = |<exp(i (l/2) x)>|  = |<D(i l/(2 sqrt2))>|
// Vacuum gives e^{-l^2/4} and e^{-l^2/16}.

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loopsim/fock_engine.hpp"
#include "loopsim/fock_state.hpp"
#include "loopsim/hermite.hpp"
#include "loopsim/measurement.hpp"
#include "loopsim/peaks.hpp"
#include "loopsim/rng.hpp"

namespace loopsim {

inline const double kGkpLength = 2.0 * std::sqrt(M_PI);

// ---- cats ------------------------------------------------------------------

// Normalized |alpha> + (-1)^parity |-alpha>; parity 0 even, 1 odd.
FockStateD cat_state(std::complex<double> alpha, int parity, std::size_t cutoff);

FockStateD coherent_state(std::complex<double> alpha, std::size_t cutoff);

// S(r, phi)|1>. phi = 0 gives p-lobes, phi = pi/2 gives x-lobes.
FockStateD make_small_cat(double r, std::size_t cutoff = 24, double phi = 0.0,
                          const EngineOptions& opt = {});

struct CatFit {
    double alpha;     // |alpha|
    double fidelity;  // overlap with the normalized fitted cat
};

// Best fit to cat_state(alpha e^{i phase}, parity) over alpha in [lo, hi]: a
// coarse scan brackets the maximum, golden-section refines it to `tol`.
CatFit fit_cat(const FockStateD& s, int parity, double phase, double lo = 0.0, double hi = 3.0, double tol = 1e-4);
CatFit fit_cat(const DensityOperatorD& rho, int parity, double phase, double lo = 0.0, double hi = 3.0,
               double tol = 1e-4);

// Two single-mode states as modes (0, 1).
FockStateD tensor(const FockStateD& a, const FockStateD& b);
DensityOperatorD tensor(const DensityOperatorD& a, const DensityOperatorD& b);

// ---- breeding --------------------------------------------------------------

struct BreedingConfig {
    double r_initial = 0.48;
    int n_rounds = 2;
    bool feed_forward = true;
    std::optional<double> accept_window;  // accept |ancilla outcome| < w
    bool window_on_output = false;        // judge only the final round's record
    double herald_eta = 1.0;
    double loss_eta_per_step = 1.0;
    std::size_t cutoff = 40;
    std::size_t trajectories = 1000;
    std::uint64_t seed = 1;
    QuadratureGrid grid{};

    bool lossless() const { return herald_eta == 1.0 && loss_eta_per_step == 1.0; }
    void validate() const;
};

template <typename State>
struct BreedResult {
    State state;
    MeasurementRecord record;
};

// 50:50 beamsplitter (theta = pi/4, phi = 0), mode 0 kept and mode 1 the
// ancilla; p-homodyne on the ancilla. With feed-forward the kept mode is
// displaced by -p_m in p.
BreedResult<FockStateD> breed_at_outcome(const FockStateD& a, const FockStateD& b, double outcome, bool feed_forward,
                                         const EngineOptions& opt = {}, const QuadratureGrid& grid = {});
BreedResult<DensityOperatorD> breed_at_outcome(const DensityOperatorD& a, const DensityOperatorD& b, double outcome,
                                               bool feed_forward, const EngineOptions& opt = {},
                                               const QuadratureGrid& grid = {});

BreedResult<FockStateD> breed_round(const FockStateD& a, const FockStateD& b, const BreedingConfig& cfg, Rng& rng,
                                    const EngineOptions& opt = {});
BreedResult<DensityOperatorD> breed_round(const DensityOperatorD& a, const DensityOperatorD& b,
                                          const BreedingConfig& cfg, Rng& rng, const EngineOptions& opt = {});

// ---- GKP -------------------------------------------------------------------

struct GKPMetrics {
    double s_x = 0.0;
    double s_logical = 0.0;
    double var_x_peak = 0.0;
    double var_p_peak = 0.0;
    double var_product = 0.0;
};

GKPMetrics gkp_metrics(const FockStateD& s, const QuadratureGrid& grid = {});
GKPMetrics gkp_metrics(const DensityOperatorD& rho, const QuadratureGrid& grid = {});

struct GkpTrajectory {
    DensityOperatorD state;  // pure trajectories are stored promoted
    std::vector<MeasurementRecord> records;
    bool accepted = true;
    // Monte-Carlo weight: (product of branch densities) / (product of
    // sampling densities) / trajectories. Sums to 1 in expectation.
    double weight = 0.0;
};

struct GkpEnsemble {
    std::vector<GkpTrajectory> trajectories;
    DensityOperatorD full_mixture{1, 2};
    DensityOperatorD accepted_mixture{1, 2};
    double acceptance = 0.0;
    GKPMetrics metrics;       // on the accepted mixture
    double s_x_stderr = 0.0;  // standard error of s_x over accepted trajectories
};

GkpEnsemble synthesize_gkp(const BreedingConfig& cfg, const EngineOptions& opt = {});

// ---- compass ---------------------------------------------------------------

struct CompassResult {
    FockStateD state;
    double herald_probability;
};

// S(r)|1> and the same cat rotated by a quarter turn meet on a 50:50
// beamsplitter; the ancilla is heralded on two photons. At r = 0.6 the input
// leaks ~1e-6 above 24 levels, hence the larger default cutoff.
CompassResult make_compass(double r, std::size_t cutoff = 32, const EngineOptions& opt = {});

struct CompassFit {
    double single_cat_fidelity;  // best two-component superposition
    double single_cat_alpha;
    double four_component_fidelity;  // best superposition of |i^k alpha>
    double four_component_alpha;
};

CompassFit compass_fit(const FockStateD& s);

// ---- throughput ------------------------------------------------------------

// rep_rate * acceptance * herald_eta^sources_per_event.
double rate_model(double rep_rate_hz, double acceptance_fraction, double herald_eta, int sources_per_event = 1);

}  // namespace loopsim
