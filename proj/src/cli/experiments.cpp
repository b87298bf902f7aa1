#include <cmath>
#include <fstream>
#include <limits>

#include "loopsim/bose_hubbard.hpp"
#include "loopsim/cli.hpp"
#include "loopsim/cluster.hpp"
#include "loopsim/errors.hpp"
#include "loopsim/fock_engine.hpp"
#include "loopsim/gbs.hpp"
#include "loopsim/protocols.hpp"
#include "loopsim/table.hpp"
#include "loopsim/wigner.hpp"

namespace loopsim::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Typed access to the resolved params; failures name the field.
class Params {
public:
    explicit Params(const ordered_json& j) : j_(j) {}

    double number(const std::string& k, double lo = -kInf, double hi = kInf) const {
        const auto& v = at(k);
        if (!v.is_number()) throw ManifestError(field(k), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x) || x < lo || x > hi) throw ManifestError(field(k), "out of range " + range(lo, hi));
        return x;
    }

    std::optional<double> optional_number(const std::string& k, double lo = -kInf) const {
        if (at(k).is_null()) return std::nullopt;
        return number(k, lo);
    }

    std::int64_t integer(const std::string& k, std::int64_t lo, std::int64_t hi) const {
        const auto& v = at(k);
        if (!v.is_number_integer()) throw ManifestError(field(k), "expected an integer");
        const auto x = v.get<std::int64_t>();
        if (x < lo || x > hi)
            throw ManifestError(field(k), "out of range " + range(static_cast<double>(lo), static_cast<double>(hi)));
        return x;
    }

    std::size_t count(const std::string& k, std::int64_t lo, std::int64_t hi) const {
        return static_cast<std::size_t>(integer(k, lo, hi));
    }

    bool flag(const std::string& k) const {
        if (!at(k).is_boolean()) throw ManifestError(field(k), "expected a boolean");
        return at(k).get<bool>();
    }

    std::string choice(const std::string& k, const std::vector<std::string>& options) const {
        const auto& v = at(k);
        if (v.is_string())
            for (const auto& o : options)
                if (v.get<std::string>() == o) return o;
        std::string all;
        for (const auto& o : options) all += (all.empty() ? "" : ", ") + o;
        throw ManifestError(field(k), "expected one of: " + all);
    }

    // A number or a nonempty list of numbers.
    std::vector<double> numbers(const std::string& k, double lo = -kInf) const {
        const auto& v = at(k);
        std::vector<double> out;
        if (v.is_number()) {
            out.push_back(number(k, lo));
            return out;
        }
        if (!v.is_array() || v.empty()) throw ManifestError(field(k), "expected a number or a nonempty list");
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ManifestError(field(k) + "[" + std::to_string(i) + "]", "expected a number");
            const double x = v[i].get<double>();
            if (!std::isfinite(x) || x < lo) throw ManifestError(field(k) + "[" + std::to_string(i) + "]", "out of range");
            out.push_back(x);
        }
        return out;
    }

    std::vector<Occupation> occupations(const std::string& k) const {
        const auto& v = at(k);
        if (!v.is_array() || v.empty()) throw ManifestError(field(k), "expected a nonempty list of occupation lists");
        std::vector<Occupation> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string f = field(k) + "[" + std::to_string(i) + "]";
            if (!v[i].is_array()) throw ManifestError(f, "expected a list of photon counts");
            Occupation occ;
            for (const auto& n : v[i]) {
                if (!n.is_number_integer() || n.get<int>() < 0) throw ManifestError(f, "photon counts must be integers >= 0");
                occ.push_back(n.get<int>());
            }
            out.push_back(std::move(occ));
        }
        return out;
    }

    // Runs a library-side validation, re-raising its complaint as a manifest error.
    template <typename F>
    static void checked(const std::string& where, F&& f) {
        try {
            f();
        } catch (const InvalidArgument& e) {
            throw ManifestError(where, e.what());
        } catch (const InvalidEta& e) {
            throw ManifestError(where, e.what());
        }
    }

private:
    const ordered_json& at(const std::string& k) const {
        if (!j_.contains(k)) throw ManifestError(field(k), "missing");
        return j_.at(k);
    }
    static std::string field(const std::string& k) { return "params." + k; }
    static std::string range(double lo, double hi) {
        return "[" + format_double(lo) + ", " + format_double(hi) + "]";
    }

    const ordered_json& j_;
};

void emit(const fs::path& dir, RunReport& rep, const std::string& name, const ResultTable& t) {
    export_results(t, dir / name, ExportFormat::Csv);
    rep.files.push_back(name);
}

void emit(const fs::path& dir, RunReport& rep, const std::string& name, const ResultRecord& r) {
    export_record(r, dir / name);
    rep.files.push_back(name);
}

void note(RunReport& rep, const std::string& key, double v) { rep.summary.push_back(key + " = " + format_double(v)); }

ResultTable wigner_table(const WignerGrid& g) {
    ResultTable t({"x", "p", "W"});
    t.rows.reserve(g.spec.nx * g.spec.np);
    for (std::size_t i = 0; i < g.spec.nx; ++i)
        for (std::size_t j = 0; j < g.spec.np; ++j)
            t.rows.push_back({g.spec.x(i), g.spec.p(j),
                              g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
    return t;
}

WignerGridSpec wigner_spec(const Params& p) {
    return WignerGridSpec::symmetric(p.number("wigner_half_width", 1.0, 50.0), p.count("wigner_points", 11, 2001));
}

// ---- kinds -----------------------------------------------------------------

Plan kerr_demo(const Manifest& m) {
    const Params p(m.params);
    const double alpha = p.number("alpha", 0.0, 4.0);
    const double phi = p.number("kerr_phi");
    const std::size_t cutoff = p.count("cutoff", 2, 80);
    const std::vector<double> etas = p.numbers("loss_eta", 0.0);
    for (double e : etas)
        if (e > 1.0) throw ManifestError("params.loss_eta", "transmissivities must lie in [0, 1]");
    const WignerGridSpec spec = wigner_spec(p);
    const EngineOptions opt = m.engine_options();
    return [=](const fs::path& dir, RunReport& rep) {
        const FockStateD out = apply_gate(coherent_state(alpha, cutoff), GateOp{Kerr{0, phi}}, opt);
        const WignerGrid g = wigner(out, spec);
        emit(dir, rep, "wigner.csv", wigner_table(g));
        ResultTable loss({"eta", "fidelity"});
        for (double e : etas) loss.add_row({e, fidelity(out, apply_loss(promote(out), 0, e))});
        emit(dir, rep, "loss_fidelity.csv", loss);
        const ResultRecord metrics = {{"alpha", alpha},
                                      {"kerr_phi", phi},
                                      {"cutoff", static_cast<std::int64_t>(cutoff)},
                                      {"min_w", g.min()},
                                      {"negativity_volume", negativity_volume(g)},
                                      {"self_fidelity", fidelity(out, out)}};
        emit(dir, rep, "metrics.json", metrics);
        note(rep, "min_w", g.min());
    };
}

Plan cat_breed(const Manifest& m) {
    const Params p(m.params);
    const double r = p.number("r", 0.0, 2.0);
    const std::size_t rounds = p.count("rounds", 0, 4);
    const std::size_t cutoff = p.count("cutoff", 4, 80);
    const double outcome = p.number("outcome", -8.0, 8.0);
    const bool ff = p.flag("feed_forward");
    const WignerGridSpec spec = wigner_spec(p);
    const EngineOptions opt = m.engine_options();
    return [=](const fs::path& dir, RunReport& rep) {
        // S(r)|1> has its lobes on the p axis; breeding along them keeps them there.
        FockStateD s = make_small_cat(r, cutoff, 0.0, opt);
        ResultTable t({"round", "parity", "alpha_fit", "fidelity", "alpha_ratio", "min_w", "mean_photons",
                       "herald_density"});
        double prev = 0.0, density = 1.0;
        WignerGrid g{};
        for (std::size_t k = 0; k <= rounds; ++k) {
            if (k > 0) {
                auto b = breed_at_outcome(s, s, outcome, ff, opt);
                density = b.record.weight;
                s = std::move(b.state);
                s.set_norm_weight(1.0);
            }
            // Odd inputs breed into even cats, which stay even afterwards.
            const CatFit odd = fit_cat(s, 1, M_PI / 2), even = fit_cat(s, 0, M_PI / 2);
            const bool is_odd = odd.fidelity >= even.fidelity;
            const CatFit fit = is_odd ? odd : even;
            g = wigner(s, spec);
            t.add_row({static_cast<std::int64_t>(k), std::string(is_odd ? "odd" : "even"), fit.alpha, fit.fidelity, k > 0 ? fit.alpha / prev : 1.0, g.min(),
                       mean_photon_number(s, 0), density});
            prev = fit.alpha;
        }
        emit(dir, rep, "rounds.csv", t);
        emit(dir, rep, "wigner_final.csv", wigner_table(g));
        note(rep, "final_alpha", prev);
    };
}

Plan compass(const Manifest& m) {
    const Params p(m.params);
    const double r = p.number("r", 0.0, 2.0);
    const std::size_t cutoff = p.count("cutoff", 4, 80);
    const WignerGridSpec spec = wigner_spec(p);
    const EngineOptions opt = m.engine_options();
    return [=](const fs::path& dir, RunReport& rep) {
        const CompassResult c = make_compass(r, cutoff, opt);
        const CompassFit fit = compass_fit(c.state);
        const WignerGrid g = wigner(c.state, spec);
        emit(dir, rep, "wigner.csv", wigner_table(g));
        emit(dir, rep, "metrics.json",
             ResultRecord{{"r", r},
                          {"herald_probability", c.herald_probability},
                          {"single_cat_fidelity", fit.single_cat_fidelity},
                          {"single_cat_alpha", fit.single_cat_alpha},
                          {"four_component_fidelity", fit.four_component_fidelity},
                          {"four_component_alpha", fit.four_component_alpha},
                          {"min_w", g.min()}});
        note(rep, "four_component_fidelity", fit.four_component_fidelity);
    };
}

Plan gkp(const Manifest& m) {
    const Params p(m.params);
    BreedingConfig cfg;
    cfg.r_initial = p.number("r_initial", 0.0, 2.0);
    cfg.n_rounds = static_cast<int>(p.integer("n_rounds", 0, 4));
    cfg.feed_forward = p.flag("feed_forward");
    cfg.accept_window = p.optional_number("accept_window", 0.0);
    cfg.window_on_output = p.flag("window_on_output");
    cfg.herald_eta = p.number("herald_eta", 0.0, 1.0);
    cfg.loss_eta_per_step = p.number("loss_eta_per_step", 0.0, 1.0);
    cfg.cutoff = p.count("cutoff", 4, 80);
    cfg.trajectories = p.count("trajectories", 1, 1000000);
    cfg.seed = *m.seed;
    const double hw = p.number("grid_half_width", 1.0, 50.0);
    cfg.grid = QuadratureGrid{-hw, hw, p.count("grid_points", 64, 1 << 20)};
    Params::checked("params", [&] { cfg.validate(); });
    const WignerGridSpec spec = wigner_spec(p);
    const EngineOptions opt = m.engine_options();
    return [=](const fs::path& dir, RunReport& rep) {
        const GkpEnsemble e = synthesize_gkp(cfg, opt);
        const auto xs = cfg.grid.values();
        const auto full = marginal_distribution(e.full_mixture, 0, 0.0, cfg.grid);
        const auto filtered = marginal_distribution(e.accepted_mixture, 0, 0.0, cfg.grid);
        ResultTable marg({"x", "density_full", "density_filtered"});
        for (std::size_t i = 0; i < xs.size(); ++i) marg.add_row({xs[i], full[i], filtered[i]});
        emit(dir, rep, "marginal.csv", marg);

        const PeakAnalysis peaks = peak_analysis(xs, filtered);
        ResultTable pk({"position", "height", "variance"});
        for (const auto& q : peaks.peaks) pk.add_row({q.position, q.height, q.variance});
        emit(dir, rep, "peaks.csv", pk);

        std::ofstream rec(dir / "records.jsonl", std::ios::binary);
        if (!rec) throw IOError("cannot write records.jsonl");
        for (std::size_t t = 0; t < e.trajectories.size(); ++t) {
            const auto& tr = e.trajectories[t];
            ordered_json j;
            j["trajectory"] = t;
            j["accepted"] = tr.accepted;
            j["weight"] = tr.weight;
            j["records"] = ordered_json::array();
            for (const auto& r : tr.records) j["records"].push_back(to_json(r));
            rec << j.dump() << '\n';
        }
        rec.flush();
        if (!rec) throw IOError("write to records.jsonl failed");
        rep.files.push_back("records.jsonl");

        emit(dir, rep, "wigner.csv", wigner_table(wigner(e.accepted_mixture, spec)));
        const GKPMetrics& g = e.metrics;
        emit(dir, rep, "metrics.json",
             ResultRecord{{"trajectories", static_cast<std::int64_t>(e.trajectories.size())},
                          {"acceptance", e.acceptance},
                          {"s_x", g.s_x},
                          {"s_x_stderr", e.s_x_stderr},
                          {"s_logical", g.s_logical},
                          {"var_x_peak", g.var_x_peak},
                          {"var_p_peak", g.var_p_peak},
                          {"var_product", g.var_product},
                          {"n_peaks", static_cast<std::int64_t>(peaks.peaks.size())},
                          {"spacing_deviation", peaks.spacing_deviation()}});
        note(rep, "s_x", g.s_x);
        note(rep, "var_product", g.var_product);
        note(rep, "acceptance", e.acceptance);
    };
}

Plan bose_hubbard(const Manifest& m, bool series) {
    const Params p(m.params);
    LatticeSpec spec;
    spec.n_sites = p.count("n_sites", 2, 16);
    spec.J = p.number("J", 0.0);
    spec.boundary = p.choice("boundary", {"open", "periodic"}) == "open" ? Boundary::Open : Boundary::Periodic;
    const std::size_t steps = p.count("n_steps", 1, 1000000);
    TrotterOptions to;
    to.order = p.choice("trotter", {"lie", "strang"}) == "lie" ? TrotterOrder::Lie : TrotterOrder::Strang;
    to.bond_order = p.choice("bond_order", {"even-odd", "odd-even"}) == "even-odd" ? BondOrder::EvenOdd : BondOrder::OddEven;
    const auto initials = p.occupations("initials");
    for (const auto& occ : initials)
        if (occ.size() != spec.n_sites) throw ManifestError("params.initials", "each occupation needs n_sites entries");
    const auto uj = p.numbers("u_over_j");
    const auto times = p.numbers(series ? "times" : "t", 0.0);
    Params::checked("params", [&] { spec.validate(); });
    return [=](const fs::path& dir, RunReport& rep) {
        const auto rows = sweep_and_timeseries(spec, initials, uj, times, steps, to);
        ResultTable t({"u_over_j", "t", "initial", "config", "p_trotter", "p_exact", "tv_distance"});
        double worst = 0.0;
        for (const auto& r : rows) {
            t.add_row({r.u_over_j, r.t, r.initial, r.config, r.p_trotter, r.p_exact, r.tv_distance});
            worst = std::max(worst, r.tv_distance);
        }
        emit(dir, rep, "dynamics.csv", t);
        note(rep, "max_tv_distance", worst);
    };
}

Plan cluster(const Manifest& m) {
    const Params p(m.params);
    const std::size_t n = p.count("n_bins", 2, 1000000);
    const double r = p.number("r", 0.0, 5.0);
    return [=](const fs::path& dir, RunReport& rep) {
        const auto rows = nullifier_sweep(epr_chain_generate(n, r));
        ResultTable t({"bin_index", "x_variance_db", "p_variance_db"});
        const double expected = 10.0 * std::log10(std::exp(-2.0 * r));
        double worst = 0.0, max_db = -kInf;
        for (const auto& row : rows) {
            t.add_row({static_cast<std::int64_t>(row.bin_index), row.x_variance_db, row.p_variance_db});
            worst = std::max({worst, std::abs(row.x_variance_db - expected), std::abs(row.p_variance_db - expected)});
            max_db = std::max({max_db, row.x_variance_db, row.p_variance_db});
        }
        emit(dir, rep, "nullifiers.csv", t);
        emit(dir, rep, "metrics.json",
             ResultRecord{{"n_bins", static_cast<std::int64_t>(n)},
                          {"r", r},
                          {"expected_db", expected},
                          {"max_variance_db", max_db},
                          {"max_abs_deviation_db", worst}});
        note(rep, "max_variance_db", max_db);
    };
}

// Brick-layer interferometer of random beamsplitters and phases.
std::vector<GateOp> random_interferometer(std::size_t modes, std::size_t layers, Rng& rng) {
    std::vector<GateOp> ops;
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t i = l % 2; i + 1 < modes; i += 2)
            ops.push_back(BeamSplitter{i, i + 1, rng.uniform() * M_PI / 2, rng.uniform() * 2 * M_PI});
        for (std::size_t i = 0; i < modes; ++i) ops.push_back(Phase{i, rng.uniform() * 2 * M_PI});
    }
    return ops;
}

void patterns_upto(std::size_t modes, int max_total, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (cur.size() == modes) {
        out.push_back(cur);
        return;
    }
    int used = 0;
    for (int n : cur) used += n;
    for (int n = 0; n + used <= max_total; ++n) {
        cur.push_back(n);
        patterns_upto(modes, max_total, cur, out);
        cur.pop_back();
    }
}

Plan gbs_desk(const Manifest& m) {
    const Params p(m.params);
    const auto rs = p.numbers("squeezing", 0.0);
    if (rs.size() < 2 || rs.size() > 6) throw ManifestError("params.squeezing", "expected 2 to 6 squeezing values");
    const std::size_t layers = p.count("layers", 0, 64);
    const int max_photons = static_cast<int>(p.integer("max_photons", 0, 12));
    const std::size_t fock_cutoff = p.count("fock_cutoff", 2, 16);
    if (static_cast<int>(fock_cutoff) <= max_photons)
        throw ManifestError("params.fock_cutoff", "must exceed max_photons");
    const std::size_t samples = p.count("samples", 0, 100000);
    const int sample_cutoff = static_cast<int>(p.integer("sample_cutoff", 1, 12));
    const std::uint64_t seed = *m.seed;
    return [=](const fs::path& dir, RunReport& rep) {
        const std::size_t modes = rs.size();
        Rng circuit_rng = Rng::stream(seed, 0);
        std::vector<GateOp> ops;
        for (std::size_t i = 0; i < modes; ++i) ops.push_back(Squeeze{i, rs[i], 0.0});
        for (auto& g : random_interferometer(modes, layers, circuit_rng)) ops.push_back(g);

        const GaussianStateD gs = apply_circuit(GaussianStateD::vacuum(modes), ops);
        // The brute-force reference loses whatever squeezing pushes above the
        // cutoff. Patterns within max_photons < cutoff are unaffected, since
        // the interferometer conserves photon number, once the lost mass is
        // kept in norm_weight.
        EngineOptions loose;
        loose.tolerance = 1.0;
        loose.warn_tolerance = 1.0;
        loose.weight_leakage = true;
        const FockStateD fs = apply_circuit(FockStateD::vacuum(modes, fock_cutoff), ops, loose);

        std::vector<std::vector<int>> pats;
        std::vector<int> cur;
        patterns_upto(modes, max_photons, cur, pats);
        ResultTable t({"pattern", "total_photons", "p_hafnian", "p_fock", "abs_diff"});
        double worst = 0.0, mass = 0.0;
        for (const auto& pat : pats) {
            const double ph = gbs_probability(gs, pat);
            const double pf = std::norm(fs.amplitude(std::span<const int>(pat))) * fs.norm_weight();
            int total = 0;
            for (int n : pat) total += n;
            t.add_row({occupation_label(pat), static_cast<std::int64_t>(total), ph, pf, std::abs(ph - pf)});
            worst = std::max(worst, std::abs(ph - pf));
            mass += ph;
        }
        emit(dir, rep, "probabilities.csv", t);

        Rng sample_rng = Rng::stream(seed, 1);
        const auto draws = gbs_sample(gs, samples, sample_rng, sample_cutoff);
        ResultTable st({"sample", "pattern"});
        for (std::size_t i = 0; i < draws.size(); ++i) st.add_row({static_cast<std::int64_t>(i), occupation_label(draws[i])});
        emit(dir, rep, "samples.csv", st);

        emit(dir, rep, "metrics.json",
             ResultRecord{{"modes", static_cast<std::int64_t>(modes)},
                          {"patterns", static_cast<std::int64_t>(pats.size())},
                          {"max_abs_diff", worst},
                          {"mass_within_max_photons", mass},
                          {"fock_retained_mass", fs.norm_weight()},
                          {"samples", static_cast<std::int64_t>(draws.size())}});
        note(rep, "max_abs_diff", worst);
    };
}

}  // namespace

Plan plan_experiment(const Manifest& m) {
    if (m.kind == "kerr-demo") return kerr_demo(m);
    if (m.kind == "cat-breed") return cat_breed(m);
    if (m.kind == "compass") return compass(m);
    if (m.kind == "gkp") return gkp(m);
    if (m.kind == "bose-hubbard-sweep") return bose_hubbard(m, false);
    if (m.kind == "bose-hubbard-timeseries") return bose_hubbard(m, true);
    if (m.kind == "cluster-nullifiers") return cluster(m);
    if (m.kind == "gbs-desk") return gbs_desk(m);
    throw ManifestError("kind", "unknown experiment kind '" + m.kind + "'");
}

}  // namespace loopsim::cli
