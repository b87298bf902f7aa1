#include <algorithm>
#include <cmath>
#include <fstream>

#include "loopsim/cli.hpp"
#include "loopsim/errors.hpp"

namespace loopsim::cli {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<ExperimentInfo>& experiment_catalog() {
    static const std::vector<ExperimentInfo> catalog = [] {
        std::vector<ExperimentInfo> c;
        c.push_back({"kerr-demo",
                     "Kerr gate on a weak coherent state: Wigner grid with negative regions, and fidelity to the "
                     "ideal output under pure loss.",
                     false,
                     {{"alpha", 0.5},
                      {"kerr_phi", M_PI / 3},
                      {"cutoff", 12},
                      {"loss_eta", {1.0, 0.95, 0.9, 0.85, 0.8}},
                      {"wigner_half_width", 6.0},
                      {"wigner_points", 201}}});
        c.push_back({"cat-breed",
                     "Small odd cat from an inline-squeezed single photon, bred on zero homodyne outcomes: fitted "
                     "amplitude, fidelity and Wigner minimum per round.",
                     false,
                     {{"r", 0.3},
                      {"rounds", 2},
                      {"cutoff", 24},
                      {"outcome", 0.0},
                      {"feed_forward", true},
                      {"wigner_half_width", 6.0},
                      {"wigner_points", 201}}});
        c.push_back({"compass",
                     "Compass state from two quarter-turned small cats and a two-photon herald, compared with the best "
                     "two- and four-component coherent superpositions.",
                     false,
                     {{"r", 0.6}, {"cutoff", 32}, {"wigner_half_width", 6.0}, {"wigner_points", 201}}});
        c.push_back({"gkp",
                     "Monte-Carlo GKP synthesis by binary-tree breeding with homodyne feed-forward: stabilizers, "
                     "central-peak variances and the x-marginal with and without the acceptance filter.",
                     true,
                     {{"r_initial", 0.48},
                      {"n_rounds", 2},
                      {"feed_forward", true},
                      {"accept_window", 0.75},
                      {"window_on_output", false},
                      {"herald_eta", 1.0},
                      {"loss_eta_per_step", 1.0},
                      {"cutoff", 40},
                      {"trajectories", 1000},
                      {"grid_half_width", 8.0},
                      {"grid_points", 4096},
                      {"wigner_half_width", 8.0},
                      {"wigner_points", 201}}});
        const ordered_json bh_common = {{"n_sites", 3},   {"J", 1.0},        {"boundary", "open"},
                                        {"n_steps", 400}, {"trotter", "lie"}, {"bond_order", "even-odd"},
                                        {"initials", {{2, 0, 0}, {1, 1, 0}}}};
        ordered_json sweep = bh_common;
        sweep["u_over_j"] = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
        sweep["t"] = 0.5;
        c.push_back({"bose-hubbard-sweep",
                     "Two-photon Bose-Hubbard trimer across U/J at fixed time: Trotterized circuit against exact "
                     "diagonalization, per Fock configuration.",
                     false, sweep});
        ordered_json series = bh_common;
        series["u_over_j"] = 1.0;
        series["times"] = {0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0, 3.25, 3.5};
        c.push_back({"bose-hubbard-timeseries",
                     "Two-photon Bose-Hubbard trimer over time at fixed U/J: Trotterized circuit against exact "
                     "diagonalization.",
                     false, series});
        c.push_back({"cluster-nullifiers",
                     "Time-multiplexed EPR chain on the covariance path: x and p nullifier variances per bin in dB "
                     "relative to vacuum.",
                     false,
                     {{"n_bins", 8000}, {"r", 0.4}}});
        c.push_back({"gbs-desk",
                     "Gaussian boson sampling on a small random interferometer: hafnian probabilities checked against "
                     "the Fock engine, plus chain-rule samples.",
                     true,
                     {{"squeezing", {0.6, 0.5, 0.4, 0.3}},
                      {"layers", 4},
                      {"max_photons", 4},
                      {"fock_cutoff", 12},
                      {"samples", 200},
                      {"sample_cutoff", 6}}});
        return c;
    }();
    return catalog;
}

const ExperimentInfo& experiment_info(const std::string& kind) {
    for (const auto& e : experiment_catalog())
        if (e.kind == kind) return e;
    throw ManifestError("kind", "unknown experiment kind '" + kind + "'");
}

namespace {

// The given value must have the same JSON type as the default. Numbers accept
// integers where the default is a float.
void check_type(const std::string& field, const ordered_json& def, const json& v) {
    auto fail = [&](const std::string& want) { throw ManifestError(field, "expected " + want); };
    if (def.is_boolean()) {
        if (!v.is_boolean()) fail("a boolean");
    } else if (def.is_number_integer()) {
        if (!v.is_number_integer()) fail("an integer");
    } else if (def.is_number()) {
        // null switches off optional knobs such as accept_window; the plan decides.
        if (!v.is_number() && !v.is_null()) fail("a number");
    } else if (def.is_string()) {
        if (!v.is_string()) fail("a string");
    } else if (def.is_array()) {
        // Scalar-or-list parameters (u_over_j, t) accept either form.
        if (!v.is_array() && !v.is_number()) fail("an array");
    }
}

// Literal 1 in C++ builds a signed JSON integer; parsed text gives unsigned.
bool nonnegative_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

}  // namespace

Manifest parse_manifest(const json& j) {
    if (!j.is_object()) throw ManifestError("<root>", "manifest must be a JSON object");
    static const std::vector<std::string> top = {"kind", "seed", "output_dir", "cutoff", "tolerance", "params"};
    for (const auto& [k, v] : j.items())
        if (std::find(top.begin(), top.end(), k) == top.end()) throw ManifestError(k, "unknown manifest field");

    Manifest m;
    if (!j.contains("kind")) throw ManifestError("kind", "missing");
    if (!j["kind"].is_string()) throw ManifestError("kind", "expected a string");
    m.kind = j["kind"].get<std::string>();
    const ExperimentInfo& info = experiment_info(m.kind);

    if (j.contains("seed") && !j["seed"].is_null()) {
        if (!nonnegative_integer(j["seed"])) throw ManifestError("seed", "expected a nonnegative 64-bit integer");
        m.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("output_dir")) {
        if (!j["output_dir"].is_string()) throw ManifestError("output_dir", "expected a string");
        m.output_dir = j["output_dir"].get<std::string>();
    }
    if (j.contains("cutoff")) {
        if (!nonnegative_integer(j["cutoff"]) || j["cutoff"].get<std::size_t>() < 2)
            throw ManifestError("cutoff", "expected an integer >= 2");
        if (!info.defaults.contains("cutoff"))
            throw ManifestError("cutoff", "experiment '" + m.kind + "' chooses its cutoff itself");
        m.cutoff = j["cutoff"].get<std::size_t>();
    }
    if (j.contains("tolerance")) {
        const auto& t = j["tolerance"];
        if (!t.is_object()) throw ManifestError("tolerance", "expected an object");
        for (const auto& [k, v] : t.items()) {
            const std::string f = "tolerance." + k;
            if (!v.is_number() || !(v.get<double>() > 0.0)) throw ManifestError(f, "expected a positive number");
            if (k == "truncation")
                m.tolerance = v.get<double>();
            else if (k == "warn")
                m.warn_tolerance = v.get<double>();
            else
                throw ManifestError(f, "unknown tolerance");
        }
    }

    m.params = info.defaults;
    if (j.contains("params")) {
        const auto& p = j["params"];
        if (!p.is_object()) throw ManifestError("params", "expected an object");
        for (const auto& [k, v] : p.items()) {
            const std::string f = "params." + k;
            if (!info.defaults.contains(k)) throw ManifestError(f, "unknown parameter for '" + m.kind + "'");
            check_type(f, info.defaults[k], v);
            m.params[k] = v;
        }
    }
    if (m.cutoff) m.params["cutoff"] = *m.cutoff;
    if (info.sampling && !m.seed) throw ManifestError("seed", "required for sampling experiment '" + m.kind + "'");
    if (m.output_dir.empty()) m.output_dir = std::filesystem::path("loopsim-out") / m.kind;
    return m;
}

json read_manifest_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IOError("cannot read manifest '" + path.string() + "'");
    json j;
    try {
        j = json::parse(f, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ManifestError("<root>", std::string("not valid JSON: ") + e.what());
    }
    return j;
}

Manifest load_manifest(const std::filesystem::path& path) { return parse_manifest(read_manifest_json(path)); }

ordered_json Manifest::resolved() const {
    ordered_json j;
    j["kind"] = kind;
    j["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
    j["output_dir"] = output_dir.generic_string();
    j["tolerance"] = {{"truncation", tolerance}, {"warn", warn_tolerance}};
    j["params"] = params;
    return j;
}

EngineOptions Manifest::engine_options() const {
    EngineOptions o;
    o.tolerance = tolerance;
    o.warn_tolerance = warn_tolerance;
    return o;
}

}  // namespace loopsim::cli
