#pragma once

// Manifest-driven experiment runner behind the `loopsim` executable.
//
// A manifest is one JSON object:
//   {"kind": "gkp", "seed": 7, "output_dir": "out/gkp", "cutoff": 40,
//    "tolerance": {"truncation": 1e-6, "warn": 1e-8},
//    "params": {"n_rounds": 2, "accept_window": 0.75}}
// Only "kind" is required, plus "seed" for sampling experiments. Params not
// given take the kind's defaults; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "loopsim/fock_engine.hpp"

namespace loopsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitManifest = 2;
inline constexpr int kExitPhysics = 3;
inline constexpr int kExitIO = 4;

struct ExperimentInfo {
    std::string kind;
    std::string summary;
    bool sampling;  // needs a seed
    nlohmann::ordered_json defaults;
};

const std::vector<ExperimentInfo>& experiment_catalog();
const ExperimentInfo& experiment_info(const std::string& kind);  // ManifestError("kind") if unknown

struct Manifest {
    std::string kind;
    std::optional<std::uint64_t> seed;
    std::filesystem::path output_dir;
    std::optional<std::size_t> cutoff;
    double tolerance = 1e-6;
    double warn_tolerance = 1e-8;
    nlohmann::ordered_json params;  // defaults merged with the given values

    nlohmann::ordered_json resolved() const;
    EngineOptions engine_options() const;
};

// Structural checks only; ManifestError names the offending field.
Manifest parse_manifest(const nlohmann::json& j);
nlohmann::json read_manifest_json(const std::filesystem::path& path);  // IOError when unreadable
Manifest load_manifest(const std::filesystem::path& path);

struct RunReport {
    std::vector<std::string> files;     // result files, relative to the output dir
    std::vector<std::string> summary;   // "key = value" lines for the console
};

// Reads and checks every parameter (ManifestError on failure) and returns the
// deferred computation, which writes its result files into a directory.
using Plan = std::function<void(const std::filesystem::path&, RunReport&)>;
Plan plan_experiment(const Manifest& m);

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> output_dir;
};

// Full run: results, manifest.resolved.json and run_metadata.json. Returns an
// exit code; diagnostics go to `err`.
int run(const std::filesystem::path& manifest_path, const RunOptions& opt, std::ostream& out, std::ostream& err);

void list_experiments(std::ostream& out);

// Compiles a program file and prints the schedule as JSON, or as a per-bin
// timeline. Malformed files exit 2, unschedulable programs 3.
int schedule(const std::filesystem::path& program, const std::optional<std::filesystem::path>& machine, bool timeline,
             std::ostream& out, std::ostream& err);

}  // namespace loopsim::cli
