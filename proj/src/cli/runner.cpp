#include <chrono>
#include <fstream>
#include <ostream>

#include "loopsim/cli.hpp"
#include "loopsim/errors.hpp"
#include "loopsim/loop_compiler.hpp"
#include "loopsim/table.hpp"

namespace loopsim::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int run(const fs::path& manifest_path, const RunOptions& opt, std::ostream& out, std::ostream& err) {
    std::string stage = "manifest";
    try {
        // Overrides go in before parsing, so --seed satisfies a sampling kind.
        nlohmann::json j = read_manifest_json(manifest_path);
        if (opt.seed && j.is_object()) j["seed"] = *opt.seed;
        if (opt.output_dir && j.is_object()) j["output_dir"] = opt.output_dir->string();
        const Manifest m = parse_manifest(j);
        const Plan plan = plan_experiment(m);

        std::error_code ec;
        fs::create_directories(m.output_dir, ec);
        if (ec) throw IOError("cannot create output directory '" + m.output_dir.string() + "': " + ec.message());
        write_text(m.output_dir / "manifest.resolved.json", dump_json(m.resolved()));

        stage = m.kind;
        RunReport rep;
        const auto t0 = std::chrono::steady_clock::now();
        plan(m.output_dir, rep);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        // The one output that legitimately differs between identical runs.
        ordered_json meta;
        meta["kind"] = m.kind;
        meta["seed"] = m.seed ? ordered_json(*m.seed) : ordered_json(nullptr);
        meta["version"] = LOOPSIM_VERSION;
        meta["wall_seconds"] = secs;
        meta["files"] = rep.files;
        write_text(m.output_dir / "run_metadata.json", dump_json(meta));

        out << m.kind << ": wrote " << rep.files.size() << " files to " << m.output_dir.string() << '\n';
        for (const auto& line : rep.summary) out << "  " << line << '\n';
        return kExitOk;
    } catch (const ManifestError& e) {
        err << "manifest error: " << e.what() << '\n';
        return kExitManifest;
    } catch (const IOError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kExitIO;
    } catch (const std::exception& e) {
        err << stage << " failed: " << e.what() << '\n';
        return kExitPhysics;
    }
}

void list_experiments(std::ostream& out) {
    for (const auto& e : experiment_catalog()) {
        out << e.kind << (e.sampling ? "  (sampling; needs a seed)" : "") << '\n';
        out << "  " << e.summary << '\n';
        out << "  defaults: " << e.defaults.dump() << "\n\n";
    }
}

namespace {

nlohmann::json read_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw IOError("cannot read '" + path.string() + "'");
    try {
        return nlohmann::json::parse(f, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ManifestError(path.string(), std::string("not valid JSON: ") + e.what());
    }
}

}  // namespace

int schedule(const fs::path& program, const std::optional<fs::path>& machine, bool timeline, std::ostream& out,
             std::ostream& err) {
    try {
        CircuitProgram prog;
        MachineSpec spec;
        try {
            prog = program_from_json(read_json(program));
            if (machine) spec = machine_from_json(read_json(*machine));
        } catch (const InvalidArgument& e) {
            throw ManifestError(program.string(), e.what());
        }
        const TimeBinSchedule s = compile(prog, spec);
        if (timeline)
            write_timeline(out, s);
        else
            out << dump_json(to_json(s));
        return kExitOk;
    } catch (const ManifestError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitManifest;
    } catch (const IOError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kExitIO;
    } catch (const std::exception& e) {
        err << "schedule failed: " << e.what() << '\n';
        return kExitPhysics;
    }
}

}  // namespace loopsim::cli
