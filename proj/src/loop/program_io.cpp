#include "loopsim/errors.hpp"
#include "loopsim/loop_compiler.hpp"

namespace loopsim {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw InvalidArgument(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InvalidArgument(where + ": field '" + key + "' has the wrong type");
    }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback, const std::string& where) {
    return j.contains(key) ? field<T>(j, key, where) : fallback;
}

}  // namespace

ordered_json to_json(const ProgramOp& op) {
    ordered_json j;
    j["kind"] = kind_name(op);
    std::visit(
        [&](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Displace>) {
                j["mode"] = g.mode;
                j["beta"] = {g.beta.real(), g.beta.imag()};
            } else if constexpr (std::is_same_v<T, Squeeze>) {
                j["mode"] = g.mode;
                j["r"] = g.r;
                j["phi"] = g.phi;
            } else if constexpr (std::is_same_v<T, BeamSplitter>) {
                j["mode_i"] = g.mode_i;
                j["mode_j"] = g.mode_j;
                j["theta"] = g.theta;
                j["phi"] = g.phi;
            } else if constexpr (std::is_same_v<T, Phase> || std::is_same_v<T, Kerr>) {
                j["mode"] = g.mode;
                j["phi"] = g.phi;
            } else if constexpr (std::is_same_v<T, Loss>) {
                j["mode"] = g.mode;
                j["eta"] = g.eta;
            } else if constexpr (std::is_same_v<T, HomodyneProjection>) {
                j["mode"] = g.mode;
                j["theta"] = g.theta;
                j["outcome"] = g.outcome;
            } else {
                j["mode"] = g.mode;
                j["photons"] = g.photons;
            }
        },
        op);
    return j;
}

ProgramOp program_op_from_json(const json& j) {
    if (!j.is_object()) throw InvalidArgument("program op must be a JSON object");
    const auto kind = field<std::string>(j, "kind", "op");
    const std::string w = "op '" + kind + "'";
    if (kind == "displace") {
        const auto b = field_or<std::vector<double>>(j, "beta", {0.0, 0.0}, w);
        if (b.size() != 2) throw InvalidArgument(w + ": beta must be [re, im]");
        return Displace{field<std::size_t>(j, "mode", w), {b[0], b[1]}};
    }
    if (kind == "squeeze")
        return Squeeze{field<std::size_t>(j, "mode", w), field<double>(j, "r", w), field_or<double>(j, "phi", 0.0, w)};
    if (kind == "beamsplitter")
        return BeamSplitter{field<std::size_t>(j, "mode_i", w), field<std::size_t>(j, "mode_j", w),
                            field<double>(j, "theta", w), field_or<double>(j, "phi", 0.0, w)};
    if (kind == "phase") return Phase{field<std::size_t>(j, "mode", w), field<double>(j, "phi", w)};
    if (kind == "kerr") return Kerr{field<std::size_t>(j, "mode", w), field<double>(j, "phi", w)};
    if (kind == "loss") return Loss{field<std::size_t>(j, "mode", w), field<double>(j, "eta", w)};
    if (kind == "homodyne")
        return HomodyneProjection{field<std::size_t>(j, "mode", w), field_or<double>(j, "theta", 0.0, w),
                                  field<double>(j, "outcome", w)};
    if (kind == "pnrd") return PnrdProjection{field<std::size_t>(j, "mode", w), field<int>(j, "photons", w)};
    throw InvalidArgument("unknown op kind '" + kind + "'");
}

ordered_json to_json(const CircuitProgram& p) {
    ordered_json j;
    j["mode_count"] = p.mode_count;
    j["ops"] = ordered_json::array();
    for (const auto& op : p.ops) j["ops"].push_back(to_json(op));
    return j;
}

CircuitProgram program_from_json(const json& j) {
    if (!j.is_object()) throw InvalidArgument("program must be a JSON object");
    CircuitProgram p;
    p.mode_count = field<std::size_t>(j, "mode_count", "program");
    if (j.contains("ops")) {
        if (!j["ops"].is_array()) throw InvalidArgument("program: 'ops' must be an array");
        for (const auto& op : j["ops"]) p.ops.push_back(program_op_from_json(op));
    }
    return p;
}

ordered_json to_json(const TimeBinSchedule& s) {
    ordered_json j;
    j["mode_count"] = s.mode_count;
    j["makespan"] = s.makespan;
    j["events"] = ordered_json::array();
    for (const auto& e : s.events) {
        ordered_json ev;
        ev["bin_index"] = e.bin_index;
        ev["module"] = module_name(e.module);
        ev["unit"] = e.unit;
        ev["operand_bins"] = e.operand_bins;
        ev["source_index"] = e.source_index;
        ev["op"] = to_json(e.op);
        j["events"].push_back(std::move(ev));
    }
    return j;
}

ordered_json to_json(const MachineSpec& m) {
    ordered_json j;
    j["n_cores"] = m.n_cores;
    j["delay_bins"] = std::vector<std::size_t>(m.delay_bins.begin(), m.delay_bins.end());
    std::vector<std::string> mods;
    for (ModuleKind k : m.modules) mods.push_back(module_name(k));
    j["modules"] = mods;
    j["n_bins"] = m.n_bins;
    return j;
}

MachineSpec machine_from_json(const json& j) {
    if (!j.is_object()) throw InvalidArgument("machine must be a JSON object");
    MachineSpec m;
    m.n_cores = field_or<std::size_t>(j, "n_cores", m.n_cores, "machine");
    if (j.contains("delay_bins")) {
        const auto d = field<std::vector<std::size_t>>(j, "delay_bins", "machine");
        m.delay_bins = {d.begin(), d.end()};
    }
    if (j.contains("modules")) {
        m.modules.clear();
        for (const auto& name : field<std::vector<std::string>>(j, "modules", "machine"))
            m.modules.insert(module_from_name(name));
    }
    m.n_bins = field_or<std::size_t>(j, "n_bins", m.n_bins, "machine");
    m.validate();
    return m;
}

}  // namespace loopsim
