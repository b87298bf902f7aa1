#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>

#include "loopsim/errors.hpp"
#include "loopsim/loop_compiler.hpp"

namespace loopsim {

namespace {

const std::vector<std::pair<ModuleKind, const char*>>& module_names() {
    static const std::vector<std::pair<ModuleKind, const char*>> names = {
        {ModuleKind::Core, "core"},         {ModuleKind::Squeezer, "squeezer"}, {ModuleKind::Kerr, "kerr"},
        {ModuleKind::Homodyne, "homodyne"}, {ModuleKind::Pnrd, "pnrd"},         {ModuleKind::Source, "source"},
        {ModuleKind::Passive, "passive"}};
    return names;
}

std::string describe(const ProgramOp& op) {
    const auto modes = modes_of(op);
    std::string s = kind_name(op) + "(";
    for (std::size_t i = 0; i < modes.size(); ++i) s += (i ? "," : "") + std::to_string(modes[i]);
    return s + ")";
}

std::size_t separation(const std::vector<std::size_t>& bins) {
    return bins.size() == 2 ? (bins[0] > bins[1] ? bins[0] - bins[1] : bins[1] - bins[0]) : 0;
}

}  // namespace

std::string module_name(ModuleKind k) {
    for (const auto& [kind, name] : module_names())
        if (kind == k) return name;
    return "unknown";
}

ModuleKind module_from_name(const std::string& name) {
    for (const auto& [kind, n] : module_names())
        if (name == n) return kind;
    throw InvalidArgument("unknown module kind '" + name + "'");
}

ModuleKind module_for(const ProgramOp& op) {
    return std::visit(
        [](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Squeeze>) return ModuleKind::Squeezer;
            else if constexpr (std::is_same_v<T, Kerr>) return ModuleKind::Kerr;
            else if constexpr (std::is_same_v<T, HomodyneProjection>) return ModuleKind::Homodyne;
            else if constexpr (std::is_same_v<T, PnrdProjection>) return ModuleKind::Pnrd;
            else if constexpr (std::is_same_v<T, Loss>) return ModuleKind::Passive;
            else return ModuleKind::Core;
        },
        op);
}

void MachineSpec::validate() const {
    if (n_cores == 0) throw InvalidArgument("machine needs at least one core");
    if (n_bins == 0) throw InvalidArgument("machine needs at least one time bin");
    for (std::size_t d : delay_bins)
        if (d == 0) throw InvalidArgument("delay lengths must be positive");
}

std::size_t MachineSpec::capacity(ModuleKind k) const {
    if (k == ModuleKind::Core) return n_cores;
    if (k == ModuleKind::Passive) return 0;
    return modules.count(k) ? 1 : 0;
}

namespace {

TimeBinSchedule greedy(const CircuitProgram& program, const MachineSpec& machine) {
    if (program.mode_count > machine.n_bins)
        throw UnschedulableError("program needs " + std::to_string(program.mode_count) + " time bins, machine has " +
                                     std::to_string(machine.n_bins),
                                 0);
    TimeBinSchedule sched;
    sched.mode_count = program.mode_count;
    std::vector<std::size_t> ready(program.mode_count, 0);             // first step each mode is free
    std::map<std::pair<ModuleKind, std::size_t>, std::vector<bool>> busy;  // (module, step) -> unit occupancy

    for (std::size_t k = 0; k < program.ops.size(); ++k) {
        const ProgramOp& op = program.ops[k];
        const auto bins = modes_of(op);
        for (std::size_t b : bins)
            if (b >= program.mode_count)
                throw UnschedulableError("event " + std::to_string(k) + " (" + describe(op) + ") addresses a missing mode", k);
        if (bins.size() == 2 && !machine.delay_bins.count(separation(bins)))
            throw UnschedulableError("event " + std::to_string(k) + " (" + describe(op) + ") needs delay " +
                                         std::to_string(separation(bins)) + ", which the machine lacks",
                                     k);
        const ModuleKind mod = module_for(op);
        const std::size_t cap = machine.capacity(mod);
        if (mod != ModuleKind::Passive && cap == 0)
            throw UnschedulableError("event " + std::to_string(k) + " (" + describe(op) + ") needs a " +
                                         module_name(mod) + " module",
                                     k);

        std::size_t step = 0;
        for (std::size_t b : bins) step = std::max(step, ready[b]);
        std::size_t unit = 0;
        if (mod != ModuleKind::Passive) {
            for (;; ++step) {
                auto& occ = busy[{mod, step}];
                occ.resize(cap, false);
                const auto it = std::find(occ.begin(), occ.end(), false);
                if (it != occ.end()) {
                    unit = static_cast<std::size_t>(it - occ.begin());
                    *it = true;
                    break;
                }
            }
        }
        for (std::size_t b : bins) ready[b] = step + 1;
        sched.events.push_back({step, mod, unit, op, bins, k});
        sched.makespan = std::max(sched.makespan, step + 1);
    }
    std::stable_sort(sched.events.begin(), sched.events.end(), [](const auto& a, const auto& b) {
        return std::tie(a.bin_index, a.module, a.unit) < std::tie(b.bin_index, b.module, b.unit);
    });
    return sched;
}

}  // namespace

// Greedy list scheduling is not monotone in the unit count: with a spare
// core an early op can grab a slot that a later, longer chain needed. Taking
// the best pass over 1..n_cores restores "more cores never slower".
TimeBinSchedule compile(const CircuitProgram& program, const MachineSpec& machine) {
    machine.validate();
    MachineSpec m = machine;
    m.n_cores = 1;
    TimeBinSchedule best = greedy(program, m);
    for (std::size_t k = 2; k <= machine.n_cores; ++k) {
        m.n_cores = k;
        TimeBinSchedule s = greedy(program, m);
        if (s.makespan <= best.makespan) best = std::move(s);  // ties go to the wider machine
    }
    return best;
}

std::vector<std::string> validate(const TimeBinSchedule& schedule, const MachineSpec& machine) {
    std::vector<std::string> out;
    std::map<std::tuple<ModuleKind, std::size_t, std::size_t>, std::size_t> slots;
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> last_use;  // mode -> (bin, source index)
    std::vector<const ScheduledEvent*> by_source;
    for (const auto& e : schedule.events) by_source.push_back(&e);
    std::stable_sort(by_source.begin(), by_source.end(),
                     [](const auto* a, const auto* b) { return a->source_index < b->source_index; });

    for (const auto& e : schedule.events) {
        const std::string where = "bin " + std::to_string(e.bin_index) + ": ";
        if (e.module != module_for(e.op))
            out.push_back(where + describe(e.op) + " placed on " + module_name(e.module));
        if (e.module != ModuleKind::Passive) {
            const std::size_t cap = machine.capacity(e.module);
            if (cap == 0)
                out.push_back(where + "machine has no " + module_name(e.module) + " module");
            else if (e.unit >= cap)
                out.push_back(where + module_name(e.module) + " " + std::to_string(e.unit) + " does not exist");
            if (slots[{e.module, e.unit, e.bin_index}]++ == 1)
                out.push_back(where + module_name(e.module) + " " + std::to_string(e.unit) + " double-booked");
        }
        if (e.operand_bins != modes_of(e.op))
            out.push_back(where + describe(e.op) + " operand bins disagree with the op");
        for (std::size_t b : e.operand_bins)
            if (b >= machine.n_bins) out.push_back(where + "operand bin " + std::to_string(b) + " beyond n_bins");
        if (e.operand_bins.size() == 2 && !machine.delay_bins.count(separation(e.operand_bins)))
            out.push_back(where + "delay " + std::to_string(separation(e.operand_bins)) + " not available");
    }
    // Ops sharing a mode must keep program order in strictly later bins.
    for (const auto* e : by_source)
        for (std::size_t b : e->operand_bins) {
            const auto it = last_use.find(b);
            if (it != last_use.end() && it->second.first >= e->bin_index)
                out.push_back("bin " + std::to_string(e->bin_index) + ": " + describe(e->op) + " runs before or with op " +
                              std::to_string(it->second.second) + " on mode " + std::to_string(b));
            last_use[b] = {e->bin_index, e->source_index};
        }
    return out;
}

void write_timeline(std::ostream& out, const TimeBinSchedule& schedule) {
    std::size_t i = 0;
    for (std::size_t bin = 0; bin < schedule.makespan; ++bin) {
        out << "bin " << bin;
        for (; i < schedule.events.size() && schedule.events[i].bin_index == bin; ++i) {
            const auto& e = schedule.events[i];
            out << " | " << module_name(e.module);
            if (e.module == ModuleKind::Core) out << e.unit;
            out << ' ' << describe(e.op);
        }
        out << '\n';
    }
}

}  // namespace loopsim
