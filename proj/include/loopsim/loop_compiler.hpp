#pragma once

// Time-bin loop machine: a single optical path whose time bins are the
// circuit modes (bin k carries mode k). Interferometer cores and plug-in
// modules each serve one operation per step; a two-mode gate between bins k
// and k + tau needs a delay line of length tau to bring them together.
//
// compile() is greedy list scheduling: each op, in program order, takes the
// earliest step after its operands' previous ops that has a free unit. It
// runs one pass per core count up to n_cores and keeps the shortest.

#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "loopsim/fock_engine.hpp"
#include "loopsim/fock_state.hpp"
#include "loopsim/gates.hpp"
#include "loopsim/gaussian.hpp"

namespace loopsim {

enum class ModuleKind { Core, Squeezer, Kerr, Homodyne, Pnrd, Source, Passive };

std::string module_name(ModuleKind k);
ModuleKind module_from_name(const std::string& name);  // InvalidArgument on unknown names

// Module serving an op. Loss is Passive: it occupies no unit.
ModuleKind module_for(const ProgramOp& op);

struct MachineSpec {
    std::size_t n_cores = 1;
    std::set<std::size_t> delay_bins{1};
    std::set<ModuleKind> modules{ModuleKind::Squeezer, ModuleKind::Kerr, ModuleKind::Homodyne, ModuleKind::Pnrd,
                                  ModuleKind::Source};
    std::size_t n_bins = 64;

    void validate() const;
    // Units of a module kind; cores count n_cores, plug-ins 1, absent kinds 0.
    std::size_t capacity(ModuleKind k) const;
};

struct ScheduledEvent {
    std::size_t bin_index = 0;  // machine step at which the op executes
    ModuleKind module = ModuleKind::Core;
    std::size_t unit = 0;
    ProgramOp op;
    std::vector<std::size_t> operand_bins;
    std::size_t source_index = 0;  // position in the compiled program
};

struct TimeBinSchedule {
    std::size_t mode_count = 0;
    std::vector<ScheduledEvent> events;  // ascending (bin_index, module, unit)
    std::size_t makespan = 0;
};

TimeBinSchedule compile(const CircuitProgram& program, const MachineSpec& machine);

// Human-readable invariant violations; empty iff the schedule is valid.
std::vector<std::string> validate(const TimeBinSchedule& schedule, const MachineSpec& machine);

// One line per step: "bin 3 | core0 beamsplitter(0,1) | kerr kerr(2)".
void write_timeline(std::ostream& out, const TimeBinSchedule& schedule);

// Direct execution of a program. A measurement projects its mode onto the
// recorded outcome (post-selection) and re-prepares it as vacuum; the branch
// weight accumulates in norm_weight / trace_weight.
FockStateD execute_program(const CircuitProgram& program, FockStateD state, const EngineOptions& opt = {});
DensityOperatorD execute_program(const CircuitProgram& program, DensityOperatorD state, const EngineOptions& opt = {});
// Gaussian execution supports gates only (NonGaussianOp for Kerr and measurements).
GaussianStateD execute_program(const CircuitProgram& program, GaussianStateD state);

// Events lowered in bin order onto the matching engine.
FockStateD execute_schedule(const TimeBinSchedule& schedule, FockStateD state, const EngineOptions& opt = {});
DensityOperatorD execute_schedule(const TimeBinSchedule& schedule, DensityOperatorD state,
                                  const EngineOptions& opt = {});
GaussianStateD execute_schedule(const TimeBinSchedule& schedule, GaussianStateD state);

// |0> inserted as mode `mode` of the result.
FockStateD insert_vacuum(const FockStateD& s, std::size_t mode);
DensityOperatorD insert_vacuum(const DensityOperatorD& rho, std::size_t mode);

// ---- JSON ------------------------------------------------------------------

nlohmann::ordered_json to_json(const ProgramOp& op);
ProgramOp program_op_from_json(const nlohmann::json& j);  // InvalidArgument on malformed ops
nlohmann::ordered_json to_json(const CircuitProgram& p);
CircuitProgram program_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const TimeBinSchedule& s);
nlohmann::ordered_json to_json(const MachineSpec& m);
MachineSpec machine_from_json(const nlohmann::json& j);

}  // namespace loopsim
