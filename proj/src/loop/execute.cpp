#include "loopsim/fock_engine.hpp"
#include "loopsim/loop_compiler.hpp"
#include "loopsim/measurement.hpp"

namespace loopsim {

namespace {

// Flat index of an (m-1)-mode state mapped into m modes with a 0 at `mode`.
std::size_t widen(std::size_t i, std::size_t m_new, std::size_t d, std::size_t mode) {
    const std::size_t low = ipow(d, m_new - 1 - mode);
    return (i / low) * low * d + i % low;
}

template <typename State>
State lower_gate(const State& s, const GateOp& g, const EngineOptions& opt) {
    return apply_gate(s, g, opt);
}

template <typename State>
State lower(const State& s, const ProgramOp& op, const EngineOptions& opt) {
    GateOp g;
    if (as_gate(op, g)) return lower_gate(s, g, opt);
    if (const auto* h = std::get_if<HomodyneProjection>(&op))
        return insert_vacuum(homodyne_project(s, h->mode, h->theta, h->outcome).state, h->mode);
    const auto& n = std::get<PnrdProjection>(op);
    return insert_vacuum(pnrd_project(s, n.mode, n.photons).state, n.mode);
}

GaussianStateD lower(const GaussianStateD& s, const ProgramOp& op) {
    GateOp g;
    if (!as_gate(op, g)) throw NonGaussianOp(kind_name(op) + " projection is not supported by the Gaussian path");
    return apply_symplectic(s, g);
}

void check_modes(std::size_t program_modes, std::size_t state_modes) {
    if (program_modes != state_modes)
        throw ShapeMismatch("program has " + std::to_string(program_modes) + " modes, state has " +
                            std::to_string(state_modes));
}

}  // namespace

FockStateD insert_vacuum(const FockStateD& s, std::size_t mode) {
    const std::size_t m = s.mode_count() + 1, d = s.cutoff();
    if (mode >= m) throw InvalidMode("insert position " + std::to_string(mode) + " out of range");
    FockStateD::Vector v = FockStateD::Vector::Zero(static_cast<Eigen::Index>(ipow(d, m)));
    for (std::size_t i = 0; i < s.dimension(); ++i)
        v(static_cast<Eigen::Index>(widen(i, m, d, mode))) = s.amplitudes()(static_cast<Eigen::Index>(i));
    return FockStateD::from_amplitudes(m, d, std::move(v), s.norm_weight());
}

DensityOperatorD insert_vacuum(const DensityOperatorD& rho, std::size_t mode) {
    const std::size_t m = rho.mode_count() + 1, d = rho.cutoff();
    if (mode >= m) throw InvalidMode("insert position " + std::to_string(mode) + " out of range");
    const auto n = static_cast<Eigen::Index>(ipow(d, m));
    DensityOperatorD::Matrix M = DensityOperatorD::Matrix::Zero(n, n);
    std::vector<Eigen::Index> map(rho.dimension());
    for (std::size_t i = 0; i < map.size(); ++i) map[i] = static_cast<Eigen::Index>(widen(i, m, d, mode));
    for (std::size_t j = 0; j < map.size(); ++j)
        for (std::size_t i = 0; i < map.size(); ++i)
            M(map[i], map[j]) = rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return DensityOperatorD::from_matrix(m, d, std::move(M), rho.trace_weight());
}

FockStateD execute_program(const CircuitProgram& program, FockStateD state, const EngineOptions& opt) {
    check_modes(program.mode_count, state.mode_count());
    for (const auto& op : program.ops) state = lower(state, op, opt);
    return state;
}

DensityOperatorD execute_program(const CircuitProgram& program, DensityOperatorD state, const EngineOptions& opt) {
    check_modes(program.mode_count, state.mode_count());
    for (const auto& op : program.ops) state = lower(state, op, opt);
    return state;
}

GaussianStateD execute_program(const CircuitProgram& program, GaussianStateD state) {
    check_modes(program.mode_count, state.mode_count());
    for (const auto& op : program.ops) state = lower(state, op);
    return state;
}

FockStateD execute_schedule(const TimeBinSchedule& schedule, FockStateD state, const EngineOptions& opt) {
    check_modes(schedule.mode_count, state.mode_count());
    for (const auto& e : schedule.events) state = lower(state, e.op, opt);
    return state;
}

DensityOperatorD execute_schedule(const TimeBinSchedule& schedule, DensityOperatorD state, const EngineOptions& opt) {
    check_modes(schedule.mode_count, state.mode_count());
    for (const auto& e : schedule.events) state = lower(state, e.op, opt);
    return state;
}

GaussianStateD execute_schedule(const TimeBinSchedule& schedule, GaussianStateD state) {
    check_modes(schedule.mode_count, state.mode_count());
    for (const auto& e : schedule.events) state = lower(state, e.op);
    return state;
}

}  // namespace loopsim
