#pragma once

// Gate vocabulary shared by both engines and the loop compiler.
//
// Conventions (hbar = 1):
//   x = (a + a^dag)/sqrt2,  p = (a - a^dag)/(i sqrt2),  vacuum Var(x) = 1/2
//   Squeeze(r, phi)      exp[(r/2)(e^{-2i phi} a^2 - e^{2i phi} a^dag^2)]
//   BeamSplitter(th,phi) exp[th (e^{i phi} a_i^dag a_j - e^{-i phi} a_i a_j^dag)],
//                        th = pi/4 is 50:50
//   Phase(phi)           exp[i phi n]
//   Kerr(Phi)            exp[i Phi n(n-1)]
//   Displace(beta)       exp[beta a^dag - beta^* a]
//   Loss(eta)            pure-loss channel with transmissivity eta

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace loopsim {

struct Displace {
    std::size_t mode = 0;
    std::complex<double> beta{};
};

struct Squeeze {
    std::size_t mode = 0;
    double r = 0.0;
    double phi = 0.0;
};

struct BeamSplitter {
    std::size_t mode_i = 0;
    std::size_t mode_j = 1;
    double theta = 0.0;
    double phi = 0.0;
};

struct Phase {
    std::size_t mode = 0;
    double phi = 0.0;
};

struct Kerr {
    std::size_t mode = 0;
    double phi = 0.0;
};

struct Loss {
    std::size_t mode = 0;
    double eta = 1.0;
};

using GateOp = std::variant<Displace, Squeeze, BeamSplitter, Phase, Kerr, Loss>;

// Post-selected measurements inside a program. The measured time bin is
// consumed and re-enters the circuit as vacuum, so mode indices stay stable.
struct HomodyneProjection {
    std::size_t mode = 0;
    double theta = 0.0;
    double outcome = 0.0;
};

struct PnrdProjection {
    std::size_t mode = 0;
    int photons = 0;
};

using ProgramOp = std::variant<Displace, Squeeze, BeamSplitter, Phase, Kerr, Loss,
                               HomodyneProjection, PnrdProjection>;

struct CircuitProgram {
    std::size_t mode_count = 0;
    std::vector<ProgramOp> ops;

    bool empty() const noexcept { return ops.empty(); }
};

// Modes an operation acts on (one or two entries).
inline std::vector<std::size_t> modes_of(const ProgramOp& op) {
    return std::visit(
        [](const auto& g) -> std::vector<std::size_t> {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, BeamSplitter>) {
                return {g.mode_i, g.mode_j};
            } else {
                return {g.mode};
            }
        },
        op);
}

inline std::vector<std::size_t> modes_of(const GateOp& op) {
    return std::visit([](const auto& g) { return modes_of(ProgramOp{g}); }, op);
}

inline std::string kind_name(const ProgramOp& op) {
    static constexpr std::array<const char*, 8> names = {
        "displace", "squeeze", "beamsplitter", "phase", "kerr", "loss", "homodyne", "pnrd"};
    return names[op.index()];
}

inline ProgramOp to_program_op(const GateOp& op) {
    return std::visit([](const auto& g) { return ProgramOp{g}; }, op);
}

// Returns false (leaving `out` untouched) when `op` is a measurement.
inline bool as_gate(const ProgramOp& op, GateOp& out) {
    return std::visit(
        [&](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, HomodyneProjection> || std::is_same_v<T, PnrdProjection>) {
                return false;
            } else {
                out = g;
                return true;
            }
        },
        op);
}

}  // namespace loopsim
