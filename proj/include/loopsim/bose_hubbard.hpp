#pragma once

// Bose-Hubbard dynamics two ways: exact diagonalization in the N-photon
// sector, and a Trotterized beamsplitter + Kerr circuit run on the Fock engine.
//
//   H = -J sum_<ij> (a_i^dag a_j + h.c.) + (U/2) sum_i n_i (n_i - 1)
//
// One step of length dt maps exp(-i H_hop dt) to BS(theta = J dt, phi = pi/2)
// on every bond, since BS(theta, pi/2) = exp[i theta (a_i^dag a_j + h.c.)], and
// exp(-i H_int dt) to Kerr(-U dt / 2) on every site.

#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "loopsim/fock_engine.hpp"
#include "loopsim/gates.hpp"

namespace loopsim {

enum class Boundary { Open, Periodic };
enum class TrotterOrder { Lie, Strang };
enum class BondOrder { EvenOdd, OddEven };

struct LatticeSpec {
    std::size_t n_sites = 3;
    double J = 1.0;
    double U = 1.0;
    Boundary boundary = Boundary::Open;
    double t = 0.5;

    void validate() const;
    // Nearest-neighbour pairs (i, i+1), plus (n-1, 0) when periodic and n > 2.
    std::vector<std::pair<std::size_t, std::size_t>> bonds() const;
};

using Occupation = std::vector<int>;
using FockConfigDistribution = std::map<Occupation, double>;

// All occupations of n_photons on n_sites, in descending lexicographic order:
// (2,0,0), (1,1,0), (1,0,1), (0,2,0), (0,1,1), (0,0,2).
std::vector<Occupation> sector_basis(std::size_t n_sites, int n_photons);

// "|200>"; sites are separated by ';' once any occupation needs two digits.
std::string occupation_label(const Occupation& occ);

inline constexpr std::size_t kMaxSectorDimension = 4096;

Eigen::MatrixXd sector_hamiltonian(const LatticeSpec& spec, const std::vector<Occupation>& basis);

// exp(-i H t)|initial> in the sector basis.
Eigen::VectorXcd exact_amplitudes(const LatticeSpec& spec, const Occupation& initial);
FockConfigDistribution exact_evolve(const LatticeSpec& spec, const Occupation& initial);

double energy_expectation(const LatticeSpec& spec, const std::vector<Occupation>& basis, const Eigen::VectorXcd& psi);

struct TrotterOptions {
    TrotterOrder order = TrotterOrder::Lie;
    BondOrder bond_order = BondOrder::EvenOdd;
};

// Lie: per step the hopping layer (first bond parity, then the other) then the
// Kerr layer. Strang: Kerr(dt/2), first half-layer(dt/2), second layer(dt),
// first half-layer(dt/2), Kerr(dt/2).
CircuitProgram trotter_compile(const LatticeSpec& spec, std::size_t n_steps, const TrotterOptions& opt = {});

FockConfigDistribution simulate_dynamics(const LatticeSpec& spec, const Occupation& initial, std::size_t n_steps,
                                         const TrotterOptions& opt = {}, const EngineOptions& engine = {});

double tv_distance(const FockConfigDistribution& a, const FockConfigDistribution& b);

struct DynamicsRow {
    double u_over_j;
    double t;
    std::string initial;
    std::string config;
    double p_trotter;
    double p_exact;
    double tv_distance;  // per grid point, repeated on each config row
};

// Every (initial, U/J, t) point: U = (U/J) * J of the template.
std::vector<DynamicsRow> sweep_and_timeseries(const LatticeSpec& tmpl, const std::vector<Occupation>& initials,
                                              const std::vector<double>& u_over_j, const std::vector<double>& times,
                                              std::size_t n_steps, const TrotterOptions& opt = {});

void write_dynamics_csv(std::ostream& out, const std::vector<DynamicsRow>& rows);

}  // namespace loopsim
