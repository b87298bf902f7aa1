#include <cmath>
#include <numeric>


#include "loopsim/bose_hubbard.hpp"

namespace loopsim {

void LatticeSpec::validate() const {
    if (n_sites < 2) throw InvalidArgument("lattice needs at least 2 sites");
    if (!(J >= 0.0)) throw InvalidArgument("hopping J must be >= 0");
    if (!std::isfinite(U)) throw InvalidArgument("interaction U must be finite");
    if (!(t >= 0.0)) throw InvalidArgument("evolution time must be >= 0");
}

std::vector<std::pair<std::size_t, std::size_t>> LatticeSpec::bonds() const {
    std::vector<std::pair<std::size_t, std::size_t>> b;
    for (std::size_t i = 0; i + 1 < n_sites; ++i) b.emplace_back(i, i + 1);
    if (boundary == Boundary::Periodic && n_sites > 2) b.emplace_back(n_sites - 1, 0);
    return b;
}

namespace {

void fill(std::vector<Occupation>& out, Occupation& cur, std::size_t site, int left) {
    if (site + 1 == cur.size()) {
        cur[site] = left;
        out.push_back(cur);
        return;
    }
    for (int n = left; n >= 0; --n) {
        cur[site] = n;
        fill(out, cur, site + 1, left - n);
    }
}

int total(const Occupation& occ) { return std::accumulate(occ.begin(), occ.end(), 0); }

}  // namespace

std::vector<Occupation> sector_basis(std::size_t n_sites, int n_photons) {
    if (n_sites == 0 || n_photons < 0) throw InvalidArgument("sector needs >= 1 site and >= 0 photons");
    std::vector<Occupation> out;
    Occupation cur(n_sites, 0);
    fill(out, cur, 0, n_photons);
    return out;
}

std::string occupation_label(const Occupation& occ) {
    bool wide = false;
    for (int n : occ) wide = wide || n > 9;
    std::string s = "|";
    for (std::size_t i = 0; i < occ.size(); ++i) {
        if (wide && i > 0) s += ';';
        s += std::to_string(occ[i]);
    }
    return s + ">";
}

Eigen::MatrixXd sector_hamiltonian(const LatticeSpec& spec, const std::vector<Occupation>& basis) {
    std::map<Occupation, Eigen::Index> index;
    for (std::size_t k = 0; k < basis.size(); ++k) index[basis[k]] = static_cast<Eigen::Index>(k);
    const auto dim = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        const Occupation& occ = basis[static_cast<std::size_t>(k)];
        for (int n : occ) H(k, k) += 0.5 * spec.U * n * (n - 1);
        for (auto [i, j] : spec.bonds()) {
            // a_i^dag a_j and its conjugate a_j^dag a_i.
            for (auto [to, from] : {std::pair{i, j}, std::pair{j, i}}) {
                if (occ[from] == 0) continue;
                Occupation next = occ;
                const double amp = std::sqrt(static_cast<double>(next[from]) * (next[to] + 1));
                --next[from];
                ++next[to];
                H(index.at(next), k) += -spec.J * amp;
            }
        }
    }
    return H;
}

Eigen::VectorXcd exact_amplitudes(const LatticeSpec& spec, const Occupation& initial) {
    spec.validate();
    if (initial.size() != spec.n_sites) throw ShapeMismatch("initial occupation length differs from n_sites");
    for (int n : initial)
        if (n < 0) throw InvalidArgument("occupations must be >= 0");
    const auto basis = sector_basis(spec.n_sites, total(initial));
    if (basis.size() > kMaxSectorDimension)
        throw SectorTooLarge("photon-number sector has dimension " + std::to_string(basis.size()));
    const Eigen::MatrixXd H = sector_hamiltonian(spec, basis);
    // H is real symmetric: exp(-iHt) = V exp(-i E t) V^T.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    Eigen::VectorXcd phases(H.rows());
    for (Eigen::Index k = 0; k < H.rows(); ++k) phases(k) = std::polar(1.0, -es.eigenvalues()(k) * spec.t);
    const auto it = std::find(basis.begin(), basis.end(), initial);
    const Eigen::VectorXd e0 = es.eigenvectors().row(std::distance(basis.begin(), it)).transpose();
    return es.eigenvectors().cast<std::complex<double>>() * (phases.array() * e0.array().cast<std::complex<double>>()).matrix();
}

FockConfigDistribution exact_evolve(const LatticeSpec& spec, const Occupation& initial) {
    const Eigen::VectorXcd psi = exact_amplitudes(spec, initial);
    const auto basis = sector_basis(spec.n_sites, total(initial));
    FockConfigDistribution out;
    for (std::size_t k = 0; k < basis.size(); ++k) out[basis[k]] = std::norm(psi(static_cast<Eigen::Index>(k)));
    return out;
}

double energy_expectation(const LatticeSpec& spec, const std::vector<Occupation>& basis, const Eigen::VectorXcd& psi) {
    const Eigen::MatrixXd H = sector_hamiltonian(spec, basis);
    return (psi.adjoint() * H.cast<std::complex<double>>() * psi)(0).real();
}

double tv_distance(const FockConfigDistribution& a, const FockConfigDistribution& b) {
    double acc = 0.0;
    for (const auto& [occ, p] : a) {
        const auto it = b.find(occ);
        acc += std::abs(p - (it == b.end() ? 0.0 : it->second));
    }
    for (const auto& [occ, q] : b)
        if (!a.count(occ)) acc += std::abs(q);
    return 0.5 * acc;
}

}  // namespace loopsim
