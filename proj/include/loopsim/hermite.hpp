#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <vector>

namespace loopsim {

// Normalized oscillator eigenfunctions psi_0..psi_{count-1} at x (x = (a+a^dag)/sqrt2):
//   psi_0 = pi^{-1/4} e^{-x^2/2},  psi_1 = sqrt2 x psi_0,
//   psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}.
// The upward recurrence on normalized functions never forms H_n(x) itself, so
// nothing overflows for the cutoffs used here.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> hermite_functions(Scalar x, std::size_t count) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> psi(static_cast<Eigen::Index>(count));
    if (count == 0) return psi;
    psi(0) = std::pow(Scalar(M_PI), Scalar(-0.25)) * std::exp(-x * x / 2);
    if (count > 1) psi(1) = std::sqrt(Scalar(2)) * x * psi(0);
    for (std::size_t n = 1; n + 1 < count; ++n) {
        const auto nn = static_cast<Scalar>(n);
        psi(static_cast<Eigen::Index>(n + 1)) = std::sqrt(Scalar(2) / (nn + 1)) * x * psi(static_cast<Eigen::Index>(n)) -
                                                std::sqrt(nn / (nn + 1)) * psi(static_cast<Eigen::Index>(n - 1));
    }
    return psi;
}

// Uniform quadrature grid, endpoints included.
struct QuadratureGrid {
    double lo = -8.0;
    double hi = 8.0;
    std::size_t points = 4096;

    double step() const { return (hi - lo) / static_cast<double>(points - 1); }
    double at(std::size_t i) const { return lo + step() * static_cast<double>(i); }
    std::vector<double> values() const {
        std::vector<double> v(points);
        for (std::size_t i = 0; i < points; ++i) v[i] = at(i);
        return v;
    }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

// Row i holds psi_0..psi_{d-1} at grid point i.
inline Eigen::MatrixXd hermite_table(const QuadratureGrid& grid, std::size_t cutoff) {
    Eigen::MatrixXd table(static_cast<Eigen::Index>(grid.points), static_cast<Eigen::Index>(cutoff));
    for (std::size_t i = 0; i < grid.points; ++i)
        table.row(static_cast<Eigen::Index>(i)) = hermite_functions(grid.at(i), cutoff).transpose();
    return table;
}

// Trapezoid rule on a uniform grid.
inline double trapezoid(const std::vector<double>& f, double h) {
    if (f.size() < 2) return 0.0;
    double acc = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += f[i];
    return acc * h;
}

}  // namespace loopsim
