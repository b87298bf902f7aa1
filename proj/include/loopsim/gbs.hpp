#pragma once

// Photon-number statistics of zero-mean Gaussian states.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "loopsim/errors.hpp"
#include "loopsim/gaussian.hpp"
#include "loopsim/hafnian.hpp"
#include "loopsim/rng.hpp"

namespace loopsim {

enum class GbsMethod { Auto, Mixed, Pure };

namespace detail {

// Husimi covariance Q of the complex amplitudes (a, a^*) and the GBS kernel
// A = X (I - Q^{-1}).
struct GbsKernel {
    Eigen::MatrixXcd Q;
    Eigen::MatrixXcd A;
    double sqrt_det_q;
};

inline GbsKernel gbs_kernel(const GaussianStateD& s) {
    const auto m = static_cast<Eigen::Index>(s.mode_count());
    using Cx = std::complex<double>;
    const Eigen::MatrixXd x = 2.0 * s.cov().topLeftCorner(m, m);
    const Eigen::MatrixXd p = 2.0 * s.cov().bottomRightCorner(m, m);
    const Eigen::MatrixXd xp = 2.0 * s.cov().topRightCorner(m, m);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
    const Eigen::MatrixXcd aidaj =
        (x + p - 2.0 * I).cast<Cx>() / 4.0 + Cx(0, 0.25) * (xp - xp.transpose()).cast<Cx>();
    const Eigen::MatrixXcd aiaj = (x - p).cast<Cx>() / 4.0 + Cx(0, 0.25) * (xp + xp.transpose()).cast<Cx>();
    GbsKernel k;
    k.Q.resize(2 * m, 2 * m);
    k.Q << aidaj, aiaj.conjugate(), aiaj, aidaj.conjugate();
    k.Q += Eigen::MatrixXcd::Identity(2 * m, 2 * m);
    Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
    X.topRightCorner(m, m).setIdentity();
    X.bottomLeftCorner(m, m).setIdentity();
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(k.Q);
    k.A = X * (Eigen::MatrixXcd::Identity(2 * m, 2 * m) - lu.inverse());
    k.A = (0.5 * (k.A + k.A.transpose())).eval();
    k.sqrt_det_q = std::sqrt(std::abs(lu.determinant().real()));
    return k;
}

inline double factorial_product(const std::vector<int>& pattern) {
    double f = 1.0;
    for (int n : pattern)
        for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

inline Eigen::MatrixXcd repeat_submatrix(const Eigen::MatrixXcd& A, const std::vector<Eigen::Index>& idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXcd out(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) out(r, c) = A(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
    return out;
}

inline void check_gbs_input(const GaussianStateD& s, const std::vector<int>& pattern) {
    if (pattern.size() != s.mode_count()) throw ShapeMismatch("pattern length must equal the mode count");
    for (int n : pattern)
        if (n < 0) throw InvalidArgument("photon counts must be >= 0");
    if (s.mean().cwiseAbs().maxCoeff() > 1e-10)
        throw NonZeroMean("photon statistics are implemented for zero-mean states only");
}

}  // namespace detail

// P(pattern) = haf(A_n) / (prod n_i! sqrt(det Q)). The pure path uses the
// m x m block B of A and |haf(B_n)|^2; Auto picks it when det(2 cov) = 1.
inline double gbs_probability(const GaussianStateD& s, const std::vector<int>& pattern,
                              GbsMethod method = GbsMethod::Auto) {
    detail::check_gbs_input(s, pattern);
    int total = 0;
    for (int n : pattern) total += n;
    if (method == GbsMethod::Auto)
        method = std::abs(purity_determinant(s) - 1.0) < 1e-10 ? GbsMethod::Pure : GbsMethod::Mixed;
    // Pure zero-mean states only emit photons in pairs; mixed ones need not.
    if (method == GbsMethod::Pure && total % 2 != 0) return 0.0;
    const auto kernel = detail::gbs_kernel(s);
    const auto m = static_cast<Eigen::Index>(s.mode_count());

    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < m; ++i)
        for (int r = 0; r < pattern[static_cast<std::size_t>(i)]; ++r) idx.push_back(i);
    const double norm = detail::factorial_product(pattern) * kernel.sqrt_det_q;
    if (method == GbsMethod::Pure) {
        const Eigen::MatrixXcd B = kernel.A.topLeftCorner(m, m);
        return std::norm(hafnian(detail::repeat_submatrix(B, idx))) / norm;
    }
    const std::size_t half = idx.size();
    for (std::size_t k = 0; k < half; ++k) idx.push_back(idx[k] + m);
    return hafnian(detail::repeat_submatrix(kernel.A, idx)).real() / norm;
}

// Chain-rule sampler: mode k is drawn from P(n_0..n_k) on the reduced state
// of modes 0..k, conditioned on the prefix already drawn. Counts per mode are
// capped at cutoff-1 and each conditional is renormalized over that support.
inline std::vector<std::vector<int>> gbs_sample(const GaussianStateD& s, std::size_t n_samples, Rng& rng,
                                                int cutoff = 6) {
    const std::size_t m = s.mode_count();
    if (m > 8) throw ScaleExceeded("gbs_sample is limited to 8 modes");
    if (cutoff < 1) throw InvalidArgument("cutoff must be >= 1");
    if (s.mean().cwiseAbs().maxCoeff() > 1e-10)
        throw NonZeroMean("photon statistics are implemented for zero-mean states only");

    std::vector<GaussianStateD> prefixes;
    for (std::size_t k = 1; k <= m; ++k) {
        std::vector<std::size_t> modes(k);
        for (std::size_t i = 0; i < k; ++i) modes[i] = i;
        prefixes.push_back(reduced_state(s, modes));
    }
    std::map<std::vector<int>, double> memo;
    auto prob = [&](const std::vector<int>& prefix) {
        auto it = memo.find(prefix);
        if (it != memo.end()) return it->second;
        const double p = std::max(0.0, gbs_probability(prefixes[prefix.size() - 1], prefix, GbsMethod::Mixed));
        memo.emplace(prefix, p);
        return p;
    };

    std::vector<std::vector<int>> samples;
    samples.reserve(n_samples);
    std::vector<double> weights(static_cast<std::size_t>(cutoff));
    for (std::size_t shot = 0; shot < n_samples; ++shot) {
        std::vector<int> pattern;
        for (std::size_t k = 0; k < m; ++k) {
            double sum = 0.0;
            pattern.push_back(0);
            for (int n = 0; n < cutoff; ++n) {
                pattern.back() = n;
                weights[static_cast<std::size_t>(n)] = prob(pattern);
                sum += weights[static_cast<std::size_t>(n)];
            }
            if (!(sum > 0.0)) throw ZeroProbability("no support for the sampled prefix below the cutoff");
            double u = rng.uniform() * sum;
            int pick = cutoff - 1;
            for (int n = 0; n < cutoff; ++n) {
                u -= weights[static_cast<std::size_t>(n)];
                if (u < 0.0) {
                    pick = n;
                    break;
                }
            }
            pattern.back() = pick;
        }
        samples.push_back(std::move(pattern));
    }
    return samples;
}

}  // namespace loopsim
