#pragma once

// Truncated multimode Fock-space carriers.
//
// Amplitude layout: mode 0 is the slowest-varying index, i.e. the flat index
// of occupation (n_0, ..., n_{m-1}) is sum_k n_k d^{m-1-k}. Golden files and
// the JSON snapshot format rely on this ordering.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "loopsim/errors.hpp"

namespace loopsim {

inline std::size_t ipow(std::size_t base, std::size_t exp) {
    std::size_t out = 1;
    for (std::size_t k = 0; k < exp; ++k) out *= base;
    return out;
}

// Stride of `mode` in the flat index.
inline std::size_t mode_stride(std::size_t cutoff, std::size_t mode_count, std::size_t mode) {
    return ipow(cutoff, mode_count - 1 - mode);
}

inline std::size_t flat_index(std::size_t cutoff, std::span<const int> occupation) {
    std::size_t idx = 0;
    for (int n : occupation) idx = idx * cutoff + static_cast<std::size_t>(n);
    return idx;
}

inline std::vector<int> occupation_of(std::size_t cutoff, std::size_t mode_count, std::size_t index) {
    std::vector<int> occ(mode_count);
    for (std::size_t k = mode_count; k-- > 0;) {
        occ[k] = static_cast<int>(index % cutoff);
        index /= cutoff;
    }
    return occ;
}

namespace detail {
inline void check_shape(std::size_t mode_count, std::size_t cutoff) {
    if (cutoff < 2) throw InvalidArgument("cutoff must be >= 2, got " + std::to_string(cutoff));
    if (mode_count > 16) throw InvalidArgument("mode_count too large for a dense Fock tensor");
}
}  // namespace detail

// Pure state. Amplitudes are kept unit-norm; the probability accumulated by
// conditioning lives in norm_weight. A zero-mode state is the scalar left over
// after every mode has been measured.
template <typename Scalar = double>
class FockState {
public:
    using RealScalar = Scalar;
    using Complex = std::complex<Scalar>;
    using Vector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

    FockState(std::size_t mode_count, std::size_t cutoff)
        : mode_count_(mode_count), cutoff_(cutoff) {
        detail::check_shape(mode_count, cutoff);
        amplitudes_ = Vector::Zero(static_cast<Eigen::Index>(ipow(cutoff, mode_count)));
        amplitudes_(0) = Complex(1);
    }

    static FockState vacuum(std::size_t mode_count, std::size_t cutoff) {
        return FockState(mode_count, cutoff);
    }

    static FockState basis(std::size_t cutoff, std::span<const int> occupation) {
        FockState s(occupation.size(), cutoff);
        for (int n : occupation) {
            if (n < 0 || static_cast<std::size_t>(n) >= cutoff)
                throw InvalidArgument("occupation " + std::to_string(n) + " outside cutoff");
        }
        s.amplitudes_.setZero();
        s.amplitudes_(static_cast<Eigen::Index>(flat_index(cutoff, occupation))) = Complex(1);
        return s;
    }

    static FockState basis(std::size_t cutoff, std::initializer_list<int> occupation) {
        std::vector<int> occ(occupation);
        return basis(cutoff, std::span<const int>(occ));
    }

    // Normalizes `amplitudes`; throws ZeroNormError on the zero vector.
    static FockState from_amplitudes(std::size_t mode_count, std::size_t cutoff, Vector amplitudes,
                                     Scalar norm_weight = Scalar(1)) {
        FockState s(mode_count, cutoff);
        if (amplitudes.size() != s.amplitudes_.size())
            throw ShapeMismatch("amplitude vector has wrong length");
        const Scalar n = amplitudes.norm();
        if (!(n > Scalar(0))) throw ZeroNormError("cannot normalize zero amplitude vector");
        s.amplitudes_ = amplitudes / n;
        s.norm_weight_ = norm_weight;
        return s;
    }

    std::size_t mode_count() const noexcept { return mode_count_; }
    std::size_t cutoff() const noexcept { return cutoff_; }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }

    const Vector& amplitudes() const noexcept { return amplitudes_; }
    Complex amplitude(std::span<const int> occupation) const {
        return amplitudes_(static_cast<Eigen::Index>(flat_index(cutoff_, occupation)));
    }
    Complex amplitude(std::initializer_list<int> occupation) const {
        std::vector<int> occ(occupation);
        return amplitude(std::span<const int>(occ));
    }

    Scalar norm_weight() const noexcept { return norm_weight_; }
    void set_norm_weight(Scalar w) noexcept { norm_weight_ = w; }

    // Replaces the amplitudes (renormalizing) while keeping shape and weight.
    void assign(Vector amplitudes) {
        const Scalar n = amplitudes.norm();
        if (!(n > Scalar(0))) throw ZeroNormError("state collapsed to zero norm");
        amplitudes_ = std::move(amplitudes) / n;
    }

    std::vector<Scalar> probabilities() const {
        std::vector<Scalar> p(dimension());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(amplitudes_(static_cast<Eigen::Index>(i)));
        return p;
    }

    bool same_shape(const FockState& other) const noexcept {
        return mode_count_ == other.mode_count_ && cutoff_ == other.cutoff_;
    }

private:
    std::size_t mode_count_;
    std::size_t cutoff_;
    Vector amplitudes_;
    Scalar norm_weight_ = Scalar(1);
};

// Mixed state in the same truncated basis. The matrix is kept unit-trace;
// trace_weight plays the role of FockState::norm_weight.
template <typename Scalar = double>
class DensityOperator {
public:
    using RealScalar = Scalar;
    using Complex = std::complex<Scalar>;
    using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

    DensityOperator(std::size_t mode_count, std::size_t cutoff)
        : mode_count_(mode_count), cutoff_(cutoff) {
        detail::check_shape(mode_count, cutoff);
        const auto n = static_cast<Eigen::Index>(ipow(cutoff, mode_count));
        matrix_ = Matrix::Zero(n, n);
        matrix_(0, 0) = Complex(1);
    }

    explicit DensityOperator(const FockState<Scalar>& pure)
        : mode_count_(pure.mode_count()), cutoff_(pure.cutoff()), trace_weight_(pure.norm_weight()) {
        matrix_ = pure.amplitudes() * pure.amplitudes().adjoint();
    }

    static DensityOperator from_matrix(std::size_t mode_count, std::size_t cutoff, Matrix m,
                                       Scalar trace_weight = Scalar(1)) {
        DensityOperator rho(mode_count, cutoff);
        if (m.rows() != rho.matrix_.rows() || m.cols() != rho.matrix_.cols())
            throw ShapeMismatch("density matrix has wrong dimension");
        const Scalar tr = m.trace().real();
        if (!(tr > Scalar(0))) throw ZeroNormError("density matrix has non-positive trace");
        rho.matrix_ = std::move(m) / tr;
        rho.trace_weight_ = trace_weight;
        return rho;
    }

    static DensityOperator basis(std::size_t cutoff, std::span<const int> occupation) {
        return DensityOperator(FockState<Scalar>::basis(cutoff, occupation));
    }
    static DensityOperator basis(std::size_t cutoff, std::initializer_list<int> occupation) {
        return DensityOperator(FockState<Scalar>::basis(cutoff, occupation));
    }

    std::size_t mode_count() const noexcept { return mode_count_; }
    std::size_t cutoff() const noexcept { return cutoff_; }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }

    const Matrix& matrix() const noexcept { return matrix_; }
    Scalar trace_weight() const noexcept { return trace_weight_; }
    void set_trace_weight(Scalar w) noexcept { trace_weight_ = w; }

    // Replaces the matrix, restoring unit trace.
    void assign(Matrix m) {
        const Scalar tr = m.trace().real();
        if (!(tr > Scalar(0))) throw ZeroNormError("density matrix collapsed to zero trace");
        matrix_ = std::move(m) / tr;
    }

    Scalar purity() const { return (matrix_ * matrix_).trace().real(); }

    std::vector<Scalar> probabilities() const {
        std::vector<Scalar> p(dimension());
        for (std::size_t i = 0; i < p.size(); ++i)
            p[i] = matrix_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
        return p;
    }

    bool same_shape(const DensityOperator& other) const noexcept {
        return mode_count_ == other.mode_count_ && cutoff_ == other.cutoff_;
    }

private:
    std::size_t mode_count_;
    std::size_t cutoff_;
    Matrix matrix_;
    Scalar trace_weight_ = Scalar(1);
};

template <typename Scalar>
DensityOperator<Scalar> promote(const FockState<Scalar>& s) {
    return DensityOperator<Scalar>(s);
}

using FockStateD = FockState<double>;
using DensityOperatorD = DensityOperator<double>;

}  // namespace loopsim
