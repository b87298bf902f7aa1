#pragma once

#include <stdexcept>
#include <string>

namespace loopsim {

// Root of every error raised by the library. The CLI maps subclasses onto
// exit codes, so keep the hierarchy shallow.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Physics / numerics failures (exit code 3 in the CLI).
class PhysicsError : public Error {
public:
    using Error::Error;
};

class TruncationError : public PhysicsError {
public:
    TruncationError(const std::string& what, double leakage)
        : PhysicsError(what), leakage_(leakage) {}
    double leakage() const noexcept { return leakage_; }

private:
    double leakage_;
};

#define LOOPSIM_DEFINE_ERROR(Name, Base) \
    class Name : public Base {           \
    public:                              \
        using Base::Base;                \
    };

LOOPSIM_DEFINE_ERROR(InvalidMode, PhysicsError)
LOOPSIM_DEFINE_ERROR(InvalidEta, PhysicsError)
LOOPSIM_DEFINE_ERROR(InvalidArgument, PhysicsError)
LOOPSIM_DEFINE_ERROR(ZeroNormError, PhysicsError)
LOOPSIM_DEFINE_ERROR(ShapeMismatch, PhysicsError)
LOOPSIM_DEFINE_ERROR(NonGaussianOp, PhysicsError)
LOOPSIM_DEFINE_ERROR(NonSymmetric, PhysicsError)
LOOPSIM_DEFINE_ERROR(NonZeroMean, PhysicsError)
LOOPSIM_DEFINE_ERROR(ScaleExceeded, PhysicsError)
LOOPSIM_DEFINE_ERROR(ZeroDensity, PhysicsError)
LOOPSIM_DEFINE_ERROR(ZeroProbability, PhysicsError)
LOOPSIM_DEFINE_ERROR(NoPeakFound, PhysicsError)
LOOPSIM_DEFINE_ERROR(GridTooCoarse, PhysicsError)
LOOPSIM_DEFINE_ERROR(SectorTooLarge, PhysicsError)

class UnschedulableError : public PhysicsError {
public:
    UnschedulableError(const std::string& what, std::size_t event_index)
        : PhysicsError(what), event_index_(event_index) {}
    std::size_t event_index() const noexcept { return event_index_; }

private:
    std::size_t event_index_;
};

// Exit code 4.
LOOPSIM_DEFINE_ERROR(IOError, Error)

// Exit code 2. `field` is a JSON-pointer-like path into the manifest.
class ManifestError : public Error {
public:
    ManifestError(const std::string& field, const std::string& what)
        : Error(field + ": " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

#undef LOOPSIM_DEFINE_ERROR

}  // namespace loopsim
