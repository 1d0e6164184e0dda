#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hpep {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedDimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid element geometry: inverted, non-convex or degenerate cells.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Non-conforming mesh, bad boundary tags or incomparable degrees.
class MeshError : public Error {
public:
    using Error::Error;
};

class AssemblyError : public Error {
public:
    using Error::Error;
};

/// Raised when the displacement system has no Dirichlet support.
class BoundaryConditionError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class FeasibilityError : public Error {
public:
    using Error::Error;
};

class SingularMatrixError : public Error {
public:
    SingularMatrixError(const std::string& what, std::ptrdiff_t pivot)
        : Error(what), pivot_(pivot) {}

    /// Index of the failing pivot, or -1 when the factorization did not report one.
    std::ptrdiff_t pivot() const noexcept { return pivot_; }

private:
    std::ptrdiff_t pivot_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace hpep
