#pragma once

#include <stdexcept>
#include <string>

namespace varnet {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DivisionByZero : Error {
    DivisionByZero() : Error("division by zero") {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(what) {}
};

struct TapeMismatch : Error {
    TapeMismatch() : Error("operands belong to different tapes") {}
};

struct OrderMismatch : Error {
    OrderMismatch() : Error("jet operands have mismatched input space or derivative order") {}
};

struct OrderUnsupported : Error {
    OrderUnsupported(int requested, int max)
        : Error("derivative order " + std::to_string(requested) +
                " unsupported (engine maximum " + std::to_string(max) + ")") {}
};

struct InvalidDims : Error {
    explicit InvalidDims(const std::string& what) : Error(what) {}
};

struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& what) : Error(what) {}
};

struct InvalidRange : Error {
    explicit InvalidRange(const std::string& what) : Error(what) {}
};

struct InvalidCount : Error {
    explicit InvalidCount(const std::string& what) : Error(what) {}
};

struct OutOfBounds : Error {
    explicit OutOfBounds(const std::string& what) : Error(what) {}
};

struct PointCountIncompatible : Error {
    explicit PointCountIncompatible(const std::string& what) : Error(what) {}
};

struct NonUniformGrid : Error {
    NonUniformGrid() : Error("integration grid is not uniformly spaced") {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

struct AxisOutOfRange : Error {
    explicit AxisOutOfRange(int axis, int dim)
        : Error("axis " + std::to_string(axis) + " out of range for dimension " +
                std::to_string(dim)) {}
};

struct EmptyLoss : Error {
    EmptyLoss() : Error("loss has no residuals, boundary conditions, functional or constraints") {}
};

struct RootFindFailure : Error {
    explicit RootFindFailure(const std::string& what) : Error(what) {}
};

struct UnknownProblem : Error {
    explicit UnknownProblem(const std::string& name)
        : Error("unknown problem '" + name + "'") {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(what) {}
};

}  // namespace varnet
