#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sidekit {

/// Base class of every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The vectorized Lyapunov operator is singular (or numerically so).
/// Raised at stability boundaries.
class SingularOperator : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

/// A coarse time grid does not nest inside the finest noise grid.
class GridMismatch : public Error {
public:
    using Error::Error;
};

/// A state left the representable range; `step()` is the offending step index.
class NonFinite : public Error {
public:
    NonFinite(const std::string& what, std::size_t step) : Error(what), step_(step) {}
    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class ContractionViolated : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

class StepsizeTooLarge : public Error {
public:
    using Error::Error;
};

class ValidationFailed : public Error {
public:
    using Error::Error;
};

/// An evaluator expected to be linear in the state failed a probe.
class NotLinear : public Error {
public:
    using Error::Error;
};

} // namespace sidekit
