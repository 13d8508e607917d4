#pragma once

#include <stdexcept>
#include <string>

namespace freeconv {

// Argument errors: the caller handed us something structurally invalid
// (bad masses, unsorted grid, malformed ranges).
struct ArgumentError : std::invalid_argument {
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// Domain errors: a transform was evaluated outside its validity region.
struct DomainError : std::domain_error {
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// A circle measure with vanishing first moment has no S-transform at zero.
struct ZeroMeanError : DomainError {
    explicit ZeroMeanError(const std::string& what) : DomainError(what) {}
};

// Iterative solver failed to reach its residual target; carries the last
// residual so callers can report how close it got.
struct SolverError : std::runtime_error {
    SolverError(const std::string& what, double residual_, int iterations_)
        : std::runtime_error(what), residual(residual_), iterations(iterations_) {}
    double residual = 0.0;
    int iterations = 0;
};

// Functional inversion (Newton on F or psi) did not converge.
struct InversionError : std::runtime_error {
    InversionError(const std::string& what, double residual_)
        : std::runtime_error(what), residual(residual_) {}
    double residual = 0.0;
};

// Region fitting walked past its size cap without satisfying the bound.
struct FitError : std::runtime_error {
    explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

// Recovered measure lost more mass than the pipeline tolerates; a finer
// grid or epsilon schedule is needed.
struct ResolutionError : std::runtime_error {
    ResolutionError(const std::string& what, double mass_defect_)
        : std::runtime_error(what), mass_defect(mass_defect_) {}
    double mass_defect = 0.0;
};

}  // namespace freeconv
