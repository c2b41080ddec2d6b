#pragma once

#include <stdexcept>
#include <string>

namespace parasafe {

// All validation failures are typed so callers (and the CLI) can map them to
// precise diagnostics instead of pattern-matching message strings.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define PARASAFE_ERROR(NAME)                                        \
    struct NAME : Error {                                           \
        explicit NAME(const std::string& msg) : Error(#NAME ": " + msg) {} \
    }

PARASAFE_ERROR(StructureError);       // A is not companion-form
PARASAFE_ERROR(BoxError);             // true/estimated parameters outside the box
PARASAFE_ERROR(SignError);            // b <= 0 or theta sign violation
PARASAFE_ERROR(DimensionError);       // mismatched vector/matrix sizes
PARASAFE_ERROR(StabilityError);       // explicit-scheme ratio eps*dt/dx^2 > 1/2
PARASAFE_ERROR(NonFiniteError);       // NaN/Inf state encountered
PARASAFE_ERROR(PartialMissingError);  // barrier partial not registered
PARASAFE_ERROR(GainError);            // kappa out of admissible range
PARASAFE_ERROR(ConvergenceError);     // iteration failed to converge
PARASAFE_ERROR(ThetaZeroError);       // theta == 0 in a division
PARASAFE_ERROR(OrderError);           // requested derivative order unavailable
PARASAFE_ERROR(DenominatorError);     // non-positive denominator in the M bound
PARASAFE_ERROR(MValueError);          // M fails its admissibility conditions
PARASAFE_ERROR(WindowError);          // identifier window empty/inconsistent
PARASAFE_ERROR(InconsistencyError);   // multi-mode ratios disagree
PARASAFE_ERROR(ConfigError);          // scenario config invalid
PARASAFE_ERROR(DomainError);          // argument outside mathematical domain
PARASAFE_ERROR(SingularError);        // singular linear solve

#undef PARASAFE_ERROR

}  // namespace parasafe
