#pragma once

#include <stdexcept>
#include <string>

namespace padiclf {

// Base for all library errors.  CLI maps subclasses to exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Precondition violations (caller passed something outside the contract).
struct PreconditionError : Error {
    using Error::Error;
};

// A computation lost all p-adic precision (result would be known mod p^0).
struct PrecisionExhausted : Error {
    using Error::Error;
};

// A division whose quotient is not p-integral at the available precision.
struct NonIntegralQuotient : Error {
    using Error::Error;
};

// X^2 - a_p X + p^{k-1} has no root of integral slope.
struct NoUnitRoot : PreconditionError {
    using PreconditionError::PreconditionError;
};

struct NotInSigma0 : PreconditionError {
    using PreconditionError::PreconditionError;
};

struct NonzeroConstantTerm : PreconditionError {
    using PreconditionError::PreconditionError;
};

struct NegativeShiftBelowFloor : PreconditionError {
    using PreconditionError::PreconditionError;
};

struct CaseHypothesisViolated : PreconditionError {
    using PreconditionError::PreconditionError;
};

struct NonIntegralAfterScaling : Error {
    using Error::Error;
};

struct NoRationalEigensystem : Error {
    using Error::Error;
};

struct LedgerStall : Error {
    using Error::Error;
};

// A structural self-check failed (relation residual, additivity, ...).
struct InvariantViolation : Error {
    using Error::Error;
};

// Internal consistency failure; indicates a bug, not bad input.
struct InternalError : Error {
    using Error::Error;
};

} // namespace padiclf
