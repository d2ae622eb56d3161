#pragma once

#include <stdexcept>
#include <string>

namespace cocycle_forge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed numbers or arguments (NaN entries, out-of-range parameters).
class InvalidInput : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    PreconditionError(const std::string& what, double value = 0.0)
        : Error(what), value_(value) {}
    // The offending quantity, e.g. the ratio that failed to exceed c.
    double value() const { return value_; }

private:
    double value_;
};

// Zero-exponent point: no Oseledets splitting exists.
class NoSplitting : public Error {
public:
    using Error::Error;
};

class WrongCase : public Error {
public:
    WrongCase(const std::string& what, long index = -1) : Error(what), index_(index) {}
    long index() const { return index_; }

private:
    long index_;
};

class NTooSmall : public Error {
public:
    using Error::Error;
};

class NotInOmega : public Error {
public:
    using Error::Error;
};

class InvalidBase : public Error {
public:
    using Error::Error;
};

// Pipeline cannot meet its targets under the configured caps.
class Infeasible : public Error {
public:
    using Error::Error;
};

// An internal guarantee failed. Always a bug or a numerical breakdown.
class ContractViolation : public Error {
public:
    using Error::Error;
};

}  // namespace cocycle_forge
