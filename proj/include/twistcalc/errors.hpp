#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace twistcalc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shapes or dimensions that do not match the declared configuration.
struct DimensionError : Error {
    using Error::Error;
};

// A base configuration lying on an electron-electron or electron-nucleus collision set.
struct NotAdmissibleError : Error {
    using Error::Error;
};

// An external configuration outside the twist domain, or a point outside a declared region.
struct DomainError : Error {
    using Error::Error;
};

// A pair potential evaluated on its singular locus.
struct SingularityError : Error {
    SingularityError(const std::string& what, std::string pair)
        : Error(what), pairing(std::move(pair)) {}
    std::string pairing;
};

// Principal symbol whose real part vanishes or changes sign; witness is (x, y, xi, eta) flattened.
struct NonEllipticError : Error {
    NonEllipticError(const std::string& what, std::vector<double> w)
        : Error(what), witness(std::move(w)) {}
    std::vector<double> witness;
};

struct ConvergenceError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct UnsupportedError : Error {
    using Error::Error;
};

struct QuadratureError : Error {
    using Error::Error;
};

}  // namespace twistcalc
