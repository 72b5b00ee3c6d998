#pragma once

#include <stdexcept>
#include <string>

namespace tsense {

/// Input outside the mathematical domain of a model (non-positive frequency, bad geometry).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Geometry outside the validity range of a closed-form approximation.
class ValidityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Value outside a tabulated span (calibration curves, tables).
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Invalid user configuration: scenario files, pipeline settings, CLI grids.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// No stub length in the admissible interval realizes the requested capacitance.
class SynthesisError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed or non-uniformly sampled input streams.
class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure in curve fitting.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tsense
