#pragma once

#include <stdexcept>
#include <string>

namespace bdre {

/// Invalid parameters, malformed configuration or I/O trouble. The CLI maps
/// these to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Quadrature budget exhausted, step-halving exhausted, or an estimator that
/// cannot produce a finite answer. The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A quantity that exists mathematically but has no usable closed form here
/// (the weakly supercritical decay constant).
class NotComputable : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ConfigError(message);
}

}  // namespace detail
}  // namespace bdre
