#pragma once

#include <stdexcept>
#include <string>

namespace iga {

/// A computation failed for numerical reasons (loss of definiteness,
/// non-convergence, blow-up). Precondition violations use std::invalid_argument.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid experiment configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace iga
