#pragma once

#include <stdexcept>
#include <string>

namespace vkci {

// Bad user input / parameter validation. CLI exit code 2.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& m) : std::runtime_error(m) {}
};

// A mathematical precondition of an operation does not hold on the data.
struct precondition_error : std::runtime_error {
  explicit precondition_error(const std::string& m) : std::runtime_error(m) {}
};

// Oscillation frequency exceeds what the grid resolves (lambda * h > 0.5),
// or a mollification radius exceeds the padding. CLI exit code 3.
struct resolvability_error : std::runtime_error {
  explicit resolvability_error(const std::string& m) : std::runtime_error(m) {}
};

// An iteration failed to contract. CLI exit code 3.
struct divergence_error : std::runtime_error {
  explicit divergence_error(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace vkci
