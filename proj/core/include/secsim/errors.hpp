#pragma once

#include <stdexcept>
#include <string>

namespace secsim {

// Invalid configuration or parameter values. CLI maps this to exit code 1.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Missing or malformed input data (files, CSV rows, off-resonance requests
// that leave nothing to compute). CLI maps this to exit code 2.
struct data_error : std::runtime_error {
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: non-convergence, ambiguous level pairing, singular
// uncertainty estimates. CLI maps this to exit code 3.
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace secsim
