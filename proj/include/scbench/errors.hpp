#pragma once

#include <stdexcept>
#include <string>

namespace scbench {

// Bad inputs, schema mismatches, malformed configs. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Singular systems, non-finite intermediates, failed factorizations. CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace scbench
