#pragma once

#include <stdexcept>
#include <string>

namespace dtg {

// Bad inputs: malformed files, out-of-range config, degenerate data.
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Broken internal wiring: preconditions that hold by construction in a
// correct pipeline. The CLI maps this to exit code 2.
class InvariantError : public std::logic_error {
 public:
  explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace dtg
