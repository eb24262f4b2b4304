#pragma once

#include <stdexcept>
#include <string>

namespace cbf_shield {

/// Malformed input file. `line()` is 1-based, 0 when not line-anchored.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& message)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

/// 1 - d*kappa <= 0: the Frenet map is singular at this offset.
class SingularFrenetError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Ego and obstacle centres coincide; the barrier is not differentiable.
class CoincidentCentersError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace cbf_shield
