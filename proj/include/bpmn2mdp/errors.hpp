#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bpmn2mdp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  using Error::Error;
};

// One broken model invariant. Violations are data: validate() collects them,
// ValidationError carries them when an operation refuses to proceed.
struct Violation {
  std::string element;
  std::string rule;
  bool operator==(const Violation&) const = default;
};

struct ValidationError : Error {
  std::vector<Violation> violations;

  explicit ValidationError(std::vector<Violation> v)
      : Error(format(v)), violations(std::move(v)) {}

 private:
  static std::string format(const std::vector<Violation>& v) {
    std::string s = "model validation failed";
    for (const auto& x : v) s += "\n  [" + x.element + "] " + x.rule;
    return s;
  }
};

struct AmbiguousDialect : Error {
  using Error::Error;
};

struct SpliceError : Error {
  using Error::Error;
};

struct UnlinkedSignal : Error {
  using Error::Error;
};

struct StateSpaceLimitExceeded : Error {
  std::uint64_t states_explored = 0;
  std::uint64_t transitions_explored = 0;

  StateSpaceLimitExceeded(std::uint64_t s, std::uint64_t t)
      : Error("state space limit exceeded after " + std::to_string(s) +
              " states / " + std::to_string(t) + " transitions"),
        states_explored(s),
        transitions_explored(t) {}
};

struct EmitError : Error {
  using Error::Error;
};

struct NonConvergence : Error {
  using Error::Error;
};

}  // namespace bpmn2mdp
