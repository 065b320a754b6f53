#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gformula {

enum class ErrorKind {
  domain,                // argument outside the mathematical domain
  data,                  // malformed or inconsistent input data
  schema,                // required field missing for the requested analysis
  empty_likelihood,      // no unit contributes to a likelihood
  singular_design,       // rank-deficient design matrix
  convergence,           // a fit or study failed to converge
  unsolvable_policy,     // no counterfactual intercept attains the target
  singular_information,  // the bread matrix of the sandwich is singular
  state,                 // an object was used before it was ready
  config,                // invalid configuration
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Exit status used by the command-line tool: 2 data, 3 convergence, 4 config.
int exit_code(ErrorKind kind) noexcept;

}  // namespace gformula
