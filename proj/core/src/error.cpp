#include "gformula/error.hpp"

namespace gformula {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain error";
    case ErrorKind::data: return "data error";
    case ErrorKind::schema: return "schema error";
    case ErrorKind::empty_likelihood: return "empty likelihood";
    case ErrorKind::singular_design: return "singular design";
    case ErrorKind::convergence: return "convergence failure";
    case ErrorKind::unsolvable_policy: return "unsolvable policy";
    case ErrorKind::singular_information: return "singular information";
    case ErrorKind::state: return "state error";
    case ErrorKind::config: return "config error";
  }
  return "error";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain:
    case ErrorKind::data:
    case ErrorKind::schema:
    case ErrorKind::empty_likelihood:
    case ErrorKind::singular_design:
      return 2;
    case ErrorKind::convergence:
    case ErrorKind::unsolvable_policy:
    case ErrorKind::singular_information:
      return 3;
    case ErrorKind::config:
      return 4;
    case ErrorKind::state:
      return 1;
  }
  return 1;
}

}  // namespace gformula
