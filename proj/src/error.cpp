#include "silfdtd/error.hpp"

namespace silfdtd {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Stability: return "stability";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Fit: return "fit";
    case ErrorCategory::Domain: return "domain";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Stability: return 3;
    case ErrorCategory::Io: return 4;
    case ErrorCategory::Fit: return 5;
    case ErrorCategory::Domain: return 6;
  }
  return 1;
}

}  // namespace silfdtd
