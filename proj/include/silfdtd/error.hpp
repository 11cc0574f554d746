#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace silfdtd {

/// Broad failure classes. The CLI maps each to a distinct exit code.
enum class ErrorCategory { Config, Stability, Io, Fit, Domain };

std::string_view to_string(ErrorCategory category);
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& what) {
  throw Error(category, what);
}

}  // namespace silfdtd
