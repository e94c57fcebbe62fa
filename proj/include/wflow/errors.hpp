#pragma once

#include <stdexcept>
#include <string>

namespace wflow {

enum class ErrorKind {
  domain,
  representation,
  construction,
  feasibility,
  hypothesis,
  coverage,
  unboundable,
  integration,
  config,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace wflow
