#include "wflow/errors.hpp"

namespace wflow {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::representation: return "representation";
    case ErrorKind::construction: return "construction";
    case ErrorKind::feasibility: return "feasibility";
    case ErrorKind::hypothesis: return "hypothesis";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::unboundable: return "unboundable";
    case ErrorKind::integration: return "integration";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

}  // namespace wflow
