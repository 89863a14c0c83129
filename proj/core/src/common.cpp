#include "nodalab/common.hpp"
#include "nodalab/parallel.hpp"

#include <atomic>

#ifndef NODALAB_VERSION
#define NODALAB_VERSION "0.0.0"
#endif

namespace nodalab {

const char* version_tag() { return "nodalab " NODALAB_VERSION; }

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DomainMismatch: return "DomainMismatch";
    case ErrorKind::RegularityViolation: return "RegularityViolation";
    case ErrorKind::IntegrandFailure: return "IntegrandFailure";
    case ErrorKind::NotMinimal: return "NotMinimal";
    case ErrorKind::DegenerateConditioning: return "DegenerateConditioning";
    case ErrorKind::NonDegeneracySweepFailure: return "NonDegeneracySweepFailure";
    case ErrorKind::NewtonStall: return "NewtonStall";
    case ErrorKind::MorseFloorViolation: return "MorseFloorViolation";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::Internal: return "InternalError";
  }
  return "InternalError";
}

Error::Error(ErrorKind kind, std::string module, std::string operation, const std::string& message)
    : std::runtime_error(module + "::" + operation + ": " + message),
      kind_(kind),
      module_(std::move(module)),
      operation_(std::move(operation)) {}

bool Error::numerical() const {
  switch (kind_) {
    case ErrorKind::RegularityViolation:
    case ErrorKind::IntegrandFailure:
    case ErrorKind::NotMinimal:
    case ErrorKind::DegenerateConditioning:
    case ErrorKind::NonDegeneracySweepFailure:
    case ErrorKind::NewtonStall:
    case ErrorKind::MorseFloorViolation:
    case ErrorKind::InsufficientSamples:
      return true;
    default:
      return false;
  }
}

void fail(ErrorKind kind, const char* module, const char* operation, const std::string& message) {
  throw Error(kind, module, operation, message);
}

namespace {
std::atomic<int> g_workers{0};
}

void set_worker_count(int workers) { g_workers.store(workers < 0 ? 0 : workers); }

int worker_count() {
  const int w = g_workers.load();
  if (w > 0) return w;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace nodalab
