#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace nodalab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

const char* version_tag();

enum class ErrorKind {
  Config,
  InvalidArgument,
  DomainMismatch,
  RegularityViolation,
  IntegrandFailure,
  NotMinimal,
  DegenerateConditioning,
  NonDegeneracySweepFailure,
  NewtonStall,
  MorseFloorViolation,
  InsufficientSamples,
  Internal
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries the module and operation that
// produced it so the command line layer can emit a machine-readable record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, std::string operation, const std::string& message);

  ErrorKind kind() const { return kind_; }
  const std::string& module() const { return module_; }
  const std::string& operation() const { return operation_; }
  // RegularityViolation, DegenerateConditioning and friends: the input was
  // valid but the numerics hit a degenerate configuration.
  bool numerical() const;

 private:
  ErrorKind kind_;
  std::string module_;
  std::string operation_;
};

[[noreturn]] void fail(ErrorKind kind, const char* module, const char* operation, const std::string& message);

}  // namespace nodalab
