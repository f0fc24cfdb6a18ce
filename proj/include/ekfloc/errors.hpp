#ifndef EKFLOC_ERRORS_HPP_
#define EKFLOC_ERRORS_HPP_

#include <stdexcept>

namespace ekfloc {

/// The robot lies on (or numerically on) a map line; sgn(C) is undefined
/// and the measurement Jacobian is discontinuous there.
struct DegenerateGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Innovation covariance is not invertible to working precision; the
/// correction step must be skipped.
struct SingularUpdateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A measurement carries a non-positive variance and cannot enter R.
struct InvalidMeasurementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A simulated pose left the world, or a scenario cannot proceed.
struct ScenarioAbortError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File could not be read, written, or parsed.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ekfloc

#endif  // EKFLOC_ERRORS_HPP_
