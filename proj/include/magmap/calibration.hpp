#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "magmap/geometry.hpp"

namespace magmap {

// Nine-term magnetometer error model: per-axis scale factors, biases and
// non-orthogonality angles.
struct CalibrationParams {
  double scale_x = 1.0;  // theta_a
  double scale_y = 1.0;  // theta_b
  double scale_z = 1.0;  // theta_c
  Vec3 bias{Vec3::Zero()};  // theta_x0, theta_y0, theta_z0 (uT)
  double rho = 0.0;     // rad
  double lambda = 0.0;  // rad
  double phi = 0.0;     // rad

  static CalibrationParams identity() { return CalibrationParams{}; }

  bool valid() const {
    constexpr double half_pi = 1.5707963267948966;
    return scale_x > 0.0 && scale_y > 0.0 && scale_z > 0.0 &&
           bias.allFinite() && std::abs(rho) < half_pi &&
           std::abs(lambda) < half_pi && std::abs(phi) < half_pi;
  }
};

struct CalibrationConfig {
  double reference_norm = 53.1351;  // uT
  int max_iterations = 200;
  double convergence_tol = 1e-10;  // relative cost change
};

struct CalibrationReport {
  CalibrationParams params;
  double cost_step1 = 0.0;  // sum of squared norm-squared residuals (uT^4)
  double cost_step2 = 0.0;
  int iterations_step1 = 0;
  int iterations_step2 = 0;
  double residual_rms = 0.0;    // RMS of B_R^2 - |B|^2 (uT^2)
  double norm_error_rms = 0.0;  // RMS of |B| - B_R (uT)
  std::vector<double> cost_trace;  // accepted costs, both steps concatenated
  std::string preprocessing;       // filled by callers that filter the input
};

struct SingularModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Measured field from true field, noise terms set to zero.
Vec3 forward_model(const CalibrationParams& p, const Vec3& true_field);

// Exact algebraic inverse of forward_model; the model is lower triangular
// in (Bx, By, Bz) so the components back-substitute in order. Throws
// SingularModelError when cos(phi)*cos(lambda), a scale factor or cos(rho)
// vanishes.
Vec3 inverse_model(const CalibrationParams& p, const Vec3& measured);

// d(inverse_model)/d(theta) with columns ordered
// [a, b, c, x0, y0, z0, rho, lambda, phi].
Eigen::Matrix<double, 3, 9> inverse_model_jacobian(const CalibrationParams& p,
                                                   const Vec3& measured);

// Two-step fit: biases alone first, then all nine parameters starting from
// the step-1 biases. Minimizes sum((B_R^2 - |inverse_model(m)|^2)^2) with
// damped Gauss-Newton steps.
CalibrationReport calibrate(const std::vector<Vec3>& measurements,
                            const CalibrationConfig& config);

// calib.json round trip; stores the nine parameters under named fields
// together with the fit report.
void save_calibration_json(const CalibrationReport& report,
                           double reference_norm, const std::string& path,
                           const std::vector<std::string>& provenance_lines = {});
CalibrationParams load_calibration_json(const std::string& path);

}  // namespace magmap
