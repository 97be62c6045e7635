#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "magmap/calibration.hpp"
#include "magmap/flight_log.hpp"
#include "magmap/geometry.hpp"

namespace magmap {

// Point dipole, stand-in for building steel near the arena.
struct DipoleSource {
  Vec3 position{Vec3::Zero()};  // m
  Vec3 moment{Vec3::Zero()};    // A*m^2
};

struct Environment {
  Vec3 background_field{Vec3::Zero()};  // uT
  std::vector<DipoleSource> dipoles;
  Box workspace = default_workspace();
};

struct BiasSwitch {
  double t = 0.0;   // s
  Vec3 bias{Vec3::Zero()};  // replaces flight_bias from t onward (uT)
};

// Sensor-corruption phenomenology of the reference platform: white noise,
// occasional single-axis spurious readings, and a per-flight quasi-constant
// bias that may switch mid-flight.
struct CorruptionProfile {
  double gaussian_noise_sd = 0.0;  // uT
  double spurious_rate = 0.0;      // probability per sample
  double spurious_magnitude = 0.0; // uT
  Vec3 flight_bias{Vec3::Zero()};  // uT
  std::optional<BiasSwitch> bias_switch;

  bool valid() const {
    return gaussian_noise_sd >= 0.0 && spurious_rate >= 0.0 &&
           spurious_rate <= 1.0 && spurious_magnitude >= 0.0 &&
           flight_bias.allFinite();
  }
};

struct FieldSingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Background plus point-dipole superposition, in uT.
Vec3 evaluate_field(const Environment& env, const Vec3& r);

// Boustrophedon scanning pattern: full-width x strides separated by
// y_spacing lanes across the workspace, one planar slice per altitude
// (altitudes are z coordinates, negative up), connected by z strides.
// Entry/exit diagonals join the origin to the first/last slice corner.
// Piecewise-linear path, trapezoidal speed profile capped at speed_limit,
// poses emitted at sample_rate with identity attitude.
std::vector<PoseSample> lawnmower_trajectory(
    const std::vector<double>& altitudes, double x_stride, double y_spacing,
    double speed_limit, double sample_rate,
    const Box& workspace = default_workspace(), double acceleration = 2.5);

// Replaces each identity attitude with a random small-angle rotation
// (angle uniform in [0, max_angle_rad], axis uniform on the sphere).
void perturb_attitudes(std::vector<PoseSample>& trajectory,
                       double max_angle_rad, std::uint64_t seed);

// Body-frame measurement per pose: R(q)^T * true field + bias(t), pushed
// through the miscalibration model, plus Gaussian noise; with probability
// spurious_rate exactly one axis is perturbed by +/- spurious_magnitude.
// Deterministic for a fixed seed.
FlightLog simulate_flight(const Environment& env,
                          const std::vector<PoseSample>& trajectory,
                          const CorruptionProfile& profile, std::uint64_t seed,
                          const CalibrationParams& miscalibration =
                              CalibrationParams::identity());

}  // namespace magmap
