#pragma once

#include <cstdint>
#include <string>

#include "magmap/field_sim.hpp"

namespace magmap {

// Everything needed to generate one synthetic flight: environment,
// trajectory parameters, sensor corruption, and an optional sensor
// miscalibration to exercise the calibration path.
struct Scenario {
  std::string id = "t0_00";
  Environment environment;

  // trajectory
  std::string trajectory_type = "lawnmower";  // or "tumble"
  std::vector<double> altitudes;              // z, m
  double x_stride = 4.0;                      // m
  double y_spacing = 0.25;                    // m
  double speed_limit = 1.9;                   // m/s
  double sample_rate = 200.0;                 // Hz
  double attitude_jitter = 0.0;               // rad

  // tumble trajectories: stationary position, uniformly random attitudes
  Vec3 tumble_position{Vec3::Zero()};
  int tumble_samples = 500;

  CorruptionProfile corruption;
  CalibrationParams miscalibration = CalibrationParams::identity();
  std::uint64_t seed = 0;
};

// Parse/serialize the scenario JSON. Loading validates the profile ranges
// and rejects dipoles placed inside the workspace.
Scenario load_scenario_json(const std::string& path);
Scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const Scenario& scenario);

// Builds the trajectory and simulates the flight.
FlightLog run_scenario(const Scenario& scenario);

}  // namespace magmap
