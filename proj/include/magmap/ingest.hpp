#pragma once

#include <vector>

#include "magmap/calibration.hpp"
#include "magmap/flight_log.hpp"

namespace magmap {

// Per-axis running median over a centered window; near the ends the window
// shrinks symmetrically so output length equals input length. Window must
// be odd, positive, and no larger than the series.
std::vector<MagSample> median_filter(const std::vector<MagSample>& samples,
                                     int window);

// Picks the sample nearest each target instant t0 + k/target_rate,
// dropping duplicate picks. target_rate must not exceed the native rate.
std::vector<MagSample> downsample(const std::vector<MagSample>& samples,
                                  double target_rate);
std::vector<MagSample> downsample(const FlightLog& log, double target_rate);

// Replaces every selected sample whose pose_age exceeds max_age with the
// temporally nearest fresh sample from the pool; a replacement that is
// already selected is kept as a single instance. The one-argument pool
// defaults to the selection itself.
std::vector<MagSample> replace_stale(const std::vector<MagSample>& selected,
                                     const std::vector<MagSample>& pool,
                                     double max_age = 0.05);
std::vector<MagSample> replace_stale(const std::vector<MagSample>& selected,
                                     double max_age = 0.05);

// Applies the calibration inverse to each body measurement, then rotates
// into the world frame with the pose attitude. Positions are linearly
// interpolated between the bracketing poses at each mag timestamp; the
// attitude comes from the nearer bracketing pose. Mag timestamps must lie
// within the pose time range.
ObservationSet to_world(const FlightLog& log, const CalibrationParams& calib);

struct PreprocessConfig {
  int median_window = 5;
  double target_rate = 2.0;  // Hz
  double max_pose_age = 0.05;  // s
};

// Fixed pipeline: median filter -> downsample -> stale replacement ->
// calibration inverse -> world rotation. Stale replacements are drawn from
// the full median-filtered stream, not just the downsampled picks.
ObservationSet preprocess(const FlightLog& log, const CalibrationParams& calib,
                          const PreprocessConfig& config);

}  // namespace magmap
