#pragma once

#include <string>
#include <vector>

#include "magmap/geometry.hpp"

namespace magmap {

// Ground-truth pose, body -> world attitude.
struct PoseSample {
  double t = 0.0;
  Vec3 position{Vec3::Zero()};
  Quat attitude{Quat::Identity()};
};

// One magnetometer reading in the body frame. pose_age is the time since
// the most recent pose at or before t (0 when pose and sample coincide).
struct MagSample {
  double t = 0.0;
  Vec3 field_body{Vec3::Zero()};
  double pose_age = 0.0;
};

// Raw per-flight record. Both streams are strictly increasing in t.
struct FlightLog {
  std::string id;  // tY_XX naming convention
  std::vector<PoseSample> poses;
  std::vector<MagSample> mags;
};

// Paired world-frame locations and field measurements, row-aligned.
struct ObservationSet {
  MatX3 locations;     // m
  MatX3 measurements;  // uT, world frame
  VecX timestamps;     // s

  Eigen::Index size() const { return locations.rows(); }
};

// Recomputes every mag sample's pose_age from the pose stream. A sample
// earlier than the first pose gets an infinite age.
void refresh_pose_ages(FlightLog& log);

// Row-wise concatenation, keeping input order.
ObservationSet merge(const std::vector<ObservationSet>& sets);

// CSV round trip. Header: t_s,px,py,pz,qw,qx,qy,qz,bx_uT,by_uT,bz_uT with
// one row per mag sample carrying the pose captured at the same instant.
// Lines starting with '#' hold provenance and are skipped on read.
void save_flight_log_csv(const FlightLog& log, const std::string& path,
                         const std::vector<std::string>& provenance = {});
FlightLog load_flight_log_csv(const std::string& path);

// CSV round trip. Header: x,y,z,bx_uT,by_uT,bz_uT,t_s.
void save_observations_csv(const ObservationSet& obs, const std::string& path,
                           const std::vector<std::string>& provenance = {});
ObservationSet load_observations_csv(const std::string& path);

}  // namespace magmap
