#include "magmap/field_sim.hpp"

#include <algorithm>
#include <cmath>

#include "magmap/rng.hpp"

namespace magmap {

namespace {

// mu0/(4*pi) in uT * m^3 / (A*m^2)
constexpr double kDipoleConstant = 0.1;

// Time to traverse a straight segment of length d from rest to rest with a
// trapezoidal (or triangular, when short) speed profile.
struct SpeedProfile {
  double length = 0.0;
  double v_peak = 0.0;
  double t_ramp = 0.0;   // accelerate / decelerate time
  double t_cruise = 0.0;

  SpeedProfile(double d, double v_max, double a) : length(d) {
    if (d <= 0.0) return;
    const double d_ramps = v_max * v_max / a;  // both ramps at full speed
    if (d >= d_ramps) {
      v_peak = v_max;
      t_ramp = v_max / a;
      t_cruise = (d - d_ramps) / v_max;
    } else {
      v_peak = std::sqrt(a * d);
      t_ramp = v_peak / a;
      t_cruise = 0.0;
    }
  }

  double duration() const { return length > 0.0 ? 2.0 * t_ramp + t_cruise : 0.0; }

  // Distance travelled at local time tau in [0, duration].
  double distance_at(double tau) const {
    const double a = t_ramp > 0.0 ? v_peak / t_ramp : 0.0;
    tau = std::clamp(tau, 0.0, duration());
    if (tau < t_ramp) return 0.5 * a * tau * tau;
    const double d_ramp = 0.5 * v_peak * t_ramp;
    if (tau < t_ramp + t_cruise) return d_ramp + v_peak * (tau - t_ramp);
    const double td = tau - t_ramp - t_cruise;
    return d_ramp + v_peak * t_cruise + v_peak * td - 0.5 * a * td * td;
  }
};

struct Segment {
  Vec3 from;
  Vec3 to;
  SpeedProfile profile;
  double t_start = 0.0;

  Segment(const Vec3& a, const Vec3& b, double v_max, double accel)
      : from(a), to(b), profile((b - a).norm(), v_max, accel) {}
};

}  // namespace

Vec3 evaluate_field(const Environment& env, const Vec3& r) {
  if (!r.allFinite()) throw std::invalid_argument("query position not finite");
  Vec3 field = env.background_field;
  for (const auto& d : env.dipoles) {
    const Vec3 rel = r - d.position;
    const double dist = rel.norm();
    if (dist < 1e-9) {
      throw FieldSingularityError("query coincides with a dipole position");
    }
    const Vec3 rhat = rel / dist;
    field += kDipoleConstant *
             (3.0 * d.moment.dot(rhat) * rhat - d.moment) / (dist * dist * dist);
  }
  return field;
}

std::vector<PoseSample> lawnmower_trajectory(
    const std::vector<double>& altitudes, double x_stride, double y_spacing,
    double speed_limit, double sample_rate, const Box& workspace,
    double acceleration) {
  require(!altitudes.empty(), "altitudes must be non-empty");
  require(y_spacing > 0.0, "y_spacing must be positive");
  require(sample_rate > 0.0, "sample_rate must be positive");
  require(speed_limit > 0.0, "speed_limit must be positive");
  require(acceleration > 0.0, "acceleration must be positive");
  require(workspace.valid(), "workspace box is degenerate");
  const double half = x_stride / 2.0;
  require(half > 0.0 && -half >= workspace.min.x() - 1e-12 &&
              half <= workspace.max.x() + 1e-12,
          "x stride exceeds workspace");
  for (const double z : altitudes) {
    require(z >= workspace.min.z() - 1e-12 && z <= workspace.max.z() + 1e-12,
            "altitude outside workspace");
  }

  // Lane y coordinates across the workspace span.
  std::vector<double> lanes;
  for (double y = workspace.min.y(); y <= workspace.max.y() + 1e-9;
       y += y_spacing) {
    lanes.push_back(std::min(y, workspace.max.y()));
  }
  require(lanes.size() >= 2, "y_spacing larger than workspace span");

  // Waypoints: entry diagonal from the origin above (0,0) to the slice
  // corner, boustrophedon lanes per altitude (direction alternating per
  // slice so the path stays connected), z strides between slices, exit
  // diagonal back to the origin.
  std::vector<Vec3> wps;
  wps.emplace_back(0.0, 0.0, altitudes.front());
  bool x_positive = true;   // next stride direction along x
  bool y_forward = true;    // lane sweep direction for the current slice
  Vec3 corner(-half, lanes.front(), altitudes.front());
  wps.push_back(corner);
  for (std::size_t k = 0; k < altitudes.size(); ++k) {
    if (k > 0) {
      // z stride to the next slice at the current corner
      wps.emplace_back(wps.back().x(), wps.back().y(), altitudes[k]);
    }
    const std::size_t n_lanes = lanes.size();
    for (std::size_t li = 0; li < n_lanes; ++li) {
      const double y = y_forward ? lanes[li] : lanes[n_lanes - 1 - li];
      if (li > 0) wps.emplace_back(wps.back().x(), y, altitudes[k]);
      const double x_to = x_positive ? half : -half;
      wps.emplace_back(x_to, y, altitudes[k]);
      x_positive = !x_positive;
    }
    y_forward = !y_forward;
  }
  wps.emplace_back(0.0, 0.0, altitudes.back());

  std::vector<Segment> segments;
  double t = 0.0;
  for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
    if ((wps[i + 1] - wps[i]).norm() < 1e-12) continue;
    Segment seg(wps[i], wps[i + 1], speed_limit, acceleration);
    seg.t_start = t;
    t += seg.profile.duration();
    segments.push_back(seg);
  }
  const double total = t;

  std::vector<PoseSample> out;
  // Sample through the end of the profile so the log closes at the origin.
  const auto n_samples =
      static_cast<std::size_t>(std::ceil(total * sample_rate - 1e-9)) + 1;
  out.reserve(n_samples);
  std::size_t si = 0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double tk = static_cast<double>(k) / sample_rate;
    while (si + 1 < segments.size() &&
           tk >= segments[si].t_start + segments[si].profile.duration()) {
      ++si;
    }
    const auto& seg = segments[si];
    const double s = seg.profile.distance_at(tk - seg.t_start);
    const Vec3 dir = (seg.to - seg.from) / seg.profile.length;
    PoseSample pose;
    pose.t = tk;
    pose.position = seg.from + s * dir;
    pose.attitude = Quat::Identity();
    out.push_back(pose);
  }
  return out;
}

void perturb_attitudes(std::vector<PoseSample>& trajectory,
                       double max_angle_rad, std::uint64_t seed) {
  require(max_angle_rad >= 0.0, "max_angle_rad must be non-negative");
  Rng rng(seed);
  for (auto& pose : trajectory) {
    const double angle = rng.uniform(0.0, max_angle_rad);
    // Uniform axis via normalized Gaussian triple.
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    const double n = axis.norm();
    if (n < 1e-12) {
      axis = Vec3::UnitZ();
    } else {
      axis /= n;
    }
    pose.attitude = Quat(Eigen::AngleAxisd(angle, axis)) * pose.attitude;
    pose.attitude.normalize();
  }
}

FlightLog simulate_flight(const Environment& env,
                          const std::vector<PoseSample>& trajectory,
                          const CorruptionProfile& profile, std::uint64_t seed,
                          const CalibrationParams& miscalibration) {
  require(!trajectory.empty(), "trajectory must be non-empty");
  require(profile.valid(), "corruption profile out of range");
  Rng rng(seed);
  FlightLog log;
  log.poses = trajectory;
  log.mags.reserve(trajectory.size());
  for (const auto& pose : trajectory) {
    const Vec3 world = evaluate_field(env, pose.position);
    Vec3 bias = profile.flight_bias;
    if (profile.bias_switch && pose.t >= profile.bias_switch->t) {
      bias = profile.bias_switch->bias;
    }
    const Vec3 at_sensor = pose.attitude.conjugate() * world + bias;
    Vec3 measured = forward_model(miscalibration, at_sensor);
    measured += profile.gaussian_noise_sd *
                Vec3(rng.normal(), rng.normal(), rng.normal());
    if (profile.spurious_rate > 0.0 && rng.uniform() < profile.spurious_rate) {
      const int axis = rng.uniform_int(3);
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      measured(axis) += sign * profile.spurious_magnitude;
    }
    MagSample mag;
    mag.t = pose.t;
    mag.field_body = measured;
    mag.pose_age = 0.0;
    log.mags.push_back(mag);
  }
  return log;
}

}  // namespace magmap
