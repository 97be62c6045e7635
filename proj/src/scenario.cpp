#include "magmap/scenario.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "calibration_json.hpp"
#include "magmap/provenance.hpp"
#include "magmap/rng.hpp"

namespace magmap {

using nlohmann::json;

namespace {

Vec3 vec3_from_json(const json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }

json vec3_to_json(const Vec3& v) { return json{v.x(), v.y(), v.z()}; }

// Stationary sensor tumbled by hand: a continuous rotation whose angular
// velocity is redrawn once a second. Smooth enough that the window-5
// median filter sees a near-constant orientation, long enough to cover
// the attitude sphere.
std::vector<PoseSample> tumble_trajectory(const Vec3& position, int samples,
                                          double sample_rate,
                                          std::uint64_t seed) {
  require(samples > 0, "tumble needs a positive sample count");
  require(sample_rate > 0.0, "sample_rate must be positive");
  Rng rng(seed ^ 0x74756d626c65ULL);  // decorrelated from measurement noise
  const auto random_axis = [&rng] {
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    const double n = axis.norm();
    return n > 1e-12 ? Vec3(axis / n) : Vec3::UnitZ();
  };
  std::vector<PoseSample> out;
  out.reserve(static_cast<std::size_t>(samples));
  Quat attitude = Quat::Identity();
  Vec3 omega = rng.uniform(1.0, 2.5) * random_axis();
  const double dt = 1.0 / sample_rate;
  double next_redraw = 1.0;
  for (int i = 0; i < samples; ++i) {
    PoseSample pose;
    pose.t = static_cast<double>(i) * dt;
    pose.position = position;
    pose.attitude = attitude;
    out.push_back(pose);
    if (pose.t >= next_redraw) {
      omega = rng.uniform(1.0, 2.5) * random_axis();
      next_redraw += 1.0;
    }
    const double angle = omega.norm() * dt;
    attitude = attitude * Quat(Eigen::AngleAxisd(angle, omega / omega.norm()));
    attitude.normalize();
  }
  return out;
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  Scenario s;
  s.id = j.value("id", std::string("t0_00"));
  s.seed = j.value("seed", std::uint64_t{0});

  const auto& env = j.at("environment");
  s.environment.background_field = vec3_from_json(env.at("background_uT"));
  if (env.contains("workspace")) {
    s.environment.workspace.min = vec3_from_json(env.at("workspace").at("min"));
    s.environment.workspace.max = vec3_from_json(env.at("workspace").at("max"));
  }
  require(s.environment.workspace.valid(), "workspace box is degenerate");
  if (env.contains("dipoles")) {
    for (const auto& d : env.at("dipoles")) {
      DipoleSource dip;
      dip.position = vec3_from_json(d.at("position_m"));
      dip.moment = vec3_from_json(d.at("moment_Am2"));
      require(dip.position.allFinite() && dip.moment.allFinite(),
              "dipole fields must be finite");
      // Convention for bundled scenarios: sources live outside the
      // workspace so the field is smooth everywhere a flight can reach.
      if (s.environment.workspace.contains(dip.position)) {
        throw std::invalid_argument("dipole placed inside the workspace");
      }
      s.environment.dipoles.push_back(dip);
    }
  }

  const auto& traj = j.at("trajectory");
  s.trajectory_type = traj.value("type", std::string("lawnmower"));
  if (s.trajectory_type == "lawnmower") {
    s.altitudes = traj.at("altitudes_m").get<std::vector<double>>();
    s.x_stride = traj.value("x_stride_m", 4.0);
    s.y_spacing = traj.value("y_spacing_m", 0.25);
    s.speed_limit = traj.value("speed_limit_mps", 1.9);
    s.sample_rate = traj.value("sample_rate_hz", 200.0);
    s.attitude_jitter = traj.value("attitude_jitter_rad", 0.0);
  } else if (s.trajectory_type == "tumble") {
    if (traj.contains("position_m")) {
      s.tumble_position = vec3_from_json(traj.at("position_m"));
    }
    s.tumble_samples = traj.value("samples", 500);
    s.sample_rate = traj.value("sample_rate_hz", 200.0);
  } else {
    throw std::invalid_argument("unknown trajectory type: " + s.trajectory_type);
  }

  if (j.contains("corruption")) {
    const auto& c = j.at("corruption");
    s.corruption.gaussian_noise_sd = c.value("gaussian_noise_sd_uT", 0.0);
    s.corruption.spurious_rate = c.value("spurious_rate", 0.0);
    s.corruption.spurious_magnitude = c.value("spurious_magnitude_uT", 0.0);
    if (c.contains("flight_bias_uT")) {
      s.corruption.flight_bias = vec3_from_json(c.at("flight_bias_uT"));
    }
    if (c.contains("bias_switch") && !c.at("bias_switch").is_null()) {
      BiasSwitch sw;
      sw.t = c.at("bias_switch").at("t_s");
      sw.bias = vec3_from_json(c.at("bias_switch").at("bias_uT"));
      s.corruption.bias_switch = sw;
    }
    require(s.corruption.valid(), "corruption profile out of range");
  }

  if (j.contains("miscalibration") && !j.at("miscalibration").is_null()) {
    s.miscalibration = detail::calibration_params_from_json(j.at("miscalibration"));
    require(s.miscalibration.valid(), "miscalibration parameters invalid");
  }
  return s;
}

Scenario load_scenario_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return scenario_from_json_text(text);
}

std::string scenario_to_json_text(const Scenario& s) {
  json dipoles = json::array();
  for (const auto& d : s.environment.dipoles) {
    dipoles.push_back({{"position_m", vec3_to_json(d.position)},
                       {"moment_Am2", vec3_to_json(d.moment)}});
  }
  json traj;
  if (s.trajectory_type == "lawnmower") {
    traj = json{{"type", "lawnmower"},
                {"altitudes_m", s.altitudes},
                {"x_stride_m", s.x_stride},
                {"y_spacing_m", s.y_spacing},
                {"speed_limit_mps", s.speed_limit},
                {"sample_rate_hz", s.sample_rate},
                {"attitude_jitter_rad", s.attitude_jitter}};
  } else {
    traj = json{{"type", "tumble"},
                {"position_m", vec3_to_json(s.tumble_position)},
                {"samples", s.tumble_samples},
                {"sample_rate_hz", s.sample_rate}};
  }
  json corruption{
      {"gaussian_noise_sd_uT", s.corruption.gaussian_noise_sd},
      {"spurious_rate", s.corruption.spurious_rate},
      {"spurious_magnitude_uT", s.corruption.spurious_magnitude},
      {"flight_bias_uT", vec3_to_json(s.corruption.flight_bias)}};
  corruption["bias_switch"] =
      s.corruption.bias_switch
          ? json{{"t_s", s.corruption.bias_switch->t},
                 {"bias_uT", vec3_to_json(s.corruption.bias_switch->bias)}}
          : json(nullptr);
  const json j{
      {"id", s.id},
      {"seed", s.seed},
      {"environment",
       {{"background_uT", vec3_to_json(s.environment.background_field)},
        {"workspace",
         {{"min", vec3_to_json(s.environment.workspace.min)},
          {"max", vec3_to_json(s.environment.workspace.max)}}},
        {"dipoles", std::move(dipoles)}}},
      {"trajectory", std::move(traj)},
      {"corruption", std::move(corruption)},
      {"miscalibration", detail::calibration_params_to_json(s.miscalibration)}};
  return j.dump(1) + "\n";
}

FlightLog run_scenario(const Scenario& s) {
  std::vector<PoseSample> trajectory;
  if (s.trajectory_type == "lawnmower") {
    trajectory = lawnmower_trajectory(s.altitudes, s.x_stride, s.y_spacing,
                                      s.speed_limit, s.sample_rate,
                                      s.environment.workspace);
    if (s.attitude_jitter > 0.0) {
      perturb_attitudes(trajectory, s.attitude_jitter, s.seed ^ 0xa77eULL);
    }
  } else {
    trajectory = tumble_trajectory(s.tumble_position, s.tumble_samples,
                                   s.sample_rate, s.seed);
  }
  FlightLog log =
      simulate_flight(s.environment, trajectory, s.corruption, s.seed,
                      s.miscalibration);
  log.id = s.id;
  return log;
}

}  // namespace magmap
