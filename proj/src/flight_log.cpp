#include "magmap/flight_log.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "magmap/provenance.hpp"

namespace magmap {

namespace {

constexpr const char* kFlightHeader =
    "t_s,px,py,pz,qw,qx,qy,qz,bx_uT,by_uT,bz_uT";
constexpr const char* kObsHeader = "x,y,z,bx_uT,by_uT,bz_uT,t_s";

void append_double(std::string& out, double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

std::vector<double> parse_row(const std::string& line, std::size_t expected,
                              const std::string& path, std::size_t line_no) {
  std::vector<double> values;
  values.reserve(expected);
  const char* p = line.data();
  const char* end = line.data() + line.size();
  while (p < end) {
    double v = 0.0;
    const auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad numeric field " +
                               std::to_string(values.size() + 1));
    }
    values.push_back(v);
    p = next;
    if (p < end) {
      if (*p != ',') {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": expected ',' after field " +
                                 std::to_string(values.size()));
      }
      ++p;
    }
  }
  if (values.size() != expected) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(expected) + " fields, got " +
                             std::to_string(values.size()));
  }
  return values;
}

// Yields data lines, skipping '#' comments; checks the header.
std::vector<std::string> read_csv_lines(const std::string& path,
                                        const char* header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<std::string> lines;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != header) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": expected header '" + header + "'");
      }
      header_seen = true;
      continue;
    }
    lines.push_back(line);
  }
  if (!header_seen) throw std::runtime_error(path + ": missing header");
  return lines;
}

}  // namespace

void refresh_pose_ages(FlightLog& log) {
  std::size_t pi = 0;
  for (auto& m : log.mags) {
    while (pi + 1 < log.poses.size() && log.poses[pi + 1].t <= m.t) ++pi;
    if (log.poses.empty() || log.poses[pi].t > m.t) {
      m.pose_age = std::numeric_limits<double>::infinity();
    } else {
      m.pose_age = m.t - log.poses[pi].t;
    }
  }
}

ObservationSet merge(const std::vector<ObservationSet>& sets) {
  Eigen::Index total = 0;
  for (const auto& s : sets) total += s.size();
  ObservationSet out;
  out.locations.resize(total, 3);
  out.measurements.resize(total, 3);
  out.timestamps.resize(total);
  Eigen::Index row = 0;
  for (const auto& s : sets) {
    out.locations.middleRows(row, s.size()) = s.locations;
    out.measurements.middleRows(row, s.size()) = s.measurements;
    out.timestamps.segment(row, s.size()) = s.timestamps;
    row += s.size();
  }
  return out;
}

void save_flight_log_csv(const FlightLog& log, const std::string& path,
                         const std::vector<std::string>& provenance) {
  if (log.poses.size() != log.mags.size()) {
    throw std::invalid_argument(
        "flight log CSV requires one pose per mag sample");
  }
  std::string out;
  out.reserve(64 * log.mags.size() + 256);
  for (const auto& line : provenance) out += "# " + line + "\n";
  out += "# flight: " + log.id + "\n";
  out += kFlightHeader;
  out += '\n';
  for (std::size_t i = 0; i < log.mags.size(); ++i) {
    const auto& p = log.poses[i];
    const auto& m = log.mags[i];
    const double row[11] = {m.t,
                            p.position.x(), p.position.y(), p.position.z(),
                            p.attitude.w(), p.attitude.x(), p.attitude.y(),
                            p.attitude.z(),
                            m.field_body.x(), m.field_body.y(),
                            m.field_body.z()};
    for (int c = 0; c < 11; ++c) {
      if (c) out += ',';
      append_double(out, row[c]);
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

FlightLog load_flight_log_csv(const std::string& path) {
  FlightLog log;
  // Recover the id from the "# flight:" comment when present.
  {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line) && !line.empty() && line[0] == '#') {
      const std::string tag = "# flight: ";
      if (line.rfind(tag, 0) == 0) log.id = line.substr(tag.size());
    }
  }
  std::size_t line_no = 0;
  for (const auto& line : read_csv_lines(path, kFlightHeader)) {
    const auto v = parse_row(line, 11, path, ++line_no);
    PoseSample pose;
    pose.t = v[0];
    pose.position = Vec3(v[1], v[2], v[3]);
    pose.attitude = Quat(v[4], v[5], v[6], v[7]);
    if (std::abs(pose.attitude.norm() - 1.0) > 1e-9) {
      throw std::runtime_error(path + ": non-unit quaternion at t=" +
                               std::to_string(pose.t));
    }
    MagSample mag;
    mag.t = v[0];
    mag.field_body = Vec3(v[8], v[9], v[10]);
    if (!log.poses.empty() && pose.t <= log.poses.back().t) {
      throw std::runtime_error(path + ": timestamps not strictly increasing");
    }
    log.poses.push_back(pose);
    log.mags.push_back(mag);
  }
  refresh_pose_ages(log);
  return log;
}

void save_observations_csv(const ObservationSet& obs, const std::string& path,
                           const std::vector<std::string>& provenance) {
  std::string out;
  out.reserve(64 * static_cast<std::size_t>(obs.size()) + 256);
  for (const auto& line : provenance) out += "# " + line + "\n";
  out += kObsHeader;
  out += '\n';
  for (Eigen::Index i = 0; i < obs.size(); ++i) {
    const double row[7] = {obs.locations(i, 0),    obs.locations(i, 1),
                           obs.locations(i, 2),    obs.measurements(i, 0),
                           obs.measurements(i, 1), obs.measurements(i, 2),
                           obs.timestamps(i)};
    for (int c = 0; c < 7; ++c) {
      if (c) out += ',';
      append_double(out, row[c]);
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

ObservationSet load_observations_csv(const std::string& path) {
  const auto lines = read_csv_lines(path, kObsHeader);
  ObservationSet obs;
  obs.locations.resize(static_cast<Eigen::Index>(lines.size()), 3);
  obs.measurements.resize(static_cast<Eigen::Index>(lines.size()), 3);
  obs.timestamps.resize(static_cast<Eigen::Index>(lines.size()));
  std::size_t line_no = 0;
  for (Eigen::Index i = 0; i < obs.size(); ++i) {
    const auto v = parse_row(lines[static_cast<std::size_t>(i)], 7, path, ++line_no);
    for (const double x : v) {
      if (!std::isfinite(x)) {
        throw std::runtime_error(path + ": non-finite observation entry");
      }
    }
    obs.locations.row(i) = Vec3(v[0], v[1], v[2]);
    obs.measurements.row(i) = Vec3(v[3], v[4], v[5]);
    obs.timestamps(i) = v[6];
  }
  return obs;
}

}  // namespace magmap
