#include "magmap/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace magmap {

namespace {

double median_of(std::vector<double>& scratch) {
  const auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(scratch.size() / 2);
  std::nth_element(scratch.begin(), mid, scratch.end());
  return *mid;
}

// Index of the sample whose timestamp is nearest to t; ties pick the
// earlier sample.
std::size_t nearest_index(const std::vector<MagSample>& samples, double t) {
  const auto cmp = [](const MagSample& s, double value) { return s.t < value; };
  const auto it = std::lower_bound(samples.begin(), samples.end(), t, cmp);
  if (it == samples.begin()) return 0;
  if (it == samples.end()) return samples.size() - 1;
  const auto hi = static_cast<std::size_t>(it - samples.begin());
  const auto lo = hi - 1;
  return (t - samples[lo].t <= samples[hi].t - t) ? lo : hi;
}

}  // namespace

std::vector<MagSample> median_filter(const std::vector<MagSample>& samples,
                                     int window) {
  require(window >= 1 && window % 2 == 1, "median window must be odd and positive");
  require(static_cast<std::size_t>(window) <= samples.size(),
          "median window larger than series");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(samples.size());
  const std::ptrdiff_t half_max = window / 2;
  std::vector<MagSample> out = samples;
  std::vector<double> scratch;
  scratch.reserve(static_cast<std::size_t>(window));
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t half = std::min({half_max, i, n - 1 - i});
    for (int axis = 0; axis < 3; ++axis) {
      scratch.clear();
      for (std::ptrdiff_t j = i - half; j <= i + half; ++j) {
        scratch.push_back(samples[static_cast<std::size_t>(j)].field_body(axis));
      }
      out[static_cast<std::size_t>(i)].field_body(axis) = median_of(scratch);
    }
  }
  return out;
}

std::vector<MagSample> downsample(const std::vector<MagSample>& samples,
                                  double target_rate) {
  require(target_rate > 0.0, "target rate must be positive");
  require(!samples.empty(), "cannot downsample an empty log");
  if (samples.size() == 1) return samples;
  const double span = samples.back().t - samples.front().t;
  const double native_rate = static_cast<double>(samples.size() - 1) / span;
  require(target_rate <= native_rate * (1.0 + 1e-9),
          "target rate exceeds native rate");
  const double t0 = samples.front().t;
  const auto slots = static_cast<std::size_t>(span * target_rate + 1e-9);
  std::vector<MagSample> out;
  out.reserve(slots + 1);
  std::size_t last_pick = samples.size();  // sentinel
  for (std::size_t k = 0; k <= slots; ++k) {
    const double target = t0 + static_cast<double>(k) / target_rate;
    const std::size_t pick = nearest_index(samples, target);
    if (pick != last_pick) {
      out.push_back(samples[pick]);
      last_pick = pick;
    }
  }
  return out;
}

std::vector<MagSample> downsample(const FlightLog& log, double target_rate) {
  return downsample(log.mags, target_rate);
}

std::vector<MagSample> replace_stale(const std::vector<MagSample>& selected,
                                     const std::vector<MagSample>& pool,
                                     double max_age) {
  require(max_age >= 0.0, "max_age must be non-negative");
  std::vector<MagSample> fresh;
  fresh.reserve(pool.size());
  for (const auto& s : pool) {
    if (s.pose_age <= max_age) fresh.push_back(s);
  }
  if (fresh.empty() && !selected.empty()) {
    bool any_stale = false;
    for (const auto& s : selected) any_stale |= s.pose_age > max_age;
    if (any_stale) {
      throw std::runtime_error("no sample with a fresh pose exists in the log");
    }
  }
  // Keyed by timestamp so a replacement that duplicates an existing pick
  // collapses to a single instance.
  std::set<double> chosen_times;
  std::vector<MagSample> out;
  out.reserve(selected.size());
  for (const auto& s : selected) {
    const MagSample& keep =
        (s.pose_age <= max_age) ? s : fresh[nearest_index(fresh, s.t)];
    if (chosen_times.insert(keep.t).second) out.push_back(keep);
  }
  std::sort(out.begin(), out.end(),
            [](const MagSample& a, const MagSample& b) { return a.t < b.t; });
  return out;
}

std::vector<MagSample> replace_stale(const std::vector<MagSample>& selected,
                                     double max_age) {
  return replace_stale(selected, selected, max_age);
}

ObservationSet to_world(const FlightLog& log, const CalibrationParams& calib) {
  require(!log.mags.empty(), "flight log has no mag samples");
  require(log.poses.size() >= 1, "flight log has no poses");
  ObservationSet obs;
  const auto n = static_cast<Eigen::Index>(log.mags.size());
  obs.locations.resize(n, 3);
  obs.measurements.resize(n, 3);
  obs.timestamps.resize(n);
  std::size_t hi = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& m = log.mags[static_cast<std::size_t>(i)];
    if (m.t < log.poses.front().t - 1e-12 || m.t > log.poses.back().t + 1e-12) {
      throw std::runtime_error("mag timestamp outside pose time range");
    }
    while (hi + 1 < log.poses.size() && log.poses[hi].t < m.t) ++hi;
    const auto lo = (hi > 0 && log.poses[hi].t > m.t) ? hi - 1 : hi;
    const auto& pa = log.poses[lo];
    const auto& pb = log.poses[hi];
    const double dt = pb.t - pa.t;
    const double w = dt > 0.0 ? std::clamp((m.t - pa.t) / dt, 0.0, 1.0) : 0.0;
    const Vec3 position = (1.0 - w) * pa.position + w * pb.position;
    const Quat& attitude = (w <= 0.5) ? pa.attitude : pb.attitude;
    const Vec3 body = inverse_model(calib, m.field_body);
    obs.locations.row(i) = position;
    obs.measurements.row(i) = attitude * body;
    obs.timestamps(i) = m.t;
  }
  return obs;
}

ObservationSet preprocess(const FlightLog& log, const CalibrationParams& calib,
                          const PreprocessConfig& config) {
  const auto filtered = median_filter(log.mags, config.median_window);
  const auto picked = downsample(filtered, config.target_rate);
  const auto timely = replace_stale(picked, filtered, config.max_pose_age);
  FlightLog staged;
  staged.id = log.id;
  staged.poses = log.poses;
  staged.mags = timely;
  return to_world(staged, calib);
}

}  // namespace magmap
