#include "magmap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace magmap {

namespace {

constexpr double kOutlierThreshold = 2.0;  // uT, display convention

Vec3 capture_fraction(const MatX3& residuals, const MatX3& sds,
                      Eigen::Index begin, Eigen::Index end) {
  Vec3 capture = Vec3::Zero();
  const auto count = static_cast<double>(end - begin);
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::Index inside = 0;
    for (Eigen::Index i = begin; i < end; ++i) {
      if (std::abs(residuals(i, axis)) <= 2.0 * sds(i, axis)) ++inside;
    }
    capture(axis) = static_cast<double>(inside) / count;
  }
  return capture;
}

}  // namespace

Vec3 capture_fraction(const MatX3& residuals, const MatX3& sds) {
  require(residuals.rows() == sds.rows() && residuals.rows() > 0,
          "residual/sd row mismatch");
  return capture_fraction(residuals, sds, 0, residuals.rows());
}

ValidationReport validate(const VectorFieldMap& map, const ObservationSet& obs) {
  require(obs.size() > 0, "validation set is empty");
  const auto pred = predict_vector(map, obs.locations);
  ValidationReport report;
  report.n = obs.size();
  report.residuals = pred.means - obs.measurements;
  report.sds = pred.sds;
  for (int axis = 0; axis < 3; ++axis) {
    report.rmse_xyz(axis) = std::sqrt(
        report.residuals.col(axis).squaredNorm() / static_cast<double>(obs.size()));
    for (Eigen::Index i = 0; i < obs.size(); ++i) {
      const double abs_err = std::abs(report.residuals(i, axis));
      if (abs_err > kOutlierThreshold) {
        report.outliers[static_cast<std::size_t>(axis)].push_back(
            OutlierRecord{i, abs_err});
      }
    }
  }
  report.rmse_norm = report.rmse_xyz.norm();
  report.capture_2sigma =
      capture_fraction(report.residuals, report.sds, 0, obs.size());
  return report;
}

ConsistencyReport consistency_check(const VectorFieldMap& map,
                                    const ObservationSet& obs, double threshold,
                                    Eigen::Index window, Eigen::Index stride) {
  require(threshold > 0.0 && threshold <= 1.0, "threshold must be in (0, 1]");
  require(window >= 1, "window must be positive");
  require(stride >= 1, "stride must be positive");
  require(window <= obs.size(), "window larger than validation set");
  const auto pred = predict_vector(map, obs.locations);
  const MatX3 residuals = pred.means - obs.measurements;

  ConsistencyReport report;
  report.threshold = threshold;
  report.capture = capture_fraction(residuals, pred.sds, 0, obs.size());
  report.consistent = (report.capture.array() >= threshold).all();
  for (Eigen::Index begin = 0; begin + window <= obs.size(); begin += stride) {
    ConsistencySegment seg;
    seg.begin = begin;
    seg.end = begin + window;
    seg.capture = capture_fraction(residuals, pred.sds, seg.begin, seg.end);
    seg.consistent = (seg.capture.array() >= threshold).all();
    report.any_segment_inconsistent |= !seg.consistent;
    report.segments.push_back(seg);
  }
  return report;
}

DensityStudyResult density_sweep(const VectorFieldMap& intermediate,
                                 const std::vector<double>& spacings,
                                 const std::vector<ObservationSet>& validation,
                                 const std::vector<std::string>& validation_ids,
                                 int takeoff_count) {
  require(!spacings.empty(), "no spacing values given");
  require(!validation.empty(), "no validation sets given");
  DensityStudyResult result;
  result.validation_ids = validation_ids;
  for (const double s : spacings) {
    const GridSpec spec = GridSpec::uniform(
        s, intermediate.provenance.workspace, takeoff_count);
    const auto compromise = build_compromise(intermediate, spec);
    DensityStudyRow row;
    row.spacing = s;
    row.n1 = compromise.inference_size();
    for (const auto& obs : validation) {
      row.rmse_norm.push_back(validate(compromise, obs).rmse_norm);
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

NormComparison compare_norm_maps(const VectorFieldMap& vec_map,
                                 const NormFieldMap& nrm_map,
                                 const ObservationSet& obs) {
  require(obs.size() > 0, "comparison set is empty");
  NormComparison out;
  out.provenance_mismatch = vec_map.provenance.source_flights !=
                            nrm_map.provenance.source_flights;
  const auto pred = predict_vector(vec_map, obs.locations);
  VecX nrm_mean, nrm_sd;
  nrm_map.component.front().predict(obs.locations, nrm_mean, nrm_sd);
  const VecX measured_norm = obs.measurements.rowwise().norm();
  const VecX e_vec = pred.means.rowwise().norm() - measured_norm;
  const VecX e_nrm = nrm_mean - measured_norm;
  const auto n = static_cast<double>(obs.size());
  out.rmse_vec_nrm = std::sqrt(e_vec.squaredNorm() / n);
  out.rmse_nrm_nrm = std::sqrt(e_nrm.squaredNorm() / n);
  return out;
}

std::string validation_table(const std::vector<std::string>& flight_ids,
                             const std::vector<ValidationReport>& reports) {
  require(flight_ids.size() == reports.size(), "ids/reports size mismatch");
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-14s %8s %8s %8s %8s  %7s %7s %7s\n",
                "flight", "norm", "x", "y", "z", "2s_x%", "2s_y%", "2s_z%");
  out << line;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::snprintf(line, sizeof(line),
                  "%-14s %8.3f %8.3f %8.3f %8.3f  %7.2f %7.2f %7.2f\n",
                  flight_ids[i].c_str(), r.rmse_norm, r.rmse_xyz.x(),
                  r.rmse_xyz.y(), r.rmse_xyz.z(), 100.0 * r.capture_2sigma.x(),
                  100.0 * r.capture_2sigma.y(), 100.0 * r.capture_2sigma.z());
    out << line;
  }
  return out.str();
}

}  // namespace magmap
