#pragma once

#include <array>
#include <string>
#include <vector>

#include "magmap/flight_log.hpp"
#include "magmap/mapping.hpp"

namespace magmap {

struct OutlierRecord {
  Eigen::Index index;
  double abs_error;  // uT
};

// Per-component RMSE, composite norm RMSE, and 2-sigma capture over a
// validation set. Residual sign is kept; displays use absolute error.
struct ValidationReport {
  Vec3 rmse_xyz{Vec3::Zero()};
  double rmse_norm = 0.0;
  Vec3 capture_2sigma{Vec3::Zero()};
  MatX3 residuals;  // predicted mean - measurement
  MatX3 sds;
  std::array<std::vector<OutlierRecord>, 3> outliers;  // |residual| > 2 uT
  Eigen::Index n = 0;
};

struct ConsistencySegment {
  Eigen::Index begin = 0;  // [begin, end)
  Eigen::Index end = 0;
  Vec3 capture{Vec3::Zero()};
  bool consistent = false;
};

struct ConsistencyReport {
  Vec3 capture{Vec3::Zero()};
  double threshold = 0.96;
  bool consistent = false;  // whole flight
  std::vector<ConsistencySegment> segments;
  bool any_segment_inconsistent = false;
};

struct DensityStudyRow {
  double spacing = 0.0;  // S, m
  Eigen::Index n1 = 0;
  std::vector<double> rmse_norm;  // one per validation set
};

struct DensityStudyResult {
  std::vector<DensityStudyRow> rows;
  std::vector<std::string> validation_ids;
};

struct NormComparison {
  double rmse_vec_nrm = 0.0;  // | |m_vec| - y_nrm | pathway
  double rmse_nrm_nrm = 0.0;  // dedicated norm map pathway
  bool provenance_mismatch = false;
};

// Fraction of rows per component with |residual| <= 2 * sd.
Vec3 capture_fraction(const MatX3& residuals, const MatX3& sds);

ValidationReport validate(const VectorFieldMap& map, const ObservationSet& obs);

// Whole-flight verdict plus sliding-window segments so a bias shift in one
// portion of a flight is visible even when the full-flight capture squeaks
// past the threshold.
ConsistencyReport consistency_check(const VectorFieldMap& map,
                                    const ObservationSet& obs,
                                    double threshold = 0.96,
                                    Eigen::Index window = 200,
                                    Eigen::Index stride = 50);

// For each S: uniform grid + takeoff column, compromise map, validation on
// each held-out set.
DensityStudyResult density_sweep(const VectorFieldMap& intermediate,
                                 const std::vector<double>& spacings,
                                 const std::vector<ObservationSet>& validation,
                                 const std::vector<std::string>& validation_ids,
                                 int takeoff_count = 7);

NormComparison compare_norm_maps(const VectorFieldMap& vec_map,
                                 const NormFieldMap& nrm_map,
                                 const ObservationSet& obs);

// Aligned-column text table for a set of per-flight validation reports.
std::string validation_table(const std::vector<std::string>& flight_ids,
                             const std::vector<ValidationReport>& reports);

}  // namespace magmap
