#pragma once

#include <optional>
#include <string>
#include <vector>

#include "magmap/flight_log.hpp"
#include "magmap/geometry.hpp"
#include "magmap/gpr.hpp"

namespace magmap {

enum class MapKind { kSingleFlight, kIntermediate, kCompromise };

std::string to_string(MapKind kind);
MapKind map_kind_from_string(const std::string& s);

// Lattice of pseudo-observation locations: min : S : max per axis (max
// kept only when it lands on the lattice), plus a takeoff column of
// evenly spaced points above the origin from the ground (z = 0) down to
// the top face of the workspace.
struct GridSpec {
  Vec3 spacing{0.5, 0.5, 0.25};  // m
  Box bounds = default_workspace();
  int takeoff_count = 7;

  static GridSpec uniform(double s, const Box& bounds = default_workspace(),
                          int takeoff_count = 7) {
    return GridSpec{Vec3(s, s, s), bounds, takeoff_count};
  }
};

MatX3 generate_grid(const GridSpec& spec);

struct MapProvenance {
  std::vector<std::string> source_flights;
  std::optional<GridSpec> grid;  // set for compromise maps
  Box workspace = default_workspace();
};

// Three scalar GPs over shared locations estimating the field vector.
struct VectorFieldMap {
  std::vector<GpComponent> components;  // x, y, z
  MapKind kind = MapKind::kIntermediate;
  MapProvenance provenance;

  Eigen::Index inference_size() const {
    return components.front().train_locations().rows();
  }
};

// Single scalar GP trained on measurement norms.
struct NormFieldMap {
  std::vector<GpComponent> component;  // exactly one; vector for deferred init
  MapKind kind = MapKind::kIntermediate;
  MapProvenance provenance;
};

struct VectorPrediction {
  MatX3 means;
  MatX3 sds;
};

// Per-axis hyperparameter optimization over the merged observations, then
// inference state on all of them. Kind is single-flight when the
// observations come from one flight, intermediate otherwise.
VectorFieldMap build_intermediate(const ObservationSet& obs,
                                  const std::vector<std::string>& source_flights,
                                  const OptimizeConfig& config = {},
                                  bool parallel = true);

// Queries the source map at the grid locations and uses the posterior
// means as pseudo-observations. Hyperparameters and mean offsets are
// copied unchanged; only the inference set is rebuilt. The GridSpec
// overload generates the lattice and records it in the provenance.
VectorFieldMap build_compromise(const VectorFieldMap& intermediate,
                                const MatX3& grid);
VectorFieldMap build_compromise(const VectorFieldMap& intermediate,
                                const GridSpec& grid_spec);

NormFieldMap build_norm_map(const ObservationSet& obs,
                            const std::vector<std::string>& source_flights,
                            const OptimizeConfig& config = {});
NormFieldMap build_norm_compromise(const NormFieldMap& intermediate,
                                   const GridSpec& grid_spec);

VectorPrediction predict_vector(const VectorFieldMap& map, const MatX3& query);

// JSON round trip for both map flavors (vector and norm output).
void save_map_json(const VectorFieldMap& map, const std::string& path,
                   const std::vector<std::string>& provenance_lines = {});
void save_map_json(const NormFieldMap& map, const std::string& path,
                   const std::vector<std::string>& provenance_lines = {});
VectorFieldMap load_vector_map_json(const std::string& path);
NormFieldMap load_norm_map_json(const std::string& path);
bool map_file_is_norm(const std::string& path);

}  // namespace magmap
