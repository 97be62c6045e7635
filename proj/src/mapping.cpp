#include "magmap/mapping.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "magmap/provenance.hpp"

namespace magmap {

using nlohmann::json;

namespace {

std::vector<double> axis_points(double lo, double hi, double spacing) {
  require(spacing > 0.0, "grid spacing must be positive");
  const double span = hi - lo;
  require(spacing <= span + 1e-12, "grid spacing larger than axis span");
  // Include the max endpoint only when it lands on the lattice.
  const auto k_max = static_cast<long>(std::floor(span / spacing + 1e-9));
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(k_max) + 1);
  for (long k = 0; k <= k_max; ++k) {
    pts.push_back(lo + static_cast<double>(k) * spacing);
  }
  return pts;
}

VecX component_targets(const ObservationSet& obs, int axis) {
  return obs.measurements.col(axis);
}

json hyperparams_to_json(const Hyperparameters& hp) {
  return json{{"sigma_f", hp.sigma_f},
              {"length_scale", hp.length_scale},
              {"sigma_n", hp.sigma_n}};
}

Hyperparameters hyperparams_from_json(const json& j) {
  Hyperparameters hp;
  hp.sigma_f = j.at("sigma_f").get<double>();
  hp.length_scale = j.at("length_scale").get<double>();
  hp.sigma_n = j.at("sigma_n").get<double>();
  return hp;
}

json grid_to_json(const GridSpec& g) {
  return json{{"spacing", {g.spacing.x(), g.spacing.y(), g.spacing.z()}},
              {"bounds",
               {{"min", {g.bounds.min.x(), g.bounds.min.y(), g.bounds.min.z()}},
                {"max", {g.bounds.max.x(), g.bounds.max.y(), g.bounds.max.z()}}}},
              {"takeoff_count", g.takeoff_count}};
}

GridSpec grid_from_json(const json& j) {
  GridSpec g;
  const auto& s = j.at("spacing");
  g.spacing = Vec3(s.at(0), s.at(1), s.at(2));
  const auto& b = j.at("bounds");
  g.bounds.min = Vec3(b.at("min").at(0), b.at("min").at(1), b.at("min").at(2));
  g.bounds.max = Vec3(b.at("max").at(0), b.at("max").at(1), b.at("max").at(2));
  g.takeoff_count = j.at("takeoff_count").get<int>();
  return g;
}

json box_to_json(const Box& b) {
  return json{{"min", {b.min.x(), b.min.y(), b.min.z()}},
              {"max", {b.max.x(), b.max.y(), b.max.z()}}};
}

Box box_from_json(const json& j) {
  Box b;
  b.min = Vec3(j.at("min").at(0), j.at("min").at(1), j.at("min").at(2));
  b.max = Vec3(j.at("max").at(0), j.at("max").at(1), j.at("max").at(2));
  return b;
}

json component_to_json(const GpComponent& c, const char* axis) {
  json targets = json::array();
  for (Eigen::Index i = 0; i < c.train_targets().size(); ++i) {
    targets.push_back(c.train_targets()(i));
  }
  return json{{"axis", axis},
              {"hyperparameters", hyperparams_to_json(c.hyperparams())},
              {"mean_offset", c.mean_offset()},
              {"targets", std::move(targets)}};
}

json map_core_to_json(const MatX3& locations, MapKind kind,
                      const MapProvenance& prov,
                      const std::vector<std::string>& provenance_lines) {
  json loc = json::array();
  for (Eigen::Index i = 0; i < locations.rows(); ++i) {
    loc.push_back({locations(i, 0), locations(i, 1), locations(i, 2)});
  }
  json prov_json{{"version", kToolVersion},
                 {"source_flights", prov.source_flights},
                 {"workspace", box_to_json(prov.workspace)},
                 {"meta", provenance_lines}};
  prov_json["grid"] = prov.grid ? grid_to_json(*prov.grid) : json(nullptr);
  return json{{"schema", "magmap/map-v1"},
              {"kind", to_string(kind)},
              {"locations", std::move(loc)},
              {"provenance", std::move(prov_json)}};
}

MatX3 locations_from_json(const json& j) {
  const auto& loc = j.at("locations");
  MatX3 x(static_cast<Eigen::Index>(loc.size()), 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto& row = loc.at(static_cast<std::size_t>(i));
    x.row(i) = Vec3(row.at(0), row.at(1), row.at(2));
  }
  return x;
}

MapProvenance provenance_from_json(const json& j) {
  MapProvenance p;
  const auto& pj = j.at("provenance");
  p.source_flights = pj.at("source_flights").get<std::vector<std::string>>();
  if (!pj.at("grid").is_null()) p.grid = grid_from_json(pj.at("grid"));
  p.workspace = box_from_json(pj.at("workspace"));
  return p;
}

GpComponent component_from_json(const json& j, const MatX3& locations) {
  const auto& targets_json = j.at("targets");
  VecX targets(static_cast<Eigen::Index>(targets_json.size()));
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    targets(i) = targets_json.at(static_cast<std::size_t>(i)).get<double>();
  }
  require(targets.size() == locations.rows(),
          "component targets do not match shared locations");
  return GpComponent(hyperparams_from_json(j.at("hyperparameters")), locations,
                     targets, j.at("mean_offset").get<double>());
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace

std::string to_string(MapKind kind) {
  switch (kind) {
    case MapKind::kSingleFlight: return "single-flight";
    case MapKind::kIntermediate: return "intermediate";
    case MapKind::kCompromise: return "compromise";
  }
  return "intermediate";
}

MapKind map_kind_from_string(const std::string& s) {
  if (s == "single-flight") return MapKind::kSingleFlight;
  if (s == "intermediate") return MapKind::kIntermediate;
  if (s == "compromise") return MapKind::kCompromise;
  throw std::runtime_error("unknown map kind: " + s);
}

MatX3 generate_grid(const GridSpec& spec) {
  require(spec.bounds.valid(), "grid bounds are degenerate");
  require(spec.takeoff_count >= 0, "takeoff count must be non-negative");
  const auto xs = axis_points(spec.bounds.min.x(), spec.bounds.max.x(),
                              spec.spacing.x());
  const auto ys = axis_points(spec.bounds.min.y(), spec.bounds.max.y(),
                              spec.spacing.y());
  const auto zs = axis_points(spec.bounds.min.z(), spec.bounds.max.z(),
                              spec.spacing.z());
  const auto lattice = xs.size() * ys.size() * zs.size();
  MatX3 grid(static_cast<Eigen::Index>(lattice + spec.takeoff_count), 3);
  Eigen::Index row = 0;
  // x fastest, then y, then z
  for (const double z : zs) {
    for (const double y : ys) {
      for (const double x : xs) {
        grid.row(row++) = Vec3(x, y, z);
      }
    }
  }
  // Takeoff column above the origin, evenly spaced from the ground (z = 0)
  // to the top face of the workspace.
  const double z_top = spec.bounds.max.z();
  for (int k = 0; k < spec.takeoff_count; ++k) {
    const double frac = spec.takeoff_count > 1
                            ? static_cast<double>(k) /
                                  static_cast<double>(spec.takeoff_count - 1)
                            : 0.0;
    grid.row(row++) = Vec3(0.0, 0.0, frac * z_top);
  }
  return grid;
}

VectorFieldMap build_intermediate(const ObservationSet& obs,
                                  const std::vector<std::string>& source_flights,
                                  const OptimizeConfig& config, bool parallel) {
  require(obs.size() >= 10, "intermediate map needs at least 10 observations");
  require(obs.locations.allFinite() && obs.measurements.allFinite(),
          "observations must be finite");

  std::array<Hyperparameters, 3> hps;
  if (parallel) {
    std::array<std::exception_ptr, 3> errors{};
    std::array<std::thread, 3> workers;
    for (int axis = 0; axis < 3; ++axis) {
      workers[axis] = std::thread([&, axis] {
        try {
          hps[axis] = optimize_hyperparameters(obs.locations,
                                               component_targets(obs, axis),
                                               config);
        } catch (...) {
          errors[axis] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (int axis = 0; axis < 3; ++axis) {
      hps[axis] = optimize_hyperparameters(obs.locations,
                                           component_targets(obs, axis), config);
    }
  }

  VectorFieldMap map;
  map.kind = source_flights.size() == 1 ? MapKind::kSingleFlight
                                        : MapKind::kIntermediate;
  map.provenance.source_flights = source_flights;
  map.components.reserve(3);
  for (int axis = 0; axis < 3; ++axis) {
    map.components.emplace_back(hps[axis], obs.locations,
                                component_targets(obs, axis));
  }
  return map;
}

VectorFieldMap build_compromise(const VectorFieldMap& intermediate,
                                const MatX3& grid) {
  require(intermediate.kind != MapKind::kCompromise,
          "compromise maps must be built from an intermediate map");
  require(grid.rows() > 0, "compromise grid is empty");
  VectorFieldMap map;
  map.kind = MapKind::kCompromise;
  map.provenance = intermediate.provenance;
  map.components.reserve(3);
  for (const auto& source : intermediate.components) {
    VecX mean, sd;
    source.predict(grid, mean, sd);
    // Pseudo-observations: posterior means with hyperparameters and mean
    // offset carried over unchanged.
    map.components.emplace_back(source.hyperparams(), grid, mean,
                                source.mean_offset());
  }
  return map;
}

VectorFieldMap build_compromise(const VectorFieldMap& intermediate,
                                const GridSpec& grid_spec) {
  auto map = build_compromise(intermediate, generate_grid(grid_spec));
  map.provenance.grid = grid_spec;
  return map;
}

NormFieldMap build_norm_map(const ObservationSet& obs,
                            const std::vector<std::string>& source_flights,
                            const OptimizeConfig& config) {
  require(obs.size() >= 10, "norm map needs at least 10 observations");
  const VecX targets = obs.measurements.rowwise().norm();
  NormFieldMap map;
  map.kind = source_flights.size() == 1 ? MapKind::kSingleFlight
                                        : MapKind::kIntermediate;
  map.provenance.source_flights = source_flights;
  const auto hp = optimize_hyperparameters(obs.locations, targets, config);
  map.component.emplace_back(hp, obs.locations, targets);
  return map;
}

NormFieldMap build_norm_compromise(const NormFieldMap& intermediate,
                                   const GridSpec& grid_spec) {
  require(intermediate.kind != MapKind::kCompromise,
          "compromise maps must be built from an intermediate map");
  const MatX3 grid = generate_grid(grid_spec);
  require(grid.rows() > 0, "compromise grid is empty");
  NormFieldMap map;
  map.kind = MapKind::kCompromise;
  map.provenance = intermediate.provenance;
  map.provenance.grid = grid_spec;
  const auto& source = intermediate.component.front();
  VecX mean, sd;
  source.predict(grid, mean, sd);
  map.component.emplace_back(source.hyperparams(), grid, mean,
                             source.mean_offset());
  return map;
}

VectorPrediction predict_vector(const VectorFieldMap& map, const MatX3& query) {
  VectorPrediction out;
  out.means.resize(query.rows(), 3);
  out.sds.resize(query.rows(), 3);
  for (int axis = 0; axis < 3; ++axis) {
    VecX mean, sd;
    map.components[static_cast<std::size_t>(axis)].predict(query, mean, sd);
    out.means.col(axis) = mean;
    out.sds.col(axis) = sd;
  }
  return out;
}

void save_map_json(const VectorFieldMap& map, const std::string& path,
                   const std::vector<std::string>& provenance_lines) {
  json j = map_core_to_json(map.components.front().train_locations(), map.kind,
                            map.provenance, provenance_lines);
  j["output"] = "vector";
  const char* axes[3] = {"x", "y", "z"};
  json comps = json::array();
  for (int axis = 0; axis < 3; ++axis) {
    comps.push_back(
        component_to_json(map.components[static_cast<std::size_t>(axis)],
                          axes[axis]));
  }
  j["components"] = std::move(comps);
  atomic_write_file(path, j.dump(1) + "\n");
}

void save_map_json(const NormFieldMap& map, const std::string& path,
                   const std::vector<std::string>& provenance_lines) {
  json j = map_core_to_json(map.component.front().train_locations(), map.kind,
                            map.provenance, provenance_lines);
  j["output"] = "norm";
  json comps = json::array();
  comps.push_back(component_to_json(map.component.front(), "norm"));
  j["components"] = std::move(comps);
  atomic_write_file(path, j.dump(1) + "\n");
}

VectorFieldMap load_vector_map_json(const std::string& path) {
  const json j = load_json_file(path);
  if (j.at("output").get<std::string>() != "vector") {
    throw std::runtime_error(path + ": expected a vector map");
  }
  VectorFieldMap map;
  map.kind = map_kind_from_string(j.at("kind").get<std::string>());
  map.provenance = provenance_from_json(j);
  const MatX3 locations = locations_from_json(j);
  const auto& comps = j.at("components");
  if (comps.size() != 3) {
    throw std::runtime_error(path + ": vector map needs three components");
  }
  map.components.reserve(3);
  for (const auto& c : comps) {
    map.components.push_back(component_from_json(c, locations));
  }
  return map;
}

NormFieldMap load_norm_map_json(const std::string& path) {
  const json j = load_json_file(path);
  if (j.at("output").get<std::string>() != "norm") {
    throw std::runtime_error(path + ": expected a norm map");
  }
  NormFieldMap map;
  map.kind = map_kind_from_string(j.at("kind").get<std::string>());
  map.provenance = provenance_from_json(j);
  const MatX3 locations = locations_from_json(j);
  const auto& comps = j.at("components");
  if (comps.size() != 1) {
    throw std::runtime_error(path + ": norm map needs one component");
  }
  map.component.push_back(component_from_json(comps.at(0), locations));
  return map;
}

bool map_file_is_norm(const std::string& path) {
  return load_json_file(path).at("output").get<std::string>() == "norm";
}

}  // namespace magmap
