// magmap: simulate, preprocess, map and evaluate indoor magnetic fields.
//
// Subcommands chain through files: simulate -> preprocess -> train ->
// compress -> validate/consistency/density-sweep/norm-compare. Every
// output embeds provenance (tool version, seed, input hashes) and no
// timestamps, so identical inputs give byte-identical outputs.
//
// Exit codes: 0 success, 1 failed verdict under --strict, 2 input error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "magmap/calibration.hpp"
#include "magmap/evaluation.hpp"
#include "magmap/field_sim.hpp"
#include "magmap/flight_log.hpp"
#include "magmap/ingest.hpp"
#include "magmap/mapping.hpp"
#include "magmap/provenance.hpp"
#include "magmap/scenario.hpp"

namespace {

using nlohmann::json;
using namespace magmap;

constexpr int kExitOk = 0;
constexpr int kExitStrictFailure = 1;
constexpr int kExitInputError = 2;

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

Vec3 parse_grid_spacing(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  if (values.size() == 1) return Vec3(values[0], values[0], values[0]);
  if (values.size() == 3) return Vec3(values[0], values[1], values[2]);
  throw std::invalid_argument("--grid expects S or Sx,Sy,Sz");
}

Box parse_bounds(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  if (v.size() != 6) {
    throw std::invalid_argument("--bounds expects xmin,ymin,zmin,xmax,ymax,zmax");
  }
  Box b{Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])};
  if (!b.valid()) throw std::invalid_argument("--bounds box is degenerate");
  return b;
}

// The config file wins over flags, flags win over defaults.
json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  in >> j;
  return j;
}

template <typename T>
void override_from(const json& cfg, const char* key, T& value) {
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

json report_provenance(std::uint64_t seed,
                       const std::vector<std::string>& inputs) {
  json in_hashes = json::object();
  for (const auto& p : inputs) {
    in_hashes[std::filesystem::path(p).filename().string()] = hash_file(p);
  }
  return json{{"version", kToolVersion}, {"seed", seed}, {"inputs", in_hashes}};
}

json validation_to_json(const ValidationReport& r) {
  json outliers = json::array();
  const char* axes[3] = {"x", "y", "z"};
  for (int axis = 0; axis < 3; ++axis) {
    for (const auto& o : r.outliers[static_cast<std::size_t>(axis)]) {
      outliers.push_back({{"axis", axes[axis]},
                          {"index", o.index},
                          {"abs_error_uT", o.abs_error}});
    }
  }
  return json{{"n", r.n},
              {"rmse_uT", {{"norm", r.rmse_norm},
                           {"x", r.rmse_xyz.x()},
                           {"y", r.rmse_xyz.y()},
                           {"z", r.rmse_xyz.z()}}},
              {"capture_2sigma", {{"x", r.capture_2sigma.x()},
                                  {"y", r.capture_2sigma.y()},
                                  {"z", r.capture_2sigma.z()}}},
              {"outliers_above_2uT", std::move(outliers)}};
}

json consistency_to_json(const ConsistencyReport& r) {
  json segments = json::array();
  for (const auto& s : r.segments) {
    segments.push_back({{"begin", s.begin},
                        {"end", s.end},
                        {"capture", {s.capture.x(), s.capture.y(), s.capture.z()}},
                        {"consistent", s.consistent}});
  }
  return json{{"threshold", r.threshold},
              {"capture", {{"x", r.capture.x()},
                           {"y", r.capture.y()},
                           {"z", r.capture.z()}}},
              {"consistent", r.consistent},
              {"any_segment_inconsistent", r.any_segment_inconsistent},
              {"segments", std::move(segments)}};
}

void write_residuals_csv(const ValidationReport& r, const std::string& path) {
  std::string out = "index,res_x_uT,res_y_uT,res_z_uT,sd_x_uT,sd_y_uT,sd_z_uT\n";
  char line[256];
  for (Eigen::Index i = 0; i < r.n; ++i) {
    std::snprintf(line, sizeof(line), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(i), r.residuals(i, 0), r.residuals(i, 1),
                  r.residuals(i, 2), r.sds(i, 0), r.sds(i, 1), r.sds(i, 2));
    out += line;
  }
  atomic_write_file(path, out);
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& scenario_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed_override,
                 const std::string& config_path) {
  auto scenario = load_scenario_json(scenario_path);
  if (!config_path.empty()) {
    const auto cfg = load_config(config_path);
    if (cfg.contains("seed")) scenario.seed = cfg.at("seed").get<std::uint64_t>();
  } else if (seed_override) {
    scenario.seed = *seed_override;
  }
  const FlightLog log = run_scenario(scenario);
  save_flight_log_csv(log, out_path,
                      provenance_lines(scenario.seed, {scenario_path}));
  std::cout << "simulated " << log.id << ": " << log.mags.size()
            << " samples -> " << out_path << "\n";
  return kExitOk;
}

// --------------------------------------------------------------- calibrate

int cmd_calibrate(const std::string& input_path, double bref,
                  const std::string& out_path, bool no_filter,
                  const std::string& config_path) {
  if (!config_path.empty()) {
    const auto cfg = load_config(config_path);
    override_from(cfg, "bref", bref);
  }
  const FlightLog log = load_flight_log_csv(input_path);
  std::vector<MagSample> mags = log.mags;
  std::string preprocessing = "none";
  if (!no_filter && mags.size() >= 5) {
    mags = median_filter(mags, 5);
    preprocessing = "median_filter(window=5)";
  }
  std::vector<Vec3> measurements;
  measurements.reserve(mags.size());
  for (const auto& m : mags) measurements.push_back(m.field_body);

  CalibrationConfig config;
  config.reference_norm = bref;
  auto report = calibrate(measurements, config);
  report.preprocessing = preprocessing;
  save_calibration_json(report, bref, out_path,
                        provenance_lines(0, {input_path}));
  std::cout << "calibrated from " << measurements.size()
            << " samples, residual RMS " << report.residual_rms
            << " uT^2, norm error RMS " << report.norm_error_rms << " uT -> "
            << out_path << "\n";
  return kExitOk;
}

// -------------------------------------------------------------- preprocess

int cmd_preprocess(const std::string& input_path, const std::string& calib_path,
                   double rate, int median_window, double max_age,
                   const std::string& out_path, const std::string& config_path) {
  if (!config_path.empty()) {
    const auto cfg = load_config(config_path);
    override_from(cfg, "rate", rate);
    override_from(cfg, "median_window", median_window);
    override_from(cfg, "max_age", max_age);
  }
  const FlightLog log = load_flight_log_csv(input_path);
  const CalibrationParams calib = calib_path.empty()
                                      ? CalibrationParams::identity()
                                      : load_calibration_json(calib_path);
  PreprocessConfig config;
  config.target_rate = rate;
  config.median_window = median_window;
  config.max_pose_age = max_age;
  const ObservationSet obs = preprocess(log, calib, config);
  std::vector<std::string> inputs = {input_path};
  if (!calib_path.empty()) inputs.push_back(calib_path);
  auto prov = provenance_lines(0, inputs);
  prov.push_back("flight: " + log.id);
  prov.push_back("rate_hz: " + std::to_string(rate));
  save_observations_csv(obs, out_path, prov);
  std::cout << "preprocessed " << log.id << ": " << obs.size()
            << " observations at " << rate << " Hz -> " << out_path << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- train

int cmd_train(const std::vector<std::string>& inputs, const std::string& out_path,
              bool norm_output, const std::string& bounds_text,
              const std::string& config_path) {
  std::string bounds = bounds_text;
  if (!config_path.empty()) {
    const auto cfg = load_config(config_path);
    override_from(cfg, "bounds", bounds);
  }
  std::vector<ObservationSet> sets;
  std::vector<std::string> ids;
  for (const auto& p : inputs) {
    sets.push_back(load_observations_csv(p));
    ids.push_back(stem_of(p));
  }
  const ObservationSet merged = merge(sets);
  const auto prov = provenance_lines(0, inputs);
  if (norm_output) {
    auto map = build_norm_map(merged, ids);
    if (!bounds.empty()) map.provenance.workspace = parse_bounds(bounds);
    save_map_json(map, out_path, prov);
    std::cout << "trained norm " << to_string(map.kind) << " map on "
              << merged.size() << " observations -> " << out_path << "\n";
  } else {
    auto map = build_intermediate(merged, ids);
    if (!bounds.empty()) map.provenance.workspace = parse_bounds(bounds);
    save_map_json(map, out_path, prov);
    std::cout << "trained " << to_string(map.kind) << " map on "
              << merged.size() << " observations -> " << out_path << "\n";
  }
  return kExitOk;
}

// ----------------------------------------------------------------- compress

int cmd_compress(const std::string& map_path, std::string grid_text,
                 int takeoff, const std::string& bounds_text,
                 const std::string& out_path, const std::string& config_path) {
  std::string bounds = bounds_text;
  if (!config_path.empty()) {
    const auto cfg = load_config(config_path);
    override_from(cfg, "grid", grid_text);
    override_from(cfg, "takeoff", takeoff);
    override_from(cfg, "bounds", bounds);
  }
  const auto prov = provenance_lines(0, {map_path});
  if (map_file_is_norm(map_path)) {
    const auto inter = load_norm_map_json(map_path);
    GridSpec spec{parse_grid_spacing(grid_text), inter.provenance.workspace,
                  takeoff};
    if (!bounds.empty()) spec.bounds = parse_bounds(bounds);
    const auto comp = build_norm_compromise(inter, spec);
    save_map_json(comp, out_path, prov);
    std::cout << "compressed norm map " << inter.component.front().train_targets().size()
              << " -> n1=" << comp.component.front().train_targets().size()
              << " -> " << out_path << "\n";
  } else {
    const auto inter = load_vector_map_json(map_path);
    GridSpec spec{parse_grid_spacing(grid_text), inter.provenance.workspace,
                  takeoff};
    if (!bounds.empty()) spec.bounds = parse_bounds(bounds);
    const auto comp = build_compromise(inter, spec);
    save_map_json(comp, out_path, prov);
    std::cout << "compressed map n2=" << inter.inference_size()
              << " -> n1=" << comp.inference_size() << " -> " << out_path
              << "\n";
  }
  return kExitOk;
}

// ----------------------------------------------------------------- validate

int cmd_validate(const std::string& map_path, const std::string& obs_path,
                 const std::string& out_path, const std::string& residuals_path,
                 bool strict, double max_norm_rmse,
                 const std::string& config_path) {
  if (!config_path.empty()) {
    const auto cfg = load_config(config_path);
    override_from(cfg, "strict", strict);
    override_from(cfg, "max_norm_rmse", max_norm_rmse);
  }
  const auto map = load_vector_map_json(map_path);
  const auto obs = load_observations_csv(obs_path);
  const auto report = validate(map, obs);
  json j{{"schema", "magmap/validation-v1"},
         {"map", std::filesystem::path(map_path).filename().string()},
         {"report", validation_to_json(report)},
         {"provenance", report_provenance(0, {map_path, obs_path})}};
  if (!out_path.empty()) atomic_write_file(out_path, j.dump(1) + "\n");
  if (!residuals_path.empty()) write_residuals_csv(report, residuals_path);
  std::cout << validation_table({stem_of(obs_path)}, {report});
  if (strict && max_norm_rmse > 0.0 && report.rmse_norm > max_norm_rmse) {
    std::cout << "norm RMSE " << report.rmse_norm << " exceeds bound "
              << max_norm_rmse << "\n";
    return kExitStrictFailure;
  }
  return kExitOk;
}

// -------------------------------------------------------------- consistency

int cmd_consistency(const std::string& map_path, const std::string& obs_path,
                    double threshold, long window, long stride,
                    const std::string& out_path, bool strict,
                    const std::string& config_path) {
  if (!config_path.empty()) {
    const auto cfg = load_config(config_path);
    override_from(cfg, "threshold", threshold);
    override_from(cfg, "window", window);
    override_from(cfg, "stride", stride);
    override_from(cfg, "strict", strict);
  }
  const auto map = load_vector_map_json(map_path);
  const auto obs = load_observations_csv(obs_path);
  const auto report = consistency_check(map, obs, threshold, window, stride);
  json j{{"schema", "magmap/consistency-v1"},
         {"report", consistency_to_json(report)},
         {"provenance", report_provenance(0, {map_path, obs_path})}};
  if (!out_path.empty()) atomic_write_file(out_path, j.dump(1) + "\n");
  const bool flagged = !report.consistent || report.any_segment_inconsistent;
  std::cout << "whole-flight capture (x,y,z) = (" << report.capture.x() << ", "
            << report.capture.y() << ", " << report.capture.z() << ") -> "
            << (report.consistent ? "consistent" : "inconsistent") << "\n";
  if (report.any_segment_inconsistent) {
    for (const auto& s : report.segments) {
      if (!s.consistent) {
        std::cout << "segment [" << s.begin << ", " << s.end
                  << ") fails the " << threshold << " threshold\n";
      }
    }
  }
  return (strict && flagged) ? kExitStrictFailure : kExitOk;
}

// ------------------------------------------------------------ density-sweep

int cmd_density_sweep(const std::string& map_path,
                      const std::vector<std::string>& obs_paths,
                      double s_min, double s_max, double s_step, int takeoff,
                      const std::string& out_path,
                      const std::string& config_path) {
  if (!config_path.empty()) {
    const auto cfg = load_config(config_path);
    override_from(cfg, "s_min", s_min);
    override_from(cfg, "s_max", s_max);
    override_from(cfg, "s_step", s_step);
    override_from(cfg, "takeoff", takeoff);
  }
  const auto map = load_vector_map_json(map_path);
  std::vector<ObservationSet> validation;
  std::vector<std::string> ids;
  for (const auto& p : obs_paths) {
    validation.push_back(load_observations_csv(p));
    ids.push_back(stem_of(p));
  }
  std::vector<double> spacings;
  for (double s = s_min; s <= s_max + 1e-9; s += s_step) {
    spacings.push_back(s);
  }
  const auto result = density_sweep(map, spacings, validation, ids, takeoff);
  json rows = json::array();
  for (const auto& row : result.rows) {
    rows.push_back({{"spacing_m", row.spacing},
                    {"n1", row.n1},
                    {"rmse_norm_uT", row.rmse_norm}});
  }
  std::vector<std::string> inputs = {map_path};
  inputs.insert(inputs.end(), obs_paths.begin(), obs_paths.end());
  json j{{"schema", "magmap/density-sweep-v1"},
         {"validation_ids", result.validation_ids},
         {"rows", std::move(rows)},
         {"provenance", report_provenance(0, inputs)}};
  if (!out_path.empty()) atomic_write_file(out_path, j.dump(1) + "\n");
  std::cout << "S(m)     n1    norm RMSE per flight (uT)\n";
  for (const auto& row : result.rows) {
    std::cout << row.spacing << "  " << row.n1 << "  ";
    for (double v : row.rmse_norm) std::cout << " " << v;
    std::cout << "\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------- norm-compare

int cmd_norm_compare(const std::string& vec_path, const std::string& norm_path,
                     const std::string& obs_path, const std::string& out_path) {
  const auto vec_map = load_vector_map_json(vec_path);
  const auto norm_map = load_norm_map_json(norm_path);
  const auto obs = load_observations_csv(obs_path);
  const auto cmp = compare_norm_maps(vec_map, norm_map, obs);
  if (cmp.provenance_mismatch) {
    std::cerr << "warning: vector and norm maps were trained on different "
                 "source flights\n";
  }
  json j{{"schema", "magmap/norm-compare-v1"},
         {"rmse_vec_nrm_uT", cmp.rmse_vec_nrm},
         {"rmse_nrm_nrm_uT", cmp.rmse_nrm_nrm},
         {"difference_uT", std::abs(cmp.rmse_vec_nrm - cmp.rmse_nrm_nrm)},
         {"provenance_mismatch", cmp.provenance_mismatch},
         {"provenance", report_provenance(0, {vec_path, norm_path, obs_path})}};
  if (!out_path.empty()) atomic_write_file(out_path, j.dump(1) + "\n");
  std::cout << "RMSE(e_vec_nrm) = " << cmp.rmse_vec_nrm
            << " uT, RMSE(e_nrm_nrm) = " << cmp.rmse_nrm_nrm << " uT, |diff| = "
            << std::abs(cmp.rmse_vec_nrm - cmp.rmse_nrm_nrm) << " uT\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"indoor magnetic field mapping toolkit"};
  app.require_subcommand(1);

  int exit_code = kExitOk;

  // simulate
  std::string sim_scenario, sim_out, sim_config;
  std::optional<std::uint64_t> sim_seed;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic flight log");
  sim->add_option("--scenario", sim_scenario, "scenario JSON")->required();
  sim->add_option("--out", sim_out, "flight log CSV")->required();
  sim->add_option("--seed", sim_seed, "override the scenario seed");
  sim->add_option("--config", sim_config, "config JSON overriding flags");
  sim->callback([&] {
    exit_code = cmd_simulate(sim_scenario, sim_out, sim_seed, sim_config);
  });

  // calibrate
  std::string cal_input, cal_out, cal_config;
  double cal_bref = 53.1351;
  bool cal_no_filter = false;
  auto* cal = app.add_subcommand("calibrate", "fit the nine-parameter sensor model");
  cal->add_option("--input", cal_input, "raw flight log CSV")->required();
  cal->add_option("--bref", cal_bref, "reference field norm (uT)");
  cal->add_option("--out", cal_out, "calibration JSON")->required();
  cal->add_flag("--no-filter", cal_no_filter, "skip the window-5 median filter");
  cal->add_option("--config", cal_config, "config JSON overriding flags");
  cal->callback([&] {
    exit_code = cmd_calibrate(cal_input, cal_bref, cal_out, cal_no_filter,
                              cal_config);
  });

  // preprocess
  std::string pre_input, pre_calib, pre_out, pre_config;
  double pre_rate = 2.0, pre_max_age = 0.05;
  int pre_window = 5;
  auto* pre = app.add_subcommand("preprocess", "flight log -> observation set");
  pre->add_option("--input", pre_input, "flight log CSV")->required();
  pre->add_option("--calib", pre_calib, "calibration JSON (identity if absent)");
  pre->add_option("--rate", pre_rate, "downsample rate, Hz (2, 4 or 10)")
      ->check(CLI::IsMember({2.0, 4.0, 10.0}));
  pre->add_option("--median-window", pre_window, "median filter window");
  pre->add_option("--max-age", pre_max_age, "stale pose age bound (s)");
  pre->add_option("--out", pre_out, "observation CSV")->required();
  pre->add_option("--config", pre_config, "config JSON overriding flags");
  pre->callback([&] {
    exit_code = cmd_preprocess(pre_input, pre_calib, pre_rate, pre_window,
                               pre_max_age, pre_out, pre_config);
  });

  // train
  std::vector<std::string> train_inputs;
  std::string train_out, train_bounds, train_config;
  bool train_norm = false;
  auto* train = app.add_subcommand("train", "fit an intermediate map");
  train->add_option("--input", train_inputs, "observation CSV (repeatable)")
      ->required();
  train->add_option("--out", train_out, "map JSON")->required();
  train->add_flag("--norm", train_norm, "train on measurement norms");
  train->add_option("--bounds", train_bounds, "workspace xmin,ymin,zmin,xmax,ymax,zmax");
  train->add_option("--config", train_config, "config JSON overriding flags");
  train->callback([&] {
    exit_code = cmd_train(train_inputs, train_out, train_norm, train_bounds,
                          train_config);
  });

  // compress
  std::string comp_map, comp_grid = "0.5,0.5,0.25", comp_bounds, comp_out,
              comp_config;
  int comp_takeoff = 7;
  auto* comp = app.add_subcommand("compress", "intermediate -> compromise map");
  comp->add_option("--map", comp_map, "intermediate map JSON")->required();
  comp->add_option("--grid", comp_grid, "spacing S or Sx,Sy,Sz (m)");
  comp->add_option("--takeoff", comp_takeoff, "takeoff column point count");
  comp->add_option("--bounds", comp_bounds, "override workspace bounds");
  comp->add_option("--out", comp_out, "compromise map JSON")->required();
  comp->add_option("--config", comp_config, "config JSON overriding flags");
  comp->callback([&] {
    exit_code = cmd_compress(comp_map, comp_grid, comp_takeoff, comp_bounds,
                             comp_out, comp_config);
  });

  // validate
  std::string val_map, val_obs, val_out, val_residuals, val_config;
  bool val_strict = false;
  double val_max_rmse = 0.0;
  auto* val = app.add_subcommand("validate", "RMSE and 2-sigma capture report");
  val->add_option("--map", val_map, "map JSON")->required();
  val->add_option("--obs", val_obs, "validation observation CSV")->required();
  val->add_option("--out", val_out, "report JSON");
  val->add_option("--residuals-csv", val_residuals, "per-point residual/sd CSV");
  val->add_flag("--strict", val_strict, "exit 1 when bounds are violated");
  val->add_option("--max-norm-rmse", val_max_rmse,
                  "norm RMSE bound checked under --strict (uT)");
  val->add_option("--config", val_config, "config JSON overriding flags");
  val->callback([&] {
    exit_code = cmd_validate(val_map, val_obs, val_out, val_residuals,
                             val_strict, val_max_rmse, val_config);
  });

  // consistency
  std::string con_map, con_obs, con_out, con_config;
  double con_threshold = 0.96;
  long con_window = 200, con_stride = 50;
  bool con_strict = false;
  auto* con = app.add_subcommand("consistency", "2-sigma capture verdict");
  con->add_option("--map", con_map, "map JSON")->required();
  con->add_option("--obs", con_obs, "validation observation CSV")->required();
  con->add_option("--threshold", con_threshold, "capture threshold");
  con->add_option("--window", con_window, "segment window (points)");
  con->add_option("--stride", con_stride, "segment stride (points)");
  con->add_option("--out", con_out, "report JSON");
  con->add_flag("--strict", con_strict, "exit 1 when flagged inconsistent");
  con->add_option("--config", con_config, "config JSON overriding flags");
  con->callback([&] {
    exit_code = cmd_consistency(con_map, con_obs, con_threshold, con_window,
                                con_stride, con_out, con_strict, con_config);
  });

  // density-sweep
  std::string ds_map, ds_out, ds_config;
  std::vector<std::string> ds_obs;
  double ds_min = 0.2, ds_max = 1.0, ds_step = 0.05;
  int ds_takeoff = 7;
  auto* ds = app.add_subcommand("density-sweep",
                                "compromise accuracy vs grid spacing");
  ds->add_option("--map", ds_map, "intermediate map JSON")->required();
  ds->add_option("--obs", ds_obs, "validation observation CSV (repeatable)")
      ->required();
  ds->add_option("--s-min", ds_min, "first spacing (m)");
  ds->add_option("--s-max", ds_max, "last spacing (m)");
  ds->add_option("--s-step", ds_step, "spacing increment (m)");
  ds->add_option("--takeoff", ds_takeoff, "takeoff column point count");
  ds->add_option("--out", ds_out, "result JSON");
  ds->add_option("--config", ds_config, "config JSON overriding flags");
  ds->callback([&] {
    exit_code = cmd_density_sweep(ds_map, ds_obs, ds_min, ds_max, ds_step,
                                  ds_takeoff, ds_out, ds_config);
  });

  // norm-compare
  std::string nc_vec, nc_norm, nc_obs, nc_out;
  auto* nc = app.add_subcommand("norm-compare",
                                "vector-composed vs dedicated norm estimates");
  nc->add_option("--vec-map", nc_vec, "vector map JSON")->required();
  nc->add_option("--norm-map", nc_norm, "norm map JSON")->required();
  nc->add_option("--obs", nc_obs, "validation observation CSV")->required();
  nc->add_option("--out", nc_out, "comparison JSON");
  nc->callback([&] { exit_code = cmd_norm_compare(nc_vec, nc_norm, nc_obs, nc_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return exit_code;
}
