#include <fstream>

#include "calibration_json.hpp"
#include "magmap/provenance.hpp"

namespace magmap {

using nlohmann::json;

void save_calibration_json(const CalibrationReport& report,
                           double reference_norm, const std::string& path,
                           const std::vector<std::string>& provenance_lines) {
  const json j{
      {"schema", "magmap/calibration-v1"},
      {"params", detail::calibration_params_to_json(report.params)},
      {"fit",
       {{"reference_norm_uT", reference_norm},
        {"residual_rms_uT2", report.residual_rms},
        {"norm_error_rms_uT", report.norm_error_rms},
        {"iterations", {report.iterations_step1, report.iterations_step2}},
        {"cost", {report.cost_step1, report.cost_step2}},
        {"preprocessing", report.preprocessing}}},
      {"provenance", {{"version", kToolVersion}, {"meta", provenance_lines}}}};
  atomic_write_file(path, j.dump(1) + "\n");
}

CalibrationParams load_calibration_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calibration: " + path);
  json j;
  in >> j;
  const auto p = detail::calibration_params_from_json(j.at("params"));
  if (!p.valid()) {
    throw std::runtime_error(path + ": calibration parameters out of range");
  }
  return p;
}

}  // namespace magmap
