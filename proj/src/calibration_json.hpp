#pragma once

#include <json.hpp>

#include "magmap/calibration.hpp"

namespace magmap::detail {

inline nlohmann::json calibration_params_to_json(const CalibrationParams& p) {
  return nlohmann::json{{"scale", {p.scale_x, p.scale_y, p.scale_z}},
                        {"bias_uT", {p.bias.x(), p.bias.y(), p.bias.z()}},
                        {"nonorth_rad", {p.rho, p.lambda, p.phi}}};
}

inline CalibrationParams calibration_params_from_json(const nlohmann::json& j) {
  CalibrationParams p;
  p.scale_x = j.at("scale").at(0);
  p.scale_y = j.at("scale").at(1);
  p.scale_z = j.at("scale").at(2);
  p.bias = Vec3(j.at("bias_uT").at(0), j.at("bias_uT").at(1),
                j.at("bias_uT").at(2));
  p.rho = j.at("nonorth_rad").at(0);
  p.lambda = j.at("nonorth_rad").at(1);
  p.phi = j.at("nonorth_rad").at(2);
  return p;
}

}  // namespace magmap::detail
