#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace magmap {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;
using MatX3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using VecX = Eigen::VectorXd;

// Axis-aligned box, min < max per axis when valid.
struct Box {
  Vec3 min{Vec3::Zero()};
  Vec3 max{Vec3::Zero()};

  bool valid() const {
    return min.allFinite() && max.allFinite() && (min.array() < max.array()).all();
  }

  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() &&
           (p.array() <= max.array() + tol).all();
  }

  Vec3 span() const { return max - min; }
};

// Flight arena of the reference platform: 4m x 3m x 2.25m, z negative up
// (ground at z = 0, highest altitude at z = -2.25).
inline Box default_workspace() {
  return Box{Vec3(-2.0, -1.5, -2.25), Vec3(2.0, 1.5, -0.5)};
}

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace magmap
