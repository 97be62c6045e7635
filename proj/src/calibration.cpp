#include "magmap/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace magmap {

namespace {

constexpr double kSingularCos = 1e-12;

// d(Bx,By,Bz)/d(theta) for the inverted model, 3x9 in the order
// [a, b, c, x0, y0, z0, rho, lambda, phi].
struct InverseJacobian {
  Vec3 field;
  Eigen::Matrix<double, 3, 9> jac;
};

InverseJacobian inverse_with_jacobian(const CalibrationParams& p,
                                      const Vec3& m) {
  const double s_rho = std::sin(p.rho), c_rho = std::cos(p.rho);
  const double s_lam = std::sin(p.lambda), c_lam = std::cos(p.lambda);
  const double s_phi = std::sin(p.phi), c_phi = std::cos(p.phi);
  if (std::abs(c_phi * c_lam) < kSingularCos || std::abs(c_rho) < kSingularCos ||
      p.scale_x == 0.0 || p.scale_y == 0.0 || p.scale_z == 0.0) {
    throw SingularModelError("calibration model is singular");
  }

  const double bx = (m.x() - p.bias.x()) / p.scale_x;
  const double v = (m.y() - p.bias.y()) / p.scale_y;
  const double by = (v - bx * s_rho) / c_rho;
  const double w = (m.z() - p.bias.z()) / p.scale_z;
  const double denom_z = c_phi * c_lam;
  const double bz = (w - bx * s_lam - by * s_phi * c_lam) / denom_z;

  InverseJacobian out;
  out.field = Vec3(bx, by, bz);
  auto& J = out.jac;
  J.setZero();

  // Bx = (mx - x0)/a
  const double dbx_da = -bx / p.scale_x;
  const double dbx_dx0 = -1.0 / p.scale_x;
  J(0, 0) = dbx_da;
  J(0, 3) = dbx_dx0;

  // By = (v - Bx*sin rho)/cos rho, v = (my - y0)/b
  const double dby_dbx = -s_rho / c_rho;
  J(1, 0) = dby_dbx * dbx_da;
  J(1, 3) = dby_dbx * dbx_dx0;
  J(1, 1) = (-v / p.scale_y) / c_rho;
  J(1, 4) = (-1.0 / p.scale_y) / c_rho;
  J(1, 6) = -bx + by * (s_rho / c_rho);

  // Bz = (w - Bx*sin lam - By*sin phi*cos lam)/(cos phi*cos lam)
  const double dbz_dbx = -s_lam / denom_z;
  const double dbz_dby = -s_phi / c_phi;
  for (int j : {0, 1, 3, 4, 6}) {
    J(2, j) = dbz_dbx * J(0, j) + dbz_dby * J(1, j);
  }
  J(2, 2) = (-w / p.scale_z) / denom_z;
  J(2, 5) = (-1.0 / p.scale_z) / denom_z;
  J(2, 7) = (-bx * c_lam + by * s_phi * s_lam) / denom_z + bz * (s_lam / c_lam);
  J(2, 8) = -by + bz * (s_phi / c_phi);
  return out;
}

Eigen::Matrix<double, 9, 1> pack(const CalibrationParams& p) {
  Eigen::Matrix<double, 9, 1> t;
  t << p.scale_x, p.scale_y, p.scale_z, p.bias.x(), p.bias.y(), p.bias.z(),
      p.rho, p.lambda, p.phi;
  return t;
}

CalibrationParams unpack(const Eigen::Matrix<double, 9, 1>& t) {
  CalibrationParams p;
  p.scale_x = t(0);
  p.scale_y = t(1);
  p.scale_z = t(2);
  p.bias = Vec3(t(3), t(4), t(5));
  p.rho = t(6);
  p.lambda = t(7);
  p.phi = t(8);
  return p;
}

bool admissible(const CalibrationParams& p) {
  constexpr double margin = 1.5607;  // just inside pi/2
  return p.scale_x > 1e-6 && p.scale_y > 1e-6 && p.scale_z > 1e-6 &&
         std::abs(p.rho) < margin && std::abs(p.lambda) < margin &&
         std::abs(p.phi) < margin;
}

// residual_i = B_R^2 - |inverse_model(theta, m_i)|^2
double cost_and_system(const std::vector<Vec3>& ms, double bref2,
                       const CalibrationParams& p,
                       const std::vector<int>& active,
                       Eigen::MatrixXd* jtj, Eigen::VectorXd* jtr) {
  const int k = static_cast<int>(active.size());
  if (jtj) {
    jtj->setZero(k, k);
    jtr->setZero(k);
  }
  double cost = 0.0;
  for (const auto& m : ms) {
    if (!jtj) {
      const double r = bref2 - inverse_model(p, m).squaredNorm();
      cost += r * r;
      continue;
    }
    const auto iwj = inverse_with_jacobian(p, m);
    const double r = bref2 - iwj.field.squaredNorm();
    cost += r * r;
    // dr/dtheta = -2 * B . dB/dtheta
    Eigen::Matrix<double, 1, 9> grad =
        -2.0 * iwj.field.transpose() * iwj.jac;
    Eigen::VectorXd g(k);
    for (int j = 0; j < k; ++j) g(j) = grad(active[static_cast<std::size_t>(j)]);
    *jtj += g * g.transpose();
    *jtr += g * r;
  }
  return cost;
}

struct LmOutcome {
  CalibrationParams params;
  double cost = 0.0;
  int iterations = 0;
};

LmOutcome levenberg_marquardt(const std::vector<Vec3>& ms, double bref,
                              CalibrationParams start,
                              const std::vector<int>& active,
                              const CalibrationConfig& config,
                              std::vector<double>& cost_trace) {
  const double bref2 = bref * bref;
  CalibrationParams p = start;
  Eigen::MatrixXd jtj;
  Eigen::VectorXd jtr;
  double cost = cost_and_system(ms, bref2, p, active, &jtj, &jtr);
  cost_trace.push_back(cost);
  double lambda = 1e-3;
  int iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = jtj;
      for (int j = 0; j < damped.rows(); ++j) {
        damped(j, j) += lambda * std::max(jtj(j, j), 1e-12);
      }
      const Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
      auto t = pack(p);
      // Cannot move: the damped step collapsed below parameter resolution.
      if (delta.norm() <= 1e-14 * (t.norm() + 1e-14)) {
        return {p, cost, iter + 1};
      }
      for (int j = 0; j < delta.size(); ++j) {
        t(active[static_cast<std::size_t>(j)]) += delta(j);
      }
      const CalibrationParams candidate = unpack(t);
      double trial = std::numeric_limits<double>::infinity();
      if (admissible(candidate)) {
        trial = cost_and_system(ms, bref2, candidate, active, nullptr, nullptr);
      }
      if (trial < cost) {
        const double rel_change = (cost - trial) / std::max(cost, 1e-300);
        p = candidate;
        cost = trial;
        cost_trace.push_back(cost);
        lambda = std::max(lambda * 0.1, 1e-12);
        cost_and_system(ms, bref2, p, active, &jtj, &jtr);
        accepted = true;
        if (rel_change < config.convergence_tol) {
          return {p, cost, iter + 1};
        }
      } else {
        lambda *= 10.0;
        if (lambda > 1e14) {
          // No descent direction left; converged if the gradient vanished.
          if (jtr.lpNorm<Eigen::Infinity>() <
              1e-8 * std::max(1.0, std::abs(cost))) {
            return {p, cost, iter + 1};
          }
          throw ConvergenceError("calibration stalled, damping exhausted");
        }
      }
    }
  }
  throw ConvergenceError("calibration did not converge within " +
                         std::to_string(config.max_iterations) + " iterations");
}

}  // namespace

Vec3 forward_model(const CalibrationParams& p, const Vec3& f) {
  const double mx = p.scale_x * f.x() + p.bias.x();
  const double my =
      p.scale_y * (f.y() * std::cos(p.rho) + f.x() * std::sin(p.rho)) +
      p.bias.y();
  const double mz =
      p.scale_z * (f.x() * std::sin(p.lambda) +
                   f.y() * std::sin(p.phi) * std::cos(p.lambda) +
                   f.z() * std::cos(p.phi) * std::cos(p.lambda)) +
      p.bias.z();
  return Vec3(mx, my, mz);
}

Eigen::Matrix<double, 3, 9> inverse_model_jacobian(const CalibrationParams& p,
                                                   const Vec3& measured) {
  return inverse_with_jacobian(p, measured).jac;
}

Vec3 inverse_model(const CalibrationParams& p, const Vec3& m) {
  const double c_rho = std::cos(p.rho);
  const double denom_z = std::cos(p.phi) * std::cos(p.lambda);
  if (std::abs(denom_z) < kSingularCos || std::abs(c_rho) < kSingularCos ||
      p.scale_x == 0.0 || p.scale_y == 0.0 || p.scale_z == 0.0) {
    throw SingularModelError("calibration model is singular");
  }
  const double bx = (m.x() - p.bias.x()) / p.scale_x;
  const double by = ((m.y() - p.bias.y()) / p.scale_y - bx * std::sin(p.rho)) / c_rho;
  const double bz = ((m.z() - p.bias.z()) / p.scale_z - bx * std::sin(p.lambda) -
                     by * std::sin(p.phi) * std::cos(p.lambda)) /
                    denom_z;
  return Vec3(bx, by, bz);
}

CalibrationReport calibrate(const std::vector<Vec3>& measurements,
                            const CalibrationConfig& config) {
  if (config.reference_norm <= 0.0) {
    throw std::invalid_argument("reference norm must be positive");
  }
  if (measurements.size() < 50) {
    throw std::invalid_argument("calibration needs at least 50 measurements");
  }

  // Orientation diversity: co-directional measurements leave the bias
  // unidentifiable along the common axis.
  Eigen::Matrix3d dirs = Eigen::Matrix3d::Zero();
  for (const auto& m : measurements) {
    const double n = m.norm();
    if (n > 1e-9) dirs += (m / n) * (m / n).transpose();
  }
  dirs /= static_cast<double>(measurements.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(dirs);
  if (es.eigenvalues()(0) < 1e-6) {
    throw DegenerateGeometryError(
        "measurement orientations are degenerate (co-directional)");
  }

  CalibrationReport report;

  // Step 1: biases only, scales pinned at 1 and angles at 0.
  CalibrationParams p0;
  const std::vector<int> bias_only = {3, 4, 5};
  const auto step1 = levenberg_marquardt(measurements, config.reference_norm,
                                         p0, bias_only, config,
                                         report.cost_trace);
  report.cost_step1 = step1.cost;
  report.iterations_step1 = step1.iterations;

  // Step 2: all nine, seeded with the step-1 biases.
  CalibrationParams p1;
  p1.bias = step1.params.bias;
  const std::vector<int> all = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  const auto step2 = levenberg_marquardt(measurements, config.reference_norm,
                                         p1, all, config, report.cost_trace);
  report.cost_step2 = step2.cost;
  report.iterations_step2 = step2.iterations;
  report.params = step2.params;

  const double n = static_cast<double>(measurements.size());
  report.residual_rms = std::sqrt(step2.cost / n);
  double norm_err2 = 0.0;
  for (const auto& m : measurements) {
    const double d = inverse_model(report.params, m).norm() - config.reference_norm;
    norm_err2 += d * d;
  }
  report.norm_error_rms = std::sqrt(norm_err2 / n);
  return report;
}

}  // namespace magmap
