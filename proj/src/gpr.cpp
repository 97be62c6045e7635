#include "magmap/gpr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace magmap {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

Eigen::MatrixXd pairwise_sq_dists(const MatX3& x) {
  const VecX sq = x.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * x * x.transpose();
  d2.colwise() += sq;
  d2.rowwise() += sq.transpose();
  // clean up negative round-off
  d2 = d2.cwiseMax(0.0);
  d2.diagonal().setZero();
  return d2;
}

struct Factorization {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

// LLT with jitter escalation: 1e-10*sigma_f^2, x10 per retry, capped at
// 1e-4*sigma_f^2. Eigen's LLT lets NaN pivots through, so the factor
// diagonal is checked explicitly.
Factorization cholesky_with_jitter(const Eigen::MatrixXd& k, double sigma_f2) {
  const auto factor_ok = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
    if (llt.info() != Eigen::Success) return false;
    const VecX diag = llt.matrixLLT().diagonal();
    return diag.allFinite() && (diag.array() > 0.0).all();
  };
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (factor_ok(llt)) {
    return {llt.matrixL(), 0.0};
  }
  for (double jitter = 1e-10 * sigma_f2; jitter <= 1e-4 * sigma_f2 * (1.0 + 1e-12);
       jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    llt.compute(kj);
    if (factor_ok(llt)) {
      return {llt.matrixL(), jitter};
    }
  }
  throw NotPositiveDefiniteError(
      "covariance not positive definite after jitter escalation");
}

Eigen::MatrixXd noise_free_kernel(const Hyperparameters& hp,
                                  const Eigen::MatrixXd& d2) {
  const double inv2l2 = 1.0 / (2.0 * hp.length_scale * hp.length_scale);
  return hp.sigma_f * hp.sigma_f * (-inv2l2 * d2).array().exp().matrix();
}

Eigen::MatrixXd training_covariance(const Hyperparameters& hp,
                                    const Eigen::MatrixXd& d2,
                                    bool noise_on_all_entries) {
  Eigen::MatrixXd k = noise_free_kernel(hp, d2);
  const double sn2 = hp.sigma_n * hp.sigma_n;
  if (noise_on_all_entries) {
    k.array() += sn2;
  } else {
    k.diagonal().array() += sn2;
  }
  return k;
}

struct NlmlEval {
  double value = std::numeric_limits<double>::infinity();
  Vec3 grad_log{Vec3::Zero()};
};

NlmlEval nlml_eval(const Hyperparameters& hp, const Eigen::MatrixXd& d2,
                   const VecX& y, bool with_gradient,
                   bool noise_on_all_entries) {
  const Eigen::Index n = y.size();
  const Eigen::MatrixXd knf = noise_free_kernel(hp, d2);
  Eigen::MatrixXd ky = knf;
  const double sn2 = hp.sigma_n * hp.sigma_n;
  if (noise_on_all_entries) {
    ky.array() += sn2;
  } else {
    ky.diagonal().array() += sn2;
  }
  const auto fac = cholesky_with_jitter(ky, hp.sigma_f * hp.sigma_f);
  const auto lower = fac.lower.triangularView<Eigen::Lower>();
  VecX alpha = lower.solve(y);
  const double quad = alpha.squaredNorm();  // y^T Ky^-1 y
  fac.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(
      alpha);  // alpha = Ky^-1 y
  const double logdet = 2.0 * fac.lower.diagonal().array().log().sum();
  NlmlEval out;
  out.value = 0.5 * quad + 0.5 * logdet + 0.5 * static_cast<double>(n) * kLog2Pi;
  if (!with_gradient) return out;

  // Lower triangle of Ky^-1 via L^-1, then elementwise trace sums with
  // W = Ky^-1 - alpha alpha^T; all companion matrices are symmetric.
  Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(n, n);
  lower.solveInPlace(linv);
  Eigen::MatrixXd kinv_lower = Eigen::MatrixXd::Zero(n, n);
  kinv_lower.selfadjointView<Eigen::Lower>().rankUpdate(linv.transpose());

  double sum_wk = 0.0, sum_wkd2 = 0.0, trace_w = 0.0, sum_w = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double w = kinv_lower(i, j) - alpha(i) * alpha(j);
      const double factor = (i == j) ? 1.0 : 2.0;
      sum_wk += factor * w * knf(i, j);
      sum_wkd2 += factor * w * knf(i, j) * d2(i, j);
      sum_w += factor * w;
      if (i == j) trace_w += w;
    }
  }
  const double l2 = hp.length_scale * hp.length_scale;
  out.grad_log(0) = sum_wk;                 // d/d log sigma_f
  out.grad_log(1) = 0.5 * sum_wkd2 / l2;    // d/d log l
  out.grad_log(2) = sn2 * (noise_on_all_entries ? sum_w : trace_w);
  return out;
}

Hyperparameters from_log(const Vec3& u) {
  return Hyperparameters{std::exp(u(0)), std::exp(u(1)), std::exp(u(2))};
}

}  // namespace

double kernel(const Hyperparameters& hp, const Vec3& r, const Vec3& r2) {
  const double d2 = (r - r2).squaredNorm();
  return hp.sigma_f * hp.sigma_f *
         std::exp(-d2 / (2.0 * hp.length_scale * hp.length_scale));
}

NlmlResult nlml(const Hyperparameters& hp, const MatX3& locations,
                const VecX& centered_targets, bool noise_on_all_entries) {
  require(hp.valid(), "hyperparameters must be strictly positive");
  require(locations.rows() == centered_targets.size(),
          "locations/targets row mismatch");
  require(locations.rows() >= 1, "nlml needs at least one observation");
  const auto d2 = pairwise_sq_dists(locations);
  const auto eval =
      nlml_eval(hp, d2, centered_targets, true, noise_on_all_entries);
  return NlmlResult{eval.value, eval.grad_log};
}

Hyperparameters optimize_hyperparameters(const MatX3& locations,
                                         const VecX& targets,
                                         const OptimizeConfig& config) {
  require(locations.rows() == targets.size(), "locations/targets row mismatch");
  require(locations.rows() >= 2, "hyperparameter fit needs n >= 2");
  const Eigen::Index n = targets.size();
  const VecX centered = targets.array() - targets.mean();
  double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(n - 1));
  sd = std::max(sd, 1e-6);

  const Eigen::MatrixXd d2 = pairwise_sq_dists(locations);

  const auto clamp_log = [&](Vec3 u) {
    for (int i = 0; i < 3; ++i) {
      u(i) = std::clamp(u(i), config.log_lower, config.log_upper);
    }
    return u;
  };
  const auto value_at = [&](const Vec3& u) -> double {
    try {
      return nlml_eval(from_log(u), d2, centered, false,
                       config.noise_on_all_entries)
          .value;
    } catch (const NotPositiveDefiniteError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const auto grad_at = [&](const Vec3& u) {
    return nlml_eval(from_log(u), d2, centered, true,
                     config.noise_on_all_entries);
  };

  const std::array<Vec3, 4> seeds = {
      Vec3(std::log(sd), std::log(0.3), std::log(0.1 * sd)),
      Vec3(std::log(sd), std::log(1.0), std::log(0.1 * sd)),
      Vec3(std::log(2.0 * sd), std::log(0.3), std::log(0.1 * sd)),
      Vec3(std::log(2.0 * sd), std::log(1.0), std::log(0.1 * sd)),
  };

  double best_value = std::numeric_limits<double>::infinity();
  Vec3 best_u = seeds[0];
  bool any_start_ok = false;

  for (const auto& seed : seeds) {
    Vec3 u = clamp_log(seed);
    double f = value_at(u);
    if (!std::isfinite(f)) continue;
    any_start_ok = true;
    if (f < best_value) {
      best_value = f;
      best_u = u;
    }
    Vec3 g = grad_at(u).grad_log;
    Eigen::Matrix3d h_inv = Eigen::Matrix3d::Identity();

    for (int iter = 0; iter < config.max_iterations; ++iter) {
      if (g.lpNorm<Eigen::Infinity>() <
          config.gradient_tol * std::max(1.0, std::abs(f))) {
        break;
      }
      Vec3 direction = -(h_inv * g);
      if (direction.dot(g) >= 0.0) {  // not a descent direction, reset
        h_inv.setIdentity();
        direction = -g;
      }
      // Backtracking Armijo line search on the clamped step.
      double step = 1.0;
      Vec3 u_next = u;
      double f_next = f;
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt) {
        const Vec3 candidate = clamp_log(u + step * direction);
        const Vec3 displacement = candidate - u;
        if (displacement.norm() < config.step_tol) break;
        const double fc = value_at(candidate);
        if (fc <= f + 1e-4 * g.dot(displacement)) {
          u_next = candidate;
          f_next = fc;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;

      const Vec3 g_next = grad_at(u_next).grad_log;
      const Vec3 s = u_next - u;
      const Vec3 yv = g_next - g;
      const double sy = s.dot(yv);
      if (sy > 1e-12 * s.norm() * yv.norm()) {
        const double rho = 1.0 / sy;
        const Eigen::Matrix3d eye = Eigen::Matrix3d::Identity();
        h_inv = (eye - rho * s * yv.transpose()) * h_inv *
                    (eye - rho * yv * s.transpose()) +
                rho * s * s.transpose();
      } else {
        h_inv.setIdentity();
      }
      u = u_next;
      f = f_next;
      g = g_next;
      if (f < best_value) {
        best_value = f;
        best_u = u;
      }
      if (s.norm() < config.step_tol) break;
    }
  }

  if (!any_start_ok) {
    throw OptimizationError("all hyperparameter starts failed to evaluate");
  }
  return from_log(best_u);
}

GpComponent::GpComponent(Hyperparameters hp, MatX3 locations, VecX targets)
    : hp_(hp), locations_(std::move(locations)), targets_(std::move(targets)) {
  require(targets_.size() > 0, "component needs at least one observation");
  mean_offset_ = targets_.mean();
  build();
}

GpComponent::GpComponent(Hyperparameters hp, MatX3 locations, VecX targets,
                         double mean_offset)
    : hp_(hp),
      locations_(std::move(locations)),
      targets_(std::move(targets)),
      mean_offset_(mean_offset) {
  require(targets_.size() > 0, "component needs at least one observation");
  build();
}

void GpComponent::build() {
  require(hp_.valid(), "hyperparameters must be strictly positive");
  require(locations_.rows() == targets_.size(), "locations/targets mismatch");
  const auto d2 = pairwise_sq_dists(locations_);
  const Eigen::MatrixXd ky = training_covariance(hp_, d2, false);
  auto fac = cholesky_with_jitter(ky, hp_.sigma_f * hp_.sigma_f);
  chol_lower_ = std::move(fac.lower);
  jitter_ = fac.jitter;
  const VecX centered = targets_.array() - mean_offset_;
  const auto lower = chol_lower_.triangularView<Eigen::Lower>();
  const auto upper = chol_lower_.transpose().triangularView<Eigen::Upper>();
  alpha_ = lower.solve(centered);
  upper.solveInPlace(alpha_);
  // One step of iterative refinement keeps (K + sn^2 I) alpha = centered
  // tight even when the covariance is badly conditioned.
  VecX residual = centered - ky * alpha_;
  if (jitter_ > 0.0) residual -= jitter_ * alpha_;
  VecX correction = lower.solve(residual);
  upper.solveInPlace(correction);
  alpha_ += correction;
}

void GpComponent::predict(const MatX3& query, VecX& mean, VecX& sd) const {
  const Eigen::Index m = query.rows();
  const Eigen::Index n = locations_.rows();
  mean.resize(m);
  sd.resize(m);
  if (m == 0) return;
  // Cross-covariance K(X, X_q), noise-free.
  const double inv2l2 = 1.0 / (2.0 * hp_.length_scale * hp_.length_scale);
  const double sf2 = hp_.sigma_f * hp_.sigma_f;
  Eigen::MatrixXd cross(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    cross.col(j) =
        sf2 * (-inv2l2 * (locations_.rowwise() - query.row(j))
                             .rowwise()
                             .squaredNorm()
                             .array())
                  .exp()
                  .matrix();
  }
  mean = cross.transpose() * alpha_;
  mean.array() += mean_offset_;
  Eigen::MatrixXd v = chol_lower_.triangularView<Eigen::Lower>().solve(cross);
  sd = (sf2 - v.colwise().squaredNorm().transpose().array())
           .max(0.0)
           .sqrt()
           .matrix();
}

}  // namespace magmap
