#pragma once

#include <stdexcept>

#include "magmap/geometry.hpp"

namespace magmap {

// Squared-exponential kernel parameters, all strictly positive.
struct Hyperparameters {
  double sigma_f = 1.0;      // signal SD (uT)
  double length_scale = 1.0; // m
  double sigma_n = 0.1;      // noise SD (uT)

  bool valid() const {
    return sigma_f > 0.0 && length_scale > 0.0 && sigma_n > 0.0;
  }
};

struct NotPositiveDefiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OptimizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// k(r, r') = sigma_f^2 * exp(-|r - r'|^2 / (2 l^2)). Noise variance enters
// only on the training-covariance diagonal, never in cross-covariances.
double kernel(const Hyperparameters& hp, const Vec3& r, const Vec3& r2);

struct NlmlResult {
  double value = 0.0;
  Vec3 grad_log{Vec3::Zero()};  // d/d(log sigma_f, log l, log sigma_n)
};

// Negative log marginal likelihood of centered targets under the kernel,
// 0.5 y^T (K + sn^2 I)^-1 y + 0.5 log|K + sn^2 I| + (n/2) log 2pi, via
// Cholesky with jitter escalation (1e-10*sf^2, x10 up to 1e-4*sf^2).
// noise_on_all_entries reproduces the covariance with sigma_n^2 added to
// every entry rather than the diagonal alone.
NlmlResult nlml(const Hyperparameters& hp, const MatX3& locations,
                const VecX& centered_targets,
                bool noise_on_all_entries = false);

struct OptimizeConfig {
  int max_iterations = 80;        // BFGS iterations per start
  double gradient_tol = 1e-6;     // inf-norm in log space
  double step_tol = 1e-11;        // log-space step size
  double log_lower = -18.420680743952367;  // log(1e-8)
  double log_upper = 13.815510557964274;   // log(1e6)
  // Training-covariance compatibility switch: true adds sigma_n^2 to every
  // kernel entry instead of the diagonal only. Off by default.
  bool noise_on_all_entries = false;
};

// Quasi-Newton minimization of the NLML in log-parameter space from a
// fixed 4-seed grid: l in {0.3, 1.0} m crossed with sigma_f in {sd, 2*sd}
// of the centered targets, sigma_n = 0.1*sd. Returns the best start's
// result; deterministic.
Hyperparameters optimize_hyperparameters(const MatX3& locations,
                                         const VecX& targets,
                                         const OptimizeConfig& config = {});

// One scalar GP with precomputed inference state. Immutable once built.
class GpComponent {
 public:
  // Centers targets by their mean unless an explicit offset is supplied
  // (compromise maps inherit the source map's offset).
  GpComponent(Hyperparameters hp, MatX3 locations, VecX targets);
  GpComponent(Hyperparameters hp, MatX3 locations, VecX targets,
              double mean_offset);

  const Hyperparameters& hyperparams() const { return hp_; }
  const MatX3& train_locations() const { return locations_; }
  const VecX& train_targets() const { return targets_; }
  double mean_offset() const { return mean_offset_; }
  const VecX& alpha() const { return alpha_; }
  double jitter() const { return jitter_; }

  // Posterior mean and SD at query rows. Variance is the latent-function
  // variance sigma_f^2 - k*^T (K + sn^2 I)^-1 k*, floored at zero.
  void predict(const MatX3& query, VecX& mean, VecX& sd) const;

 private:
  void build();

  Hyperparameters hp_;
  MatX3 locations_;
  VecX targets_;
  double mean_offset_ = 0.0;
  Eigen::MatrixXd chol_lower_;
  VecX alpha_;
  double jitter_ = 0.0;
};

}  // namespace magmap
