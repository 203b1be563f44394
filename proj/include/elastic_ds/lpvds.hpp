#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "elastic_ds/core.hpp"

namespace elastic_ds {

// Mixture of linear systems sharing one attractor:
//   f(x) = sum_k gamma_k(x) (A_k x + b_k),  b_k = -A_k x*,
// with A_k^T P + P A_k <= -margin I for every k.
class LpvDsPolicy {
 public:
  LpvDsPolicy(Components components, std::vector<Mat> a, Mat p, Vec attractor, double margin);

  Vec evaluate(const Vec& x) const;
  std::vector<double> mixing_weights(const Vec& x) const;

  double lyapunov_value(const Vec& x) const;
  double lyapunov_rate(const Vec& x) const;

  // Largest eigenvalue of A_k^T P + P A_k over all k.
  double max_stability_eigenvalue() const;

  const Components& components() const { return components_; }
  const std::vector<Mat>& a() const { return a_; }
  const std::vector<Vec>& b() const { return b_; }
  const Mat& p() const { return p_; }
  const Vec& attractor() const { return attractor_; }
  double margin() const { return margin_; }
  int dim() const { return static_cast<int>(attractor_.size()); }
  std::size_t size() const { return components_.size(); }

 private:
  double log_weight(std::size_t k, const Vec& x) const;

  Components components_;
  std::vector<Mat> a_;
  std::vector<Vec> b_;
  Mat p_;
  Vec attractor_;
  double margin_;
  // Cached for evaluate: inverse Cholesky factors and log normalizers.
  std::vector<Mat> whiten_;
  std::vector<double> log_norm_;
};

double lyapunov_value(const LpvDsPolicy& policy, const Vec& x);
double lyapunov_rate(const LpvDsPolicy& policy, const Vec& x);

struct EstimateOptions {
  double margin = 1e-2;
  std::optional<Mat> p;  // Identity when unset.
  std::uint64_t seed = 0;
  // Relative weight of the pull of each A_k toward -alpha_k I (alpha_k: the
  // component's best isotropic contraction rate). Only directions the data
  // leaves unconstrained feel it.
  double regularization = 1e-2;
  int max_iterations = 2000;
  double gradient_tolerance = 1e-8;
  double function_tolerance = 1e-14;
  bool normalize = true;
};

struct EstimateResult {
  LpvDsPolicy policy;
  double mse = 0.0;                 // Mean squared velocity error, workspace units.
  double initial_objective = 0.0;   // Normalized objective at the feasible warm start.
  double final_objective = 0.0;
  int iterations = 0;
};

// Sufficient statistics of the velocity-fitting objective over a data set,
// in (optionally) normalized coordinates:
//   J = mean_t ||xdot_t - f(x_t)||^2 + sum_k lambda_k ||A_k + alpha_k I||_F^2
// parameterized as
//   P A_k = S_k - (C_k C_k^T + margin I),
// S_k skew-symmetric, C_k lower-triangular, so every parameter vector is
// stable by construction.
class LpvDsObjective {
 public:
  LpvDsObjective(const Components& components, const Points& data, const Points& velocities,
                 const Vec& attractor, const Mat& p, double margin, bool normalize,
                 double regularization = 0.0);

  int num_parameters() const { return static_cast<int>(k_) * params_per_component_; }
  int dim() const { return d_; }
  std::size_t num_components() const { return k_; }
  double scale() const { return scale_; }

  // Mean over samples of ||xdot - f(x)||^2 in normalized units.
  double value(const Eigen::VectorXd& params) const;
  double value_and_gradient(const Eigen::VectorXd& params, Eigen::VectorXd* grad) const;
  // Objective for explicit matrices (no parameterization).
  double value_of(const std::vector<Mat>& a) const;

  std::vector<Mat> to_matrices(const Eigen::VectorXd& params) const;
  // Feasible parameters closest (after eigenvalue clipping) to per-component
  // weighted least-squares estimates.
  Eigen::VectorXd warm_start() const;

 private:
  std::size_t k_;
  int d_;
  int params_per_component_;
  double margin_;
  double scale_;
  Mat p_;
  Mat p_inv_;
  double vv_ = 0.0;                  // mean ||xdot||^2
  std::vector<Mat> h_;               // k_ * k_ blocks, mean gamma_k gamma_l x x^T
  std::vector<Mat> g_;               // k_ blocks, mean gamma_k xdot x^T
  std::vector<Mat> hw_;              // k_ blocks, mean gamma_k x x^T
  std::vector<double> lambda_;       // Regularization weight per component.
  std::vector<double> alpha_;        // Isotropic contraction rate per component.
};

EstimateResult estimate_detailed(const Components& components, const Points& data, const Points& velocities,
                                 const Vec& attractor, const EstimateOptions& opts = {});
LpvDsPolicy estimate(const Components& components, const Points& data, const Points& velocities,
                     const Vec& attractor, const EstimateOptions& opts = {});

}  // namespace elastic_ds
