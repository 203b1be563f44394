#include "elastic_ds/lpvds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include "elastic_ds/errors.hpp"
#include "elastic_ds/gmm.hpp"

namespace elastic_ds {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Mat symmetric_part(const Mat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

LpvDsPolicy::LpvDsPolicy(Components components, std::vector<Mat> a, Mat p, Vec attractor, double margin)
    : components_(std::move(components)),
      a_(std::move(a)),
      p_(std::move(p)),
      attractor_(std::move(attractor)),
      margin_(margin) {
  if (components_.empty()) throw Error(ErrorCode::kInvalidArgument, "policy needs at least one component");
  if (components_.size() != a_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one linear system per component is required");
  }
  if (!attractor_.allFinite()) throw Error(ErrorCode::kInfeasibleAttractor, "attractor is not finite");
  const int d = dim();
  if (d != 2 && d != 3) throw Error(ErrorCode::kInvalidArgument, "policy dimension must be 2 or 3");
  if (!(margin_ > 0.0)) throw Error(ErrorCode::kInvalidArgument, "stability margin must be positive");
  if (p_.rows() != d || p_.cols() != d || !p_.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "Lyapunov matrix has the wrong shape");
  }
  if ((p_ - p_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "Lyapunov matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> pe(p_, Eigen::EigenvaluesOnly);
  if (!(pe.eigenvalues().minCoeff() > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "Lyapunov matrix is not positive definite");
  }

  b_.reserve(a_.size());
  whiten_.reserve(a_.size());
  log_norm_.reserve(a_.size());
  for (std::size_t k = 0; k < a_.size(); ++k) {
    const auto& g = components_[k];
    if (g.dim() != d || a_[k].rows() != d || a_[k].cols() != d) {
      throw Error(ErrorCode::kInvalidArgument, "component " + std::to_string(k) + " has the wrong dimension");
    }
    if (!a_[k].allFinite()) throw Error(ErrorCode::kInvalidArgument, "non-finite linear system");
    g.validate(1e-9);
    b_.push_back(-(a_[k] * attractor_));
    Eigen::LLT<Mat> llt(g.covariance);
    const Mat l = llt.matrixL();
    double log_det = 0.0;
    for (int i = 0; i < d; ++i) log_det += 2.0 * std::log(l(i, i));
    whiten_.push_back(l.triangularView<Eigen::Lower>().solve(Mat::Identity(d, d)));
    log_norm_.push_back(std::log(g.prior) - 0.5 * (d * kLog2Pi + log_det));
  }
  const double worst = max_stability_eigenvalue();
  if (worst > -margin_ + 1e-9) {
    throw Error(ErrorCode::kInvalidArgument,
                "linear systems violate the stability margin (max eigenvalue " + std::to_string(worst) + ")");
  }
}

double LpvDsPolicy::log_weight(std::size_t k, const Vec& x) const {
  const Vec z = whiten_[k] * (x - components_[k].mean);
  return log_norm_[k] - 0.5 * z.squaredNorm();
}

Vec LpvDsPolicy::evaluate(const Vec& x) const {
  // Two passes keep the softmax allocation-free.
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < a_.size(); ++k) peak = std::max(peak, log_weight(k, x));
  Vec acc = Vec::Zero(dim());
  double total = 0.0;
  for (std::size_t k = 0; k < a_.size(); ++k) {
    const double w = std::exp(log_weight(k, x) - peak);
    total += w;
    acc.noalias() += w * (a_[k] * x + b_[k]);
  }
  return acc / total;
}

std::vector<double> LpvDsPolicy::mixing_weights(const Vec& x) const {
  std::vector<double> w(a_.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < a_.size(); ++k) {
    w[k] = log_weight(k, x);
    peak = std::max(peak, w[k]);
  }
  double total = 0.0;
  for (auto& v : w) {
    v = std::exp(v - peak);
    total += v;
  }
  for (auto& v : w) v /= total;
  return w;
}

double LpvDsPolicy::lyapunov_value(const Vec& x) const {
  const Vec e = x - attractor_;
  return e.dot(p_ * e);
}

double LpvDsPolicy::lyapunov_rate(const Vec& x) const {
  const Vec e = x - attractor_;
  return 2.0 * e.dot(p_ * evaluate(x));
}

double LpvDsPolicy::max_stability_eigenvalue() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& a : a_) {
    const Mat q = a.transpose() * p_ + p_ * a;
    Eigen::SelfAdjointEigenSolver<Mat> eig(symmetric_part(q), Eigen::EigenvaluesOnly);
    worst = std::max(worst, eig.eigenvalues().maxCoeff());
  }
  return worst;
}

double lyapunov_value(const LpvDsPolicy& policy, const Vec& x) { return policy.lyapunov_value(x); }
double lyapunov_rate(const LpvDsPolicy& policy, const Vec& x) { return policy.lyapunov_rate(x); }

LpvDsObjective::LpvDsObjective(const Components& components, const Points& data, const Points& velocities,
                               const Vec& attractor, const Mat& p, double margin, bool normalize,
                               double regularization)
    : k_(components.size()), d_(static_cast<int>(attractor.size())), margin_(margin), p_(p) {
  if (components.empty()) throw Error(ErrorCode::kInvalidArgument, "no components");
  if (data.size() != velocities.size() || data.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "data and velocities must be nonempty and equally long");
  }
  if (!attractor.allFinite()) throw Error(ErrorCode::kInfeasibleAttractor, "attractor is not finite");
  params_per_component_ = d_ * (d_ - 1) / 2 + d_ * (d_ + 1) / 2;
  p_inv_ = p_.inverse();

  scale_ = 1.0;
  if (normalize) {
    double radius = 0.0;
    for (const auto& x : data) radius = std::max(radius, (x - attractor).norm());
    if (radius > 0.0) scale_ = radius;
  }

  const double n = static_cast<double>(data.size());
  h_.assign(k_ * k_, Mat::Zero(d_, d_));
  g_.assign(k_, Mat::Zero(d_, d_));
  hw_.assign(k_, Mat::Zero(d_, d_));
  for (std::size_t t = 0; t < data.size(); ++t) {
    if (!data[t].allFinite() || !velocities[t].allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite training sample");
    }
    const Vec x = (data[t] - attractor) / scale_;
    const Vec v = velocities[t] / scale_;
    const Mat xx = x * x.transpose();
    const auto gamma = responsibilities(components, data[t]);
    vv_ += v.squaredNorm() / n;
    for (std::size_t k = 0; k < k_; ++k) {
      g_[k] += (gamma[k] / n) * v * x.transpose();
      hw_[k] += (gamma[k] / n) * xx;
      for (std::size_t l = k; l < k_; ++l) h_[k * k_ + l] += (gamma[k] * gamma[l] / n) * xx;
    }
  }
  for (std::size_t k = 0; k < k_; ++k) {
    for (std::size_t l = 0; l < k; ++l) h_[k * k_ + l] = h_[l * k_ + k];
  }
  lambda_.assign(k_, 0.0);
  alpha_.assign(k_, 0.0);
  for (std::size_t k = 0; k < k_; ++k) {
    const double spread = hw_[k].trace();
    if (spread > 0.0) alpha_[k] = std::max(0.0, -g_[k].trace() / spread);
    lambda_[k] = regularization * spread / d_;
  }
}

std::vector<Mat> LpvDsObjective::to_matrices(const Eigen::VectorXd& params) const {
  std::vector<Mat> out;
  out.reserve(k_);
  for (std::size_t k = 0; k < k_; ++k) {
    const double* q = params.data() + static_cast<Eigen::Index>(k) * params_per_component_;
    Mat s = Mat::Zero(d_, d_);
    Mat c = Mat::Zero(d_, d_);
    for (int i = 0; i < d_; ++i) {
      for (int j = i + 1; j < d_; ++j) {
        s(i, j) = *q;
        s(j, i) = -*q;
        ++q;
      }
    }
    for (int i = 0; i < d_; ++i) {
      for (int j = 0; j <= i; ++j) c(i, j) = *q++;
    }
    const Mat m = s - c * c.transpose() - margin_ * Mat::Identity(d_, d_);
    out.push_back(p_inv_ * m);
  }
  return out;
}

double LpvDsObjective::value_of(const std::vector<Mat>& a) const {
  double j = vv_;
  for (std::size_t k = 0; k < k_; ++k) {
    j -= 2.0 * (a[k].array() * g_[k].array()).sum();
    for (std::size_t l = 0; l < k_; ++l) j += (a[k].transpose() * a[l] * h_[k * k_ + l]).trace();
    j += lambda_[k] * (a[k] + alpha_[k] * Mat::Identity(d_, d_)).squaredNorm();
  }
  return j;
}

double LpvDsObjective::value(const Eigen::VectorXd& params) const { return value_of(to_matrices(params)); }

double LpvDsObjective::value_and_gradient(const Eigen::VectorXd& params, Eigen::VectorXd* grad) const {
  const auto a = to_matrices(params);
  const double j = value_of(a);
  if (grad == nullptr) return j;
  grad->resize(num_parameters());
  for (std::size_t k = 0; k < k_; ++k) {
    Mat ga = -2.0 * g_[k];
    for (std::size_t l = 0; l < k_; ++l) ga += 2.0 * a[l] * h_[l * k_ + k];
    ga += 2.0 * lambda_[k] * (a[k] + alpha_[k] * Mat::Identity(d_, d_));
    // A = P^-1 M, so dJ/dM = P^-T dJ/dA.
    const Mat gm = p_inv_.transpose() * ga;
    const double* q = params.data() + static_cast<Eigen::Index>(k) * params_per_component_ + d_ * (d_ - 1) / 2;
    Mat c = Mat::Zero(d_, d_);
    for (int i = 0; i < d_; ++i) {
      for (int jj = 0; jj <= i; ++jj) c(i, jj) = *q++;
    }
    const Mat gc = -(gm + gm.transpose()) * c;
    double* out = grad->data() + static_cast<Eigen::Index>(k) * params_per_component_;
    for (int i = 0; i < d_; ++i) {
      for (int jj = i + 1; jj < d_; ++jj) *out++ = gm(i, jj) - gm(jj, i);
    }
    for (int i = 0; i < d_; ++i) {
      for (int jj = 0; jj <= i; ++jj) *out++ = gc(i, jj);
    }
  }
  return j;
}

Eigen::VectorXd LpvDsObjective::warm_start() const {
  Eigen::VectorXd params(num_parameters());
  for (std::size_t k = 0; k < k_; ++k) {
    // Per-component weighted least squares including the regularizer.
    const Mat& hw = hw_[k];
    const double ridge = lambda_[k] + 1e-12 * std::max(hw.trace(), 1e-300);
    const Mat lhs = hw + ridge * Mat::Identity(d_, d_);
    const Mat rhs = g_[k] - lambda_[k] * alpha_[k] * Mat::Identity(d_, d_);
    Mat a_ls = rhs * lhs.ldlt().solve(Mat::Identity(d_, d_));
    if (!a_ls.allFinite()) a_ls = -Mat::Identity(d_, d_);

    const Mat m = p_ * a_ls;
    Eigen::SelfAdjointEigenSolver<Mat> eig(symmetric_part(m));
    Vec lambda = eig.eigenvalues();
    for (int i = 0; i < d_; ++i) lambda(i) = std::min(lambda(i), -2.0 * margin_);
    const Mat sym = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    const Mat cct = -sym - margin_ * Mat::Identity(d_, d_);
    Eigen::LLT<Mat> llt(symmetric_part(cct));
    const Mat c = llt.matrixL();
    const Mat s = 0.5 * (m - m.transpose());

    double* q = params.data() + static_cast<Eigen::Index>(k) * params_per_component_;
    for (int i = 0; i < d_; ++i) {
      for (int j = i + 1; j < d_; ++j) *q++ = s(i, j);
    }
    for (int i = 0; i < d_; ++i) {
      for (int j = 0; j <= i; ++j) *q++ = c(i, j);
    }
  }
  return params;
}

namespace {

class CeresObjective final : public ceres::FirstOrderFunction {
 public:
  explicit CeresObjective(const LpvDsObjective& objective) : objective_(objective) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const Eigen::Map<const Eigen::VectorXd> x(parameters, objective_.num_parameters());
    Eigen::VectorXd g;
    *cost = objective_.value_and_gradient(x, gradient != nullptr ? &g : nullptr);
    if (!std::isfinite(*cost)) return false;
    if (gradient != nullptr) Eigen::Map<Eigen::VectorXd>(gradient, g.size()) = g;
    return true;
  }

  int NumParameters() const override { return objective_.num_parameters(); }

 private:
  const LpvDsObjective& objective_;
};

double mean_squared_error(const LpvDsPolicy& policy, const Points& data, const Points& velocities) {
  double sum = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) sum += (velocities[t] - policy.evaluate(data[t])).squaredNorm();
  return sum / static_cast<double>(data.size());
}

}  // namespace

EstimateResult estimate_detailed(const Components& components, const Points& data, const Points& velocities,
                                 const Vec& attractor, const EstimateOptions& opts) {
  if (!attractor.allFinite()) throw Error(ErrorCode::kInfeasibleAttractor, "attractor is not finite");
  if (components.empty()) throw Error(ErrorCode::kInvalidArgument, "no components");
  if (data.size() != velocities.size()) {
    throw Error(ErrorCode::kInvalidArgument, "data and velocity counts differ");
  }
  if (data.size() < 10 * components.size()) {
    throw Error(ErrorCode::kInsufficientData, std::to_string(data.size()) + " samples for " +
                                                  std::to_string(components.size()) + " components");
  }
  if (!(opts.margin > 0.0)) throw Error(ErrorCode::kInvalidArgument, "margin must be positive");
  const int d = static_cast<int>(attractor.size());
  const Mat p = opts.p.value_or(Mat::Identity(d, d));

  LpvDsObjective objective(components, data, velocities, attractor, p, opts.margin, opts.normalize,
                           opts.regularization);
  Eigen::VectorXd params = objective.warm_start();
  const double initial = objective.value(params);
  if (!std::isfinite(initial)) throw Error(ErrorCode::kOptimizationDiverged, "non-finite initial objective");

  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.max_num_iterations = opts.max_iterations;
  options.gradient_tolerance = opts.gradient_tolerance;
  options.function_tolerance = opts.function_tolerance;
  options.parameter_tolerance = 1e-14;
  options.logging_type = ceres::SILENT;
  options.minimizer_progress_to_stdout = false;

  ceres::GradientProblem problem(new CeresObjective(objective));
  ceres::GradientProblemSolver::Summary summary;
  Eigen::VectorXd solved = params;
  ceres::Solve(options, problem, solved.data(), &summary);

  double final_value = objective.value(solved);
  if (!std::isfinite(final_value) || !solved.allFinite()) {
    throw Error(ErrorCode::kOptimizationDiverged, "optimizer produced a non-finite objective");
  }
  if (final_value > initial) {
    solved = params;
    final_value = initial;
  }

  LpvDsPolicy policy(components, objective.to_matrices(solved), p, attractor, opts.margin);
  const double mse = mean_squared_error(policy, data, velocities);
  return EstimateResult{std::move(policy), mse, initial, final_value,
                        static_cast<int>(summary.iterations.size())};
}

LpvDsPolicy estimate(const Components& components, const Points& data, const Points& velocities,
                     const Vec& attractor, const EstimateOptions& opts) {
  return estimate_detailed(components, data, velocities, attractor, opts).policy;
}

}  // namespace elastic_ds
