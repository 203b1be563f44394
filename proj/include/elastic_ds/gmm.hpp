#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "elastic_ds/core.hpp"

namespace elastic_ds {

struct GmmFitConfig {
  int k_min = 1;
  int k_max = 8;
  int restarts = 5;
  std::uint64_t seed = 0;
  // Lower bound on covariance eigenvalues, enforced by a MAP penalty on the
  // precision. Unset means 1e-6 * trace(data cov) / d.
  std::optional<double> covariance_floor;
  int max_em_iters = 500;
  double loglik_tol = 1e-9;  // Relative change in log-likelihood that stops EM.

  void validate() const;
};

struct GmmFitResult {
  Components components;
  double log_likelihood = 0.0;
  double bic = 0.0;
  double covariance_floor = 0.0;
  // Per-K best BIC, indexed from k_min.
  std::vector<double> bic_by_k;
  // Penalized log-likelihood (the quantity EM increases) after every
  // iteration of the selected run.
  std::vector<double> loglik_trace;
};

struct OrderedGmm {
  Components components;
  std::vector<double> order_scores;

  std::size_t size() const { return components.size(); }
};

// Log-density of a single Gaussian.
double log_gaussian_pdf(const GaussianComponent& g, const Vec& x);

// Component posteriors, computed in log space.
std::vector<double> responsibilities(const Components& components, const Vec& x);

// k-means++ initialised EM for each K in [k_min, k_max], best of restarts,
// model selected by BIC.
GmmFitResult fit_gmm_detailed(const Points& data, const GmmFitConfig& cfg);
Components fit_gmm(const Points& data, const GmmFitConfig& cfg);

// Single EM run with a fixed K; exposed for property tests.
GmmFitResult fit_gmm_fixed_k(const Points& data, int k, std::uint64_t seed, double covariance_floor,
                             int max_iters, double loglik_tol);

double default_covariance_floor(const Points& data);

// Sort components along the demonstration by responsibility-weighted
// normalized arc length.
OrderedGmm order_components(const Components& components, const Trajectory& demo);

}  // namespace elastic_ds
