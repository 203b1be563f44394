#include "elastic_ds/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "elastic_ds/config.hpp"
#include "elastic_ds/errors.hpp"

namespace elastic_ds {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Cached factorization used in the E-step inner loop.
struct Factor {
  Eigen::LLT<Mat> llt;
  double log_norm = 0.0;  // log prior - 0.5 * (d log 2pi + log det)
};

Factor factorize(const GaussianComponent& g) {
  Factor f;
  f.llt.compute(g.covariance);
  if (f.llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularCovariance, "covariance Cholesky failed");
  }
  const Mat& l = f.llt.matrixLLT();
  double log_det = 0.0;
  for (int i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  f.log_norm = std::log(g.prior) - 0.5 * (g.dim() * kLog2Pi + log_det);
  return f;
}

double log_weighted_pdf(const Factor& f, const GaussianComponent& g, const Vec& x) {
  const Vec z = f.llt.matrixL().solve(x - g.mean);
  return f.log_norm - 0.5 * z.squaredNorm();
}

double log_sum_exp(const double* v, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 over the combined key
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (a * 1315423911ULL + b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Mat data_covariance(const Points& data) {
  const int d = static_cast<int>(data.front().size());
  Vec mean = Vec::Zero(d);
  for (const auto& x : data) mean += x;
  mean /= static_cast<double>(data.size());
  Mat cov = Mat::Zero(d, d);
  for (const auto& x : data) cov += (x - mean) * (x - mean).transpose();
  return cov / static_cast<double>(data.size());
}

Points kmeans_pp(const Points& data, int k, std::mt19937_64& rng) {
  const std::size_t n = data.size();
  Points centers;
  centers.reserve(static_cast<std::size_t>(k));
  centers.push_back(data[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n]);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (data[i] - centers.back()).squaredNorm());
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
    }
    centers.push_back(data[pick]);
  }
  return centers;
}

Components init_from_centers(const Points& data, const Points& centers, double floor) {
  const int d = static_cast<int>(data.front().size());
  const std::size_t k = centers.size();
  const Mat global = data_covariance(data) + floor * Mat::Identity(d, d);
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double dd = (data[i] - centers[c]).squaredNorm();
      if (dd < best_d) {
        best_d = dd;
        best = c;
      }
    }
    members[best].push_back(i);
  }
  Components comps(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& g = comps[c];
    g.mean = centers[c];
    const auto& idx = members[c];
    if (idx.size() < 2) {
      g.covariance = global;
      g.prior = std::max(static_cast<double>(idx.size()), 1.0) / static_cast<double>(data.size());
      continue;
    }
    Vec m = Vec::Zero(d);
    for (auto i : idx) m += data[i];
    m /= static_cast<double>(idx.size());
    Mat cov = Mat::Zero(d, d);
    for (auto i : idx) cov += (data[i] - m) * (data[i] - m).transpose();
    g.mean = m;
    g.covariance = cov / static_cast<double>(idx.size()) + floor * Mat::Identity(d, d);
    g.prior = static_cast<double>(idx.size()) / static_cast<double>(data.size());
  }
  double total = 0.0;
  for (const auto& g : comps) total += g.prior;
  for (auto& g : comps) g.prior /= total;
  return comps;
}

// E-step; fills resp (n x k, row-major) and returns the log-likelihood.
double expectation(const Points& data, const Components& comps, std::vector<double>& resp) {
  const std::size_t k = comps.size();
  std::vector<Factor> factors;
  factors.reserve(k);
  for (const auto& g : comps) factors.push_back(factorize(g));
  resp.resize(data.size() * k);
  double ll = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double* row = resp.data() + i * k;
    for (std::size_t c = 0; c < k; ++c) row[c] = log_weighted_pdf(factors[c], comps[c], data[i]);
    const double lse = log_sum_exp(row, k);
    ll += lse;
    for (std::size_t c = 0; c < k; ++c) row[c] = std::exp(row[c] - lse);
  }
  return ll;
}

void maximization(const Points& data, const std::vector<double>& resp, double floor, Components& comps) {
  const std::size_t k = comps.size();
  const std::size_t n = data.size();
  const int d = static_cast<int>(data.front().size());
  for (std::size_t c = 0; c < k; ++c) {
    double nk = 0.0;
    Vec m = Vec::Zero(d);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = resp[i * k + c];
      nk += r;
      m += r * data[i];
    }
    auto& g = comps[c];
    if (nk <= std::numeric_limits<double>::min() * 1e10) {
      // Starved component: keep its shape, give it a vanishing weight.
      g.prior = std::numeric_limits<double>::min() * 1e10;
      continue;
    }
    m /= nk;
    Mat cov = Mat::Zero(d, d);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec dx = data[i] - m;
      cov += resp[i * k + c] * dx * dx.transpose();
    }
    // MAP update under the penalty -0.5 * n * floor * tr(inv(Sigma)): the
    // regularizer is n * floor / N_k >= floor.
    cov += static_cast<double>(n) * floor * Mat::Identity(d, d);
    cov /= nk;
    g.mean = m;
    g.covariance = 0.5 * (cov + cov.transpose());
    g.prior = nk / static_cast<double>(n);
  }
  double total = 0.0;
  for (const auto& g : comps) total += g.prior;
  for (auto& g : comps) g.prior /= total;
}

// Objective maximized by the regularized EM iteration.
double penalized(double loglik, const Components& comps, std::size_t n, double floor) {
  double penalty = 0.0;
  for (const auto& g : comps) {
    penalty += g.covariance.ldlt().solve(Mat::Identity(g.dim(), g.dim())).trace();
  }
  return loglik - 0.5 * static_cast<double>(n) * floor * penalty;
}

int parameter_count(int k, int d) { return (k - 1) + k * d + k * d * (d + 1) / 2; }

void check_data(const Points& data) {
  if (data.empty()) throw Error(ErrorCode::kInsufficientData, "no data points");
  const auto d = data.front().size();
  if (d != 2 && d != 3) throw Error(ErrorCode::kInvalidArgument, "data dimension must be 2 or 3");
  for (const auto& x : data) {
    if (x.size() != d) throw Error(ErrorCode::kInvalidArgument, "mixed data dimensions");
    if (!x.allFinite()) throw Error(ErrorCode::kInvalidArgument, "non-finite data point");
  }
}

}  // namespace

void GmmFitConfig::validate() const {
  if (k_min < 1) throw Error(ErrorCode::kInvalidArgument, "k_min must be >= 1");
  if (k_min > k_max) throw Error(ErrorCode::kInvalidArgument, "k_min must not exceed k_max");
  if (restarts < 1) throw Error(ErrorCode::kInvalidArgument, "restarts must be >= 1");
  if (covariance_floor && !(*covariance_floor > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "covariance_floor must be positive");
  }
  if (max_em_iters < 1) throw Error(ErrorCode::kInvalidArgument, "max_em_iters must be >= 1");
}

double log_gaussian_pdf(const GaussianComponent& g, const Vec& x) {
  GaussianComponent unit = g;
  unit.prior = 1.0;
  return log_weighted_pdf(factorize(unit), unit, x);
}

std::vector<double> responsibilities(const Components& components, const Vec& x) {
  if (components.empty()) throw Error(ErrorCode::kInvalidArgument, "no components");
  std::vector<double> out(components.size());
  for (std::size_t c = 0; c < components.size(); ++c) {
    out[c] = log_weighted_pdf(factorize(components[c]), components[c], x);
  }
  const double lse = log_sum_exp(out.data(), out.size());
  for (auto& v : out) v = std::exp(v - lse);
  return out;
}

double default_covariance_floor(const Points& data) {
  const int d = static_cast<int>(data.front().size());
  return std::max(1e-6 * data_covariance(data).trace() / d, 1e-12);
}

GmmFitResult fit_gmm_fixed_k(const Points& data, int k, std::uint64_t seed, double covariance_floor,
                             int max_iters, double loglik_tol) {
  check_data(data);
  std::mt19937_64 rng(seed);
  const Points centers = kmeans_pp(data, k, rng);
  GmmFitResult result;
  result.covariance_floor = covariance_floor;
  Components comps = init_from_centers(data, centers, covariance_floor);
  std::vector<double> resp;
  double ll = expectation(data, comps, resp);
  double objective = penalized(ll, comps, data.size(), covariance_floor);
  result.loglik_trace.push_back(objective);
  const double slack = tolerances().em_slack;
  for (int it = 0; it < max_iters; ++it) {
    maximization(data, resp, covariance_floor, comps);
    const double next = expectation(data, comps, resp);
    if (!std::isfinite(next)) {
      throw Error(ErrorCode::kEmDidNotImprove, "non-finite log-likelihood during EM");
    }
    const double next_objective = penalized(next, comps, data.size(), covariance_floor);
    result.loglik_trace.push_back(next_objective);
    const double scale = std::max(1.0, std::abs(objective));
    if (next_objective < objective - slack * scale) {
      throw Error(ErrorCode::kEmDidNotImprove, "penalized log-likelihood decreased from " +
                                                   std::to_string(objective) + " to " +
                                                   std::to_string(next_objective));
    }
    const bool done = std::abs(next_objective - objective) <= loglik_tol * scale;
    ll = next;
    objective = next_objective;
    if (done) break;
  }
  const int d = static_cast<int>(data.front().size());
  result.components = std::move(comps);
  result.log_likelihood = ll;
  result.bic = -2.0 * ll + parameter_count(k, d) * std::log(static_cast<double>(data.size()));
  return result;
}

GmmFitResult fit_gmm_detailed(const Points& data, const GmmFitConfig& cfg) {
  cfg.validate();
  check_data(data);
  const int d = static_cast<int>(data.front().size());
  if (data.size() < static_cast<std::size_t>(2 * d * cfg.k_max)) {
    throw Error(ErrorCode::kInsufficientData,
                std::to_string(data.size()) + " points cannot support k_max=" + std::to_string(cfg.k_max) +
                    " in " + std::to_string(d) + "D (need " + std::to_string(2 * d * cfg.k_max) + ")");
  }
  const double floor = cfg.covariance_floor.value_or(default_covariance_floor(data));

  // Every (K, restart) run has its own seed, so results do not depend on
  // evaluation order.
  std::optional<GmmFitResult> best;
  std::vector<double> bic_by_k;
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
    std::optional<GmmFitResult> best_k;
    for (int r = 0; r < cfg.restarts; ++r) {
      auto run = fit_gmm_fixed_k(data, k, mix_seed(cfg.seed, static_cast<std::uint64_t>(k),
                                                   static_cast<std::uint64_t>(r)),
                                 floor, cfg.max_em_iters, cfg.loglik_tol);
      if (!best_k || run.log_likelihood > best_k->log_likelihood) best_k = std::move(run);
    }
    bic_by_k.push_back(best_k->bic);
    if (!best || best_k->bic < best->bic) best = std::move(best_k);
  }
  best->bic_by_k = std::move(bic_by_k);
  return *best;
}

Components fit_gmm(const Points& data, const GmmFitConfig& cfg) {
  return fit_gmm_detailed(data, cfg).components;
}

OrderedGmm order_components(const Components& components, const Trajectory& demo) {
  if (components.empty()) throw Error(ErrorCode::kInvalidArgument, "no components to order");
  const auto s = demo.arc_parameter();
  const std::size_t k = components.size();
  std::vector<double> weight(k, 0.0);
  std::vector<double> acc(k, 0.0);
  for (std::size_t i = 0; i < demo.size(); ++i) {
    const auto gamma = responsibilities(components, demo.points()[i]);
    for (std::size_t c = 0; c < k; ++c) {
      weight[c] += gamma[c];
      acc[c] += gamma[c] * s[i];
    }
  }
  std::vector<double> score(k);
  std::vector<double> start_dist(k);
  for (std::size_t c = 0; c < k; ++c) {
    score[c] = weight[c] > 0.0 ? acc[c] / weight[c] : 0.0;
    start_dist[c] = (components[c].mean - demo.front()).norm();
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] < score[b];
    return start_dist[a] < start_dist[b];
  });
  OrderedGmm out;
  double total = 0.0;
  for (auto idx : order) {
    out.components.push_back(components[idx]);
    out.order_scores.push_back(score[idx]);
    total += components[idx].prior;
  }
  for (auto& g : out.components) g.prior /= total;
  return out;
}

}  // namespace elastic_ds
