#include "stormgen/field_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>

#include "stormgen/error.hpp"
#include "stormgen/stats.hpp"

namespace stormgen {

namespace {

long long key_part(double v) { return std::llround(std::clamp(v, -1e12, 1e12) * 1e6); }

}  // namespace

GaussianFieldSampler::GaussianFieldSampler(const GridSpec& grid, std::size_t cache_capacity)
    : distances_(grid.distance_matrix()), capacity_(std::max<std::size_t>(1, cache_capacity)) {}

VariogramParams GaussianFieldSampler::rounded(const VariogramParams& p) {
  return {static_cast<double>(key_part(p.nugget)) * 1e-6, static_cast<double>(key_part(p.sill)) * 1e-6,
          static_cast<double>(key_part(p.range)) * 1e-6};
}

Eigen::MatrixXd GaussianFieldSampler::covariance(const VariogramParams& p) const {
  const auto n = distances_.rows();
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) sigma(i, j) = p.covariance(i == j ? 0.0 : distances_(i, j));
  }
  return sigma;
}

std::shared_ptr<const CovarianceFactor> GaussianFieldSampler::factor(const VariogramParams& params) {
  const Key key{key_part(params.nugget), key_part(params.sill), key_part(params.range)};
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const VariogramParams p = rounded(params);
  if (p.nugget < 0.0 || p.sill < 0.0 || !(p.range > 0.0)) throw UsageError("invalid covariance parameters");
  const Eigen::MatrixXd sigma = covariance(p);
  const double n = static_cast<double>(sigma.rows());
  auto result = std::make_shared<CovarianceFactor>();
  result->params = p;

  if (sigma.trace() == 0.0) {
    result->lower = Eigen::MatrixXd::Zero(sigma.rows(), sigma.cols());
  }
  double jitter = 0.0;
  const double start = 1e-10 * sigma.trace() / n;
  while (result->lower.size() == 0) {
    Eigen::MatrixXd m = sigma;
    m.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) {
      result->lower = llt.matrixL();
      result->jitter = jitter;
      break;
    }
    jitter = jitter == 0.0 ? start : jitter * 10.0;
    if (jitter > 1e-6 || !(jitter > 0.0)) {
      throw FitError("covariance factorization failed after jitter escalation (nugget " +
                     std::to_string(p.nugget) + ", sill " + std::to_string(p.sill) + ", range " +
                     std::to_string(p.range) + ")");
    }
  }

  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  cache_.emplace(key, result);
  order_.push_back(key);
  while (cache_.size() > capacity_) {
    cache_.erase(order_.front());
    order_.pop_front();
  }
  return result;
}

Eigen::VectorXd standard_normal_vector(std::size_t n, std::uint64_t seed, std::uint64_t stream,
                                       std::uint64_t index) {
  auto engine = make_engine(seed, stream, index);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(engine);
  return z;
}

Eigen::VectorXd GaussianFieldSampler::sample(const CovarianceFactor& f, std::uint64_t seed, std::uint64_t stream,
                                             std::uint64_t index) const {
  const Eigen::VectorXd z = standard_normal_vector(size(), seed, stream, index);
  return f.lower.triangularView<Eigen::Lower>() * z;
}

Eigen::VectorXd GaussianFieldSampler::sample(const VariogramParams& params, std::uint64_t seed,
                                             std::uint64_t stream, std::uint64_t index) {
  return sample(*factor(params), seed, stream, index);
}

}  // namespace stormgen
