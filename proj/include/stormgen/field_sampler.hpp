#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include <Eigen/Core>

#include "stormgen/grid.hpp"
#include "stormgen/variogram.hpp"

namespace stormgen {

/// Lower-triangular factor of an exponential covariance matrix on a grid.
struct CovarianceFactor {
  VariogramParams params;  // rounded parameters the factor was built from
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

/// Exact multivariate normal sampling of N(0, Sigma) with
/// Sigma_ij = nugget 1{i = j} + sill exp(-h_ij / range). Factors are cached per
/// parameter triple rounded to 1e-6.
class GaussianFieldSampler {
 public:
  explicit GaussianFieldSampler(const GridSpec& grid, std::size_t cache_capacity = 8);

  std::size_t size() const { return static_cast<std::size_t>(distances_.rows()); }

  Eigen::MatrixXd covariance(const VariogramParams& params) const;

  /// Throws FitError when the factorization fails even with the largest jitter.
  std::shared_ptr<const CovarianceFactor> factor(const VariogramParams& params);

  /// One draw using the normal stream (seed, stream, index).
  Eigen::VectorXd sample(const CovarianceFactor& f, std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t index) const;
  Eigen::VectorXd sample(const VariogramParams& params, std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t index);

  static VariogramParams rounded(const VariogramParams& params);

 private:
  using Key = std::tuple<long long, long long, long long>;

  Eigen::MatrixXd distances_;
  std::size_t capacity_;
  std::mutex mutex_;
  std::list<Key> order_;
  std::map<Key, std::shared_ptr<const CovarianceFactor>> cache_;
};

/// Standard normal vector from the counter-based stream (seed, stream, index).
Eigen::VectorXd standard_normal_vector(std::size_t n, std::uint64_t seed, std::uint64_t stream,
                                       std::uint64_t index);

}  // namespace stormgen
