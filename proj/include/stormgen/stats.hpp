#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace stormgen {

double normal_cdf(double z);
/// Standard normal quantile; p must lie in (0, 1).
double normal_quantile(double p);

double mean(std::span<const double> x);
/// Sample variance with divisor n - 1.
double variance(std::span<const double> x);

/// Linear interpolation of order statistics; `sorted` must be ascending.
double quantile_linear(std::span<const double> sorted, double p);
/// Inverse of the empirical CDF, inf{x : G(x) >= p}; `sorted` must be ascending.
double quantile_inverse_ecdf(std::span<const double> sorted, double p);

/// Sample autocorrelation at lags 1..max_lag (mean removed, divisor n).
std::vector<double> autocorrelation(std::span<const double> x, int max_lag);

/// Counter-based seed derivation: a distinct, reproducible 64-bit seed for
/// every (master, stream, index) triple, independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0);

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
  return Engine(derive_seed(master, stream, index));
}

/// Fixed stream tags so independent consumers of one master seed never collide.
namespace streams {
inline constexpr std::uint64_t kArma = 1;
inline constexpr std::uint64_t kSpatialField = 2;
inline constexpr std::uint64_t kBootstrap = 3;
inline constexpr std::uint64_t kWorldTemporal = 10;
inline constexpr std::uint64_t kWorldSpatial = 11;
inline constexpr std::uint64_t kWorldRcmCommon = 12;
inline constexpr std::uint64_t kWorldRcmLocal = 13;
inline constexpr std::uint64_t kRealization = 20;
}  // namespace streams

}  // namespace stormgen
