#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "stormgen/calendar.hpp"
#include "stormgen/grid.hpp"
#include "stormgen/synthetic.hpp"

namespace testing_support {

using namespace stormgen;

inline GridPtr regular_grid(int nx, int ny, double km, CellId first = 1) {
  return std::make_shared<const GridSpec>(make_regular_grid(nx, ny, km, first));
}

inline std::vector<Date> days(const char* first, const char* last) {
  return daily_range(parse_date(first), parse_date(last));
}

inline Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline std::vector<double> normal_sample(std::size_t n, std::uint64_t seed, double mu = 0.0, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(mu, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

/// Moment coefficients with the given mean/log-sd blocks and the grid's normalizer.
inline MomentCoefficients coefficients(const GridSpec& grid, std::array<double, 9> mean, std::array<double, 8> log_sd,
                                       int reference_year, bool include_trend = true) {
  MomentCoefficients c;
  c.mean = mean;
  c.log_sd = log_sd;
  c.normalizer = CovariateNormalizer::from_grid(grid);
  c.reference_year = reference_year;
  c.include_trend = include_trend;
  return c;
}

}  // namespace testing_support
