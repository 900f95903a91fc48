#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "stormgen/calendar.hpp"
#include "stormgen/grid.hpp"

namespace stormgen {

/// Exponential covariance Cov(h) = nugget 1{h = 0} + sill exp(-h / range).
struct VariogramParams {
  double nugget = 0.0;
  double sill = 1.0;   // partial sill
  double range = 1.0;  // km

  /// Semi-variogram nugget + sill (1 - exp(-h / range)) for h > 0, and 0 at h = 0.
  double gamma(double h) const;
  double covariance(double h) const;
  double total_sill() const { return nugget + sill; }

  bool operator==(const VariogramParams&) const = default;
};

void to_json(nlohmann::json& j, const VariogramParams& v);
void from_json(const nlohmann::json& j, VariogramParams& v);

/// Equal-width distance bins on [0, max_km].
struct DistanceBins {
  double max_km = 1.0;
  int count = 15;

  /// 15 bins out to half the grid diameter.
  static DistanceBins for_grid(const GridSpec& grid, int count = 15);
  double width() const { return max_km / count; }
};

struct VariogramBin {
  double h = 0.0;      // mean pair distance in the bin
  double gamma = 0.0;
  std::size_t pairs = 0;
};

struct EmpiricalVariogram {
  std::vector<VariogramBin> bins;
  std::size_t dropped_bins = 0;
};

void to_json(nlohmann::json& j, const EmpiricalVariogram& v);

/// Pooled semi-variogram of the columns `days` of a cells x days matrix:
///   gamma(h) = sum_pairs sum_t (v_st - v_s't)^2 / (2 |S(h)| |T|).
/// Bins without pairs are dropped.
EmpiricalVariogram empirical_variogram(const GridSpec& grid, const Eigen::MatrixXd& values,
                                       std::span<const std::size_t> days, const DistanceBins& bins);

/// One empirical semi-variogram per calendar month (index 0 = January).
std::array<EmpiricalVariogram, 12> monthly_variograms(const Field& field, const DistanceBins& bins);

struct VariogramFit {
  VariogramParams params;
  double objective = 0.0;
};

/// Weighted least squares with weights |S(h)| / h^2 and non-negative
/// parameters. Needs at least 4 bins.
VariogramFit variogram_fit(const EmpiricalVariogram& emp);

enum class SeasonalFloor { kZero, kTenthOfMinimum };

/// Periodic smoothing of 12 monthly values by regression on a constant and two
/// harmonics at the month midpoints, evaluated for calendar days 1..365.
std::vector<double> smooth_seasonal(const std::array<double, 12>& monthly, SeasonalFloor floor);

/// Daily parameter curves from monthly fits.
std::vector<VariogramParams> smooth_variogram_params(const std::array<VariogramParams, 12>& monthly);

}  // namespace stormgen
