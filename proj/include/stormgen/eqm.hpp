#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stormgen/grid.hpp"

namespace stormgen {

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes) with
/// linear continuation of the end secants outside the knot range.
class MonotoneSpline {
 public:
  MonotoneSpline() = default;
  /// `x` strictly increasing, `y` nondecreasing.
  MonotoneSpline(std::vector<double> x, std::vector<double> y);
  static MonotoneSpline from_parts(std::vector<double> x, std::vector<double> y, std::vector<double> slopes);

  double operator()(double v) const;
  std::span<const double> x() const { return x_; }
  std::span<const double> y() const { return y_; }
  std::span<const double> slopes() const { return d_; }
  bool empty() const { return x_.empty(); }

 private:
  std::vector<double> x_, y_, d_;
};

/// Probability knots k * step for k = 1, 2, ..., clipped to [0.001, 0.999].
std::vector<double> knot_grid(double step);

/// Per fine cell and calendar month transfer functions from RCM to observed quantiles.
struct TransferTable {
  std::vector<CellId> cell_ids;
  double knot_step = 0.001;
  std::vector<double> knots;
  std::vector<std::array<MonotoneSpline, 12>> splines;  // per cell

  /// Binary blob `path` plus a JSON header next to it (`.json`).
  void save(const std::filesystem::path& path, const std::string& grid_hash) const;
  static TransferTable load(const std::filesystem::path& path);
};

inline constexpr std::size_t kMinEqmSample = 100;

/// Empirical quantiles (inverse eCDF) of both samples at the knots, per cell
/// and month. Source values that repeat are merged by averaging their targets.
TransferTable eqm_train(const Field& obs_fine, const Field& rcm_regridded, double knot_step = 0.001);

Field eqm_apply(const TransferTable& table, const Field& rcm_regridded);

}  // namespace stormgen
