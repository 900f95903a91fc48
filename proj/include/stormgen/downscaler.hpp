#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "stormgen/bias_correction.hpp"
#include "stormgen/calendar.hpp"
#include "stormgen/grid.hpp"
#include "stormgen/moment_model.hpp"
#include "stormgen/residual_model.hpp"

namespace stormgen {

enum class Variant { kXstar, kXstarTrend, kXstarTrendVar };

std::string_view variant_name(Variant v);
/// Accepts `xstar`, `trend` and `trendvar`.
Variant parse_variant(std::string_view name);

/// Residual simulation Z* (cells x days):
///   1. U* from the ARMA model,
///   2. eta*_t = F_SN^-1(Phi(U*_t)) with the parameters of day t,
///   3. nu*_t ~ N(0, Sigma_t),
///   4. Z* = eta* + nu*.
Eigen::MatrixXd simulate_residuals(const ResidualModel& model, const GridSpec& grid, std::span<const Date> dates,
                                   std::uint64_t seed);

/// Fine-scale mean and sd layers of the stationary climate: the trend is
/// dropped and the mean recentred so that its time-mean over the simulated
/// period equals the training time-mean of the full fitted mean.
struct StationaryMoments {
  Eigen::MatrixXd mean;  // cells x days
  Eigen::MatrixXd sd;
};

StationaryMoments stationary_moments(const MomentCoefficients& fine, const GridSpec& grid,
                                     const CalendarIndex& train, const CalendarIndex& simulated);

/// Coarse-scale climate change signal per coarse cell and simulated day.
/// delta_mean is the RCM level+trend at day t minus its training-period
/// average; sd_ratio is sqrt(corrected variance) / obs training sd, clamped.
struct SignalTransfer {
  Eigen::MatrixXd delta_mean;  // coarse cells x days
  Eigen::MatrixXd sd_ratio;
  std::size_t clamped = 0;
};

SignalTransfer signal_transfer(const CorrectionContext& ctx, const GridSpec& coarse, const CalendarIndex& train,
                               const CalendarIndex& simulated, double min_ratio = 0.5, double max_ratio = 2.0);

/// Largest-intersection coarse cell for each fine cell in `fine_cells`
/// (indices into the overlap's fine grid). Throws if a cell has none.
std::vector<std::size_t> largest_intersection(const OverlapMap& overlap, std::span<const std::size_t> fine_cells);

Eigen::MatrixXd assemble_xstar(const Eigen::MatrixXd& z_star, const StationaryMoments& layers);
Eigen::MatrixXd assemble_xstar_trend(const Eigen::MatrixXd& z_star, const StationaryMoments& layers,
                                     const SignalTransfer& signal, std::span<const std::size_t> fine_to_coarse);
Eigen::MatrixXd assemble_xstar_trend_var(const Eigen::MatrixXd& z_star, const StationaryMoments& layers,
                                         const SignalTransfer& signal, std::span<const std::size_t> fine_to_coarse);
Eigen::MatrixXd assemble(Variant v, const Eigen::MatrixXd& z_star, const StationaryMoments& layers,
                         const SignalTransfer& signal, std::span<const std::size_t> fine_to_coarse);

/// Everything needed to produce realizations for one catchment.
struct DownscaleBundle {
  MomentCoefficients fine;
  ResidualModel residual;
  CorrectionContext coarse;
  GridPtr fine_grid;    // catchment cells
  GridPtr coarse_grid;
  std::vector<std::size_t> fine_to_coarse;
  std::vector<Date> train_dates;
  std::vector<Date> test_dates;
  std::uint64_t seed = 0;
};

struct Realizations {
  Eigen::MatrixXd z_star;
  SignalTransfer signal;
  std::map<Variant, Field> fields;
};

Realizations downscale(const DownscaleBundle& bundle, std::span<const Variant> variants);

}  // namespace stormgen
