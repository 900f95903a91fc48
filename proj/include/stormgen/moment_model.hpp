#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "stormgen/calendar.hpp"
#include "stormgen/error.hpp"
#include "stormgen/grid.hpp"
#include "stormgen/optim.hpp"

namespace stormgen {

/// Centers and scales (lat, lon, elev) to zero mean and unit sd over a grid.
struct CovariateNormalizer {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  std::array<double, 3> scale{1.0, 1.0, 1.0};

  static CovariateNormalizer from_grid(const GridSpec& grid);
  std::array<double, 3> apply(const Covariates& c) const;
  bool operator==(const CovariateNormalizer&) const = default;
};

inline constexpr std::size_t kMeanTerms = 9;
inline constexpr std::size_t kLogSdTerms = 8;
inline constexpr std::size_t kCoefficientCount = kMeanTerms + kLogSdTerms;

/// Coefficients of the space-time Gaussian model
///   mu    = a11 + a12 c1 + a13 c2 + a14 c3 + harmonics(d) + a3 y
///   log s = b11 + b12 c1 + b13 c2 + b14 c3 + harmonics(d)
/// with harmonics(d) = k1 cos(2 pi d/365) + k2 sin(2 pi d/365) + k3 cos(4 pi d/365) + k4 sin(4 pi d/365).
/// Covariates enter in normalized units; `normalizer` maps raw covariates.
struct MomentCoefficients {
  std::array<double, kMeanTerms> mean{};     // a11..a14, a21..a24, a3
  std::array<double, kLogSdTerms> log_sd{};  // b11..b14, b21..b24
  CovariateNormalizer normalizer;
  int reference_year = 0;
  bool include_trend = true;

  double trend() const { return mean[8]; }

  static const std::array<std::string_view, kCoefficientCount>& names();
  std::array<double, kCoefficientCount> flat() const;
  static MomentCoefficients from_flat(std::span<const double> v, const CovariateNormalizer& n,
                                      int reference_year, bool include_trend);

  nlohmann::json to_json() const;
  static MomentCoefficients from_json(const nlohmann::json& j);
};

struct DesignRow {
  std::vector<double> mean;    // 9 entries, or 8 without the trend column
  std::vector<double> log_sd;  // 8 entries
};

std::array<double, 4> harmonics(int day_of_year);

DesignRow design_row(const std::array<double, 3>& normalized_covariates, int day_of_year,
                     double decade, bool include_trend);

/// Separable pieces of the linear predictors: per-cell baselines and per-day
/// seasonal/trend terms.
struct PredictorParts {
  Eigen::VectorXd mean_baseline;    // per cell
  Eigen::VectorXd mean_seasonal;    // per day
  Eigen::VectorXd mean_trend;       // per day
  Eigen::VectorXd log_sd_baseline;  // per cell
  Eigen::VectorXd log_sd_seasonal;  // per day
};

PredictorParts predictor_parts(const MomentCoefficients& c, const GridSpec& grid,
                               const CalendarIndex& calendar);

/// Mean and sd surfaces (cells x days).
struct MomentSurface {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd sd;
};

MomentSurface predict(const MomentCoefficients& c, const GridSpec& grid, const CalendarIndex& calendar);
MomentSurface predict(const MomentCoefficients& c, const Field& like);

/// Sum over entries of -log(sd) - (x - mean)^2 / (2 sd^2).
double log_likelihood(const MomentCoefficients& c, const Field& field);

struct MomentFitOptions {
  bool include_trend = true;
  /// Year mapped to y = 0; defaults to the first calendar year of the field.
  std::optional<int> reference_year;
  /// Reuse a normalizer (e.g. to share conventions between data sets on one grid).
  std::optional<CovariateNormalizer> normalizer;
  optim::BfgsOptions optimizer{.max_iterations = 1000};
};

struct MomentFit {
  MomentCoefficients coefficients;
  double log_likelihood = 0.0;
  double initial_log_likelihood = 0.0;
  MomentCoefficients initial;
  std::size_t iterations = 0;
  double gradient_inf_norm = 0.0;
  std::string status;
};

class MomentFitError : public FitError {
 public:
  MomentFitError(const std::string& what, MomentFit best) : FitError(what), best_(std::move(best)) {}
  const MomentFit& best() const { return best_; }

 private:
  MomentFit best_;
};

/// Joint maximum likelihood fit of all coefficients. Starts from OLS for the
/// mean and OLS of log|residual| + 0.635 for the log-sd, then runs BFGS on the
/// per-observation average negative log-likelihood.
MomentFit fit_moment_model(const Field& field, const MomentFitOptions& options = {});

/// Z = (X - mean) / sd.
Field standardize(const Field& field, const MomentSurface& surface);
/// X = Z sd + mean.
Field destandardize(const Field& residuals, const MomentSurface& surface);

}  // namespace stormgen
