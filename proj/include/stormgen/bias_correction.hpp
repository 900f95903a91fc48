#pragma once

#include <Eigen/Core>

#include "stormgen/grid.hpp"
#include "stormgen/moment_model.hpp"

namespace stormgen {

/// Fitted moment models needed by the Corr method. All three must share the
/// covariate normalizer and reference year.
struct CorrectionContext {
  MomentCoefficients obs_train;
  MomentCoefficients rcm_train;
  MomentCoefficients rcm_test;

  void validate() const;
};

inline constexpr double kVarianceFloor = 1e-4;  // degC^2

/// Corrected first two moments at the coarse scale over a period:
///   mean     = mu_obs,train + (mu_rcm,test - mu_rcm,train)
///   variance = max(s2_obs,train + (s2_rcm,test - s2_rcm,train), floor)
struct CorrectedMoments {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd variance;
  MomentSurface obs_train;
  MomentSurface rcm_train;
  MomentSurface rcm_test;
  std::size_t floored = 0;
};

CorrectedMoments corrected_moments(const CorrectionContext& ctx, const GridSpec& grid,
                                   const CalendarIndex& calendar);

struct CorrectionResult {
  Field corrected;
  std::size_t floored_entries = 0;
  double floored_fraction = 0.0;
  /// More than 1% of entries hit the variance floor: the models are likely incompatible.
  bool variance_warning() const { return floored_fraction > 0.01; }
};

/// Corr: rescales the standardized RCM anomalies to the corrected moments.
CorrectionResult correct(const Field& raw_test, const CorrectionContext& ctx);

/// Simple: one additive shift over the whole domain, mean(obs_train) - mean(rcm_train).
Field simple_correct(const Field& raw_test, const Field& obs_train, const Field& rcm_train);

/// LocalSimple: per-cell additive shift.
Field local_simple_correct(const Field& raw_test, const Field& obs_train, const Field& rcm_train);

}  // namespace stormgen
