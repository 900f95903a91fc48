#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stormgen/grid.hpp"
#include "stormgen/moment_model.hpp"
#include "stormgen/residual_model.hpp"

namespace stormgen {

/// Known-truth world: fine observations, their upscaled coarse version and a
/// coarse RCM with its own moments and more persistent, block-wise noise.
struct WorldSpec {
  int coarse_nx = 6;
  int coarse_ny = 6;
  int fine_per_coarse = 5;
  double coarse_km = 12.5;
  std::string train_start = "1957-01-01";
  std::string train_end = "1986-12-31";
  std::string test_start = "1987-01-01";
  std::string test_end = "2005-12-31";

  /// Fine-scale observation model, coefficients in units of the fine-grid normalizer.
  std::array<double, kMeanTerms> mean{4.0, -0.5, 0.3, -1.5, -7.0, -1.5, 0.5, 0.3, 0.3};
  std::array<double, kLogSdTerms> log_sd{0.6931471805599453, 0.05, -0.03, 0.08, 0.25, 0.05, -0.05, 0.02};
  /// Difference of the modeled test-period and training-period mean.
  double mean_change = 0.9;

  double ar_phi = 0.5;
  double eta_variance = 0.15;
  /// Seasonal asymmetry a: lower/upper scales s (1 +- a cos(2 pi d / 365)).
  double eta_asymmetry = 0.3;
  VariogramParams nu{0.05, 0.8, 12.0};
  double range_amplitude = 4.0;

  double rcm_mean_offset = -2.0;
  double rcm_sd_factor = 1.3;
  double rcm_phi = 0.9;
  /// Share of RCM noise variance common to all coarse cells.
  double rcm_common_fraction = 0.1;

  /// Multiplies every noise component; 0 gives the modeled mean exactly.
  double noise_scale = 1.0;
  std::uint64_t seed = 1;

  /// Throws UsageError on out-of-range parameters.
  void validate() const;
  nlohmann::json to_json() const;
  static WorldSpec from_json(const nlohmann::json& j);
};

struct World {
  GridPtr fine;
  GridPtr coarse;
  OverlapMap overlap;
  std::vector<Date> train_dates;
  std::vector<Date> test_dates;
  Field obs_fine;    // training + test period
  Field obs_coarse;  // upscaled obs_fine
  Field rcm_coarse;
  MomentCoefficients obs_truth;  // training period
  MomentCoefficients rcm_truth;  // training period, coarse cells with upscaled covariates
  double test_offset = 0.0;      // added to a11 in the test period
  ResidualModel residual_truth;
};

/// Regular grid of nx x ny rectangular cells of the given size with smooth covariates.
GridSpec make_regular_grid(int nx, int ny, double cell_km, CellId first_id = 1);

World generate_world(const WorldSpec& spec);

}  // namespace stormgen
