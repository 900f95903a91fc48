#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stormgen/grid.hpp"
#include "stormgen/variogram.hpp"

namespace stormgen {

/// Indicator weights with windows taken from quantiles of the reference sample G.
enum class WeightKind { kFull, kUpperTail, kCenter, kLowerTail };

inline constexpr std::array<WeightKind, 4> kAllWeights = {WeightKind::kFull, WeightKind::kUpperTail,
                                                          WeightKind::kCenter, WeightKind::kLowerTail};

std::string_view weight_name(WeightKind w);

/// Window [lo, hi] of the weight, from inverse-eCDF quantiles of G
/// (upper tail x >= q95, center q45 <= x <= q55, lower tail x <= q05).
std::pair<double, double> weight_window(WeightKind w, std::span<const double> g_sorted);

/// Integrated quadratic distance between the eCDFs of two samples,
/// integral of (F - G)^2 w dx, computed exactly on the merged breakpoints.
double iqd(std::span<const double> f_sample, std::span<const double> g_sample, WeightKind weight = WeightKind::kFull);

/// CRPS of the empirical distribution of `ensemble` for observation y.
double crps_ensemble(std::span<const double> ensemble_sorted, double y);

/// Mean CRPS of the F-sample as forecast for every value of the G-sample.
double mean_crps(std::span<const double> f_sample, std::span<const double> g_sample);

struct IqdSummary {
  double mean = 0.0;
  double lo90 = 0.0;
  double hi90 = 0.0;
  std::vector<double> per_cell;
};

/// Mean of per-cell IQDs with a 90% interval from resampling cells.
IqdSummary iqd_catchment(const Field& method, const Field& obs, WeightKind weight, std::size_t resamples,
                         std::uint64_t seed);

/// Sample ACF at lags 1..max_lag of the spatial-mean series.
std::vector<double> acf_aggregated(const Field& field, int max_lag);

/// Monthly empirical semi-variograms of raw daily fields per method.
std::map<std::string, std::array<EmpiricalVariogram, 12>> variogram_compare(
    const std::map<std::string, const Field*>& fields, const DistanceBins& bins);

struct MethodReport {
  std::map<WeightKind, IqdSummary> iqd;
  std::vector<double> acf;
  std::array<EmpiricalVariogram, 12> variograms;
  bool has_variograms = false;
};

struct EvalReport {
  std::string catchment_id;
  std::string scale;  // "fine" or "coarse"
  std::vector<double> obs_acf;
  std::array<EmpiricalVariogram, 12> obs_variograms;
  bool has_variograms = false;
  std::map<std::string, MethodReport> methods;

  nlohmann::json to_json() const;
  /// One row per method x weight: catchment,scale,method,weight,mean,lo90,hi90.
  std::string iqd_csv() const;
  /// One row per method x lag.
  std::string acf_csv() const;
  /// One row per method x month x bin.
  std::string variogram_csv() const;
};

struct EvalOptions {
  std::size_t resamples = 10000;
  int max_lag = 30;
  bool variograms = true;
  std::uint64_t seed = 0;
  std::string catchment_id;
  std::string scale = "fine";
};

EvalReport evaluate_methods(const std::map<std::string, const Field*>& methods, const Field& obs,
                            const EvalOptions& options);

}  // namespace stormgen
