#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stormgen/arma.hpp"
#include "stormgen/grid.hpp"
#include "stormgen/split_normal.hpp"
#include "stormgen/variogram.hpp"

namespace stormgen {

/// Stationary fine-scale residual model Z_st = eta_t + nu_st:
/// split-normal marginals of eta per calendar day, an ARMA process on the
/// Gaussian copula scale U_t = Phi^-1(F_SN(eta_t)), and a daily exponential
/// covariance for nu.
struct ResidualModel {
  std::vector<SplitNormal> marginals;      // calendar days 1..365
  ArmaModel arma;
  std::vector<VariogramParams> variogram;  // calendar days 1..365
  std::string catchment_id;
  std::string training_hash;
  bool gaussian_marginals = false;

  const SplitNormal& marginal(int day_of_year) const { return marginals.at(static_cast<std::size_t>(day_of_year - 1)); }
  const VariogramParams& spatial(int day_of_year) const { return variogram.at(static_cast<std::size_t>(day_of_year - 1)); }

  nlohmann::json to_json() const;
  static ResidualModel from_json(const nlohmann::json& j);
};

/// U = Phi^-1(F(eta)), with the probability kept strictly inside (0, 1).
double to_copula(const SplitNormal& marginal, double eta);
/// eta = F^-1(Phi(u)).
double from_copula(const SplitNormal& marginal, double u);

struct ResidualFitOptions {
  /// Skip the split-normal and use a normal marginal per calendar day.
  bool gaussian_marginals = false;
  /// Half-width in days of the pooling window around each calendar day.
  int window = 7;
  ArmaFitOptions arma;
  int distance_bins = 15;
  std::string catchment_id;
};

struct ResidualFit {
  ResidualModel model;
  std::vector<double> eta;     // spatial mean of Z per day
  std::vector<double> copula;  // U_t
  std::array<EmpiricalVariogram, 12> empirical;
  std::array<VariogramParams, 12> monthly;
};

/// Fits the residual model to standardized fine-scale residuals of one catchment.
ResidualFit fit_residual_model(const Field& standardized, const ResidualFitOptions& options = {});

/// Daily pooled samples: for each calendar day, all values whose calendar day
/// lies within +-window (cyclically).
std::vector<std::vector<double>> pool_by_calendar_day(std::span<const double> values, std::span<const Date> dates,
                                                      int window);

}  // namespace stormgen
