#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace stormgen {

/// Zero-mean ARMA(p, q):
///   U_t = sum_i ar[i] U_{t-i} + e_t + sum_j ma[j] e_{t-j},  e_t ~ N(0, innovation_variance).
struct ArmaModel {
  std::vector<double> ar;
  std::vector<double> ma;
  double innovation_variance = 1.0;
  double log_likelihood = 0.0;
  double aicc = 0.0;

  int p() const { return static_cast<int>(ar.size()); }
  int q() const { return static_cast<int>(ma.size()); }

  /// AR polynomial roots outside the unit circle.
  bool is_causal() const;
  /// MA polynomial roots outside the unit circle.
  bool is_invertible() const;

  /// Theoretical autocovariance at lags 0..max_lag.
  std::vector<double> autocovariance(int max_lag) const;
  /// Theoretical autocorrelation at lags 1..max_lag.
  std::vector<double> autocorrelation(int max_lag) const;
  double marginal_variance() const { return autocovariance(0).front(); }
};

void to_json(nlohmann::json& j, const ArmaModel& m);
void from_json(const nlohmann::json& j, ArmaModel& m);

/// Exact Gaussian log-likelihood (state-space form, stationary initialization).
double arma_log_likelihood(const ArmaModel& model, std::span<const double> series);

struct ArmaFitOptions {
  int max_p = 3;
  int max_q = 3;
};

struct ArmaCandidate {
  int p = 0, q = 0;
  bool converged = false;
  double aicc = 0.0;
};

struct ArmaSelection {
  ArmaModel model;
  std::vector<ArmaCandidate> candidates;
};

/// Fits one fixed order by maximum likelihood. The AR and MA polynomials are
/// parametrized through partial autocorrelations, so every candidate visited by
/// the optimizer is causal and invertible. Throws FitError on failure.
ArmaModel fit_arma_order(std::span<const double> series, int p, int q);

/// Fits every order up to (max_p, max_q) and returns the one with the smallest
/// AICc. Needs at least 500 observations.
ArmaSelection fit_arma(std::span<const double> series, const ArmaFitOptions& options = {});

/// Stationary simulation; a burn-in of at least 10 (p + q + 1) steps is discarded.
std::vector<double> simulate_arma(const ArmaModel& model, std::size_t n, std::uint64_t seed);

}  // namespace stormgen
