#pragma once

#include <span>

#include <nlohmann/json.hpp>

namespace stormgen {

/// Two-piece normal: a normal density with scale `lower` left of `location`
/// and `upper` right of it, joined continuously at the mode.
struct SplitNormal {
  double location = 0.0;
  double lower = 1.0;
  double upper = 1.0;

  double pdf(double x) const;
  double log_pdf(double x) const;
  double cdf(double x) const;
  /// Throws std::domain_error unless 0 < p < 1.
  double quantile(double p) const;
  double mean() const;
  double variance() const;
  /// Probability mass left of the mode, lower / (lower + upper).
  double mass_below_mode() const { return lower / (lower + upper); }

  bool operator==(const SplitNormal&) const = default;
};

void to_json(nlohmann::json& j, const SplitNormal& s);
void from_json(const nlohmann::json& j, SplitNormal& s);

/// Maximum likelihood fit. For a fixed location the scale MLEs are closed
/// form, so the location is found by a one-dimensional search over the
/// profile likelihood. Needs at least 30 samples with positive spread.
SplitNormal fit_split_normal(std::span<const double> samples, std::span<const double> weights = {});

double split_normal_log_likelihood(const SplitNormal& s, std::span<const double> samples);

}  // namespace stormgen
