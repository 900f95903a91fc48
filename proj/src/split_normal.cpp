#include "stormgen/split_normal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "stormgen/error.hpp"
#include "stormgen/stats.hpp"

namespace stormgen {

namespace {
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);
}

double SplitNormal::log_pdf(double x) const {
  const double s = x < location ? lower : upper;
  const double z = (x - location) / s;
  return std::log(kSqrt2OverPi / (lower + upper)) - 0.5 * z * z;
}

double SplitNormal::pdf(double x) const { return std::exp(log_pdf(x)); }

double SplitNormal::cdf(double x) const {
  const double total = lower + upper;
  if (x < location) return 2.0 * lower / total * normal_cdf((x - location) / lower);
  // Upper branch written through the survival function keeps precision near 1.
  return 1.0 - 2.0 * upper / total * normal_cdf(-(x - location) / upper);
}

double SplitNormal::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("split normal quantile: p outside (0,1)");
  const double total = lower + upper;
  const double split = lower / total;
  if (p < split) return location + lower * normal_quantile(p * total / (2.0 * lower));
  if (p == split) return location;
  return location - upper * normal_quantile((1.0 - p) * total / (2.0 * upper));
}

double SplitNormal::mean() const { return location + kSqrt2OverPi * (upper - lower); }

double SplitNormal::variance() const {
  const double d = upper - lower;
  return (1.0 - 2.0 / std::numbers::pi) * d * d + lower * upper;
}

void to_json(nlohmann::json& j, const SplitNormal& s) {
  j = nlohmann::json::array({s.location, s.lower, s.upper});
}

void from_json(const nlohmann::json& j, SplitNormal& s) {
  s = {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
  if (!(s.lower > 0.0) || !(s.upper > 0.0)) throw IngestError("split normal: scales must be positive");
}

double split_normal_log_likelihood(const SplitNormal& s, std::span<const double> samples) {
  double ll = 0.0;
  for (double x : samples) ll += s.log_pdf(x);
  return ll;
}

SplitNormal fit_split_normal(std::span<const double> samples, std::span<const double> weights) {
  if (samples.size() < 30) throw FitError("split normal fit needs at least 30 samples");
  if (!weights.empty() && weights.size() != samples.size()) {
    throw UsageError("split normal fit: weights and samples differ in length");
  }
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return samples[a] < samples[b]; });
  std::vector<double> x(samples.size()), w(samples.size(), 1.0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    x[i] = samples[order[i]];
    if (!weights.empty()) w[i] = weights[order[i]];
  }
  double n = 0.0;
  for (double wi : w) {
    if (!(wi >= 0.0)) throw UsageError("split normal fit: negative weight");
    n += wi;
  }
  if (!(x.back() > x.front()) || !(n > 0.0)) throw FitError("split normal fit: degenerate sample (zero variance)");

  // Profile: for location m, with S1 = sum_{x<m} w (x-m)^2 and S2 = sum_{x>=m} w (x-m)^2,
  // the scale MLEs are a sqrt((a+b)/n) and b sqrt((a+b)/n) with a = S1^(1/3), b = S2^(1/3),
  // and the maximized log-likelihood is const - 1.5 n log(a + b).
  auto sums = [&](double m) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - m;
      (d < 0.0 ? s1 : s2) += w[i] * d * d;
    }
    return std::pair{s1, s2};
  };
  auto profile = [&](double m) {
    auto [s1, s2] = sums(m);
    return std::cbrt(s1) + std::cbrt(s2);
  };

  // Coarse scan over the sample range, then Brent inside the best bracket.
  constexpr int kGrid = 64;
  const double lo = x.front(), hi = x.back();
  int best = 0;
  double best_val = profile(lo);
  for (int k = 1; k <= kGrid; ++k) {
    const double v = profile(lo + (hi - lo) * k / kGrid);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  const double a = lo + (hi - lo) * std::max(best - 1, 0) / kGrid;
  const double b = lo + (hi - lo) * std::min(best + 1, kGrid) / kGrid;
  const auto [m, val] = boost::math::tools::brent_find_minima(profile, a, b, 52);
  (void)val;

  auto [s1, s2] = sums(m);
  const double ca = std::cbrt(s1), cb = std::cbrt(s2);
  const double k = std::sqrt((ca + cb) / n);
  SplitNormal fit{m, ca * k, cb * k};
  if (!(fit.lower > 0.0) || !(fit.upper > 0.0)) {
    throw FitError("split normal fit: optimum on the sample boundary");
  }
  return fit;
}

}  // namespace stormgen
