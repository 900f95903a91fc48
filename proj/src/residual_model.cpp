#include "stormgen/residual_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "stormgen/error.hpp"
#include "stormgen/hash.hpp"
#include "stormgen/stats.hpp"

namespace stormgen {

namespace {

constexpr double kProbabilityClamp = 1e-15;

}  // namespace

double to_copula(const SplitNormal& marginal, double eta) {
  const double p = std::clamp(marginal.cdf(eta), kProbabilityClamp, 1.0 - kProbabilityClamp);
  return normal_quantile(p);
}

double from_copula(const SplitNormal& marginal, double u) {
  const double p = std::clamp(normal_cdf(u), kProbabilityClamp, 1.0 - kProbabilityClamp);
  return marginal.quantile(p);
}

nlohmann::json ResidualModel::to_json() const {
  return {{"split_normal", marginals},
          {"arma", arma},
          {"variogram", variogram},
          {"catchment_id", catchment_id},
          {"training_hash", training_hash},
          {"gaussian_marginals", gaussian_marginals}};
}

ResidualModel ResidualModel::from_json(const nlohmann::json& j) {
  ResidualModel m;
  m.marginals = j.at("split_normal").get<std::vector<SplitNormal>>();
  m.arma = j.at("arma").get<ArmaModel>();
  m.variogram = j.at("variogram").get<std::vector<VariogramParams>>();
  m.catchment_id = j.value("catchment_id", "");
  m.training_hash = j.value("training_hash", "");
  m.gaussian_marginals = j.value("gaussian_marginals", false);
  if (m.marginals.size() != 365 || m.variogram.size() != 365) {
    throw IngestError("residual model tables must have 365 rows");
  }
  return m;
}

std::vector<std::vector<double>> pool_by_calendar_day(std::span<const double> values, std::span<const Date> dates,
                                                      int window) {
  if (values.size() != dates.size()) throw UsageError("pooling: values and dates differ in length");
  std::array<std::vector<double>, 365> buckets;
  for (std::size_t t = 0; t < values.size(); ++t) {
    buckets[static_cast<std::size_t>(calendar_day(dates[t]) - 1)].push_back(values[t]);
  }
  std::vector<std::vector<double>> pooled(365);
  for (int d = 0; d < 365; ++d) {
    for (int off = -window; off <= window; ++off) {
      const auto& b = buckets[static_cast<std::size_t>(((d + off) % 365 + 365) % 365)];
      pooled[static_cast<std::size_t>(d)].insert(pooled[static_cast<std::size_t>(d)].end(), b.begin(), b.end());
    }
  }
  return pooled;
}

ResidualFit fit_residual_model(const Field& standardized, const ResidualFitOptions& options) {
  ResidualFit fit;
  const auto& z = standardized.values();
  const auto dates = standardized.dates();
  const std::size_t n_days = standardized.n_days();

  fit.eta.resize(n_days);
  for (std::size_t t = 0; t < n_days; ++t) fit.eta[t] = z.col(static_cast<Eigen::Index>(t)).mean();

  auto& model = fit.model;
  model.gaussian_marginals = options.gaussian_marginals;
  model.catchment_id = options.catchment_id;
  model.training_hash = matrix_hash(z);
  const auto pooled = pool_by_calendar_day(fit.eta, dates, options.window);
  model.marginals.resize(365);
  for (std::size_t d = 0; d < 365; ++d) {
    const auto& sample = pooled[d];
    try {
      if (options.gaussian_marginals) {
        if (sample.size() < 30) throw FitError("fewer than 30 samples");
        const double m = mean(sample), s = std::sqrt(variance(sample));
        if (!(s > 0.0)) throw FitError("degenerate sample (zero variance)");
        model.marginals[d] = {m, s, s};
      } else {
        model.marginals[d] = fit_split_normal(sample);
      }
    } catch (const FitError& e) {
      throw FitError("marginal fit for calendar day " + std::to_string(d + 1) + ": " + e.what());
    }
  }

  fit.copula.resize(n_days);
  for (std::size_t t = 0; t < n_days; ++t) {
    fit.copula[t] = to_copula(model.marginal(calendar_day(dates[t])), fit.eta[t]);
  }
  model.arma = fit_arma(fit.copula, options.arma).model;

  Eigen::MatrixXd nu = z;
  for (std::size_t t = 0; t < n_days; ++t) nu.col(static_cast<Eigen::Index>(t)).array() -= fit.eta[t];
  const auto bins = DistanceBins::for_grid(standardized.grid(), options.distance_bins);
  fit.empirical = monthly_variograms(standardized.with_values(std::move(nu)), bins);
  for (std::size_t m = 0; m < 12; ++m) {
    try {
      fit.monthly[m] = variogram_fit(fit.empirical[m]).params;
    } catch (const FitError& e) {
      throw FitError("variogram fit for month " + std::to_string(m + 1) + ": " + e.what());
    }
  }
  model.variogram = smooth_variogram_params(fit.monthly);
  return fit;
}

}  // namespace stormgen
