#include "stormgen/downscaler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stormgen/error.hpp"
#include "stormgen/field_sampler.hpp"
#include "stormgen/stats.hpp"

namespace stormgen {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kXstar: return "xstar";
    case Variant::kXstarTrend: return "trend";
    case Variant::kXstarTrendVar: return "trendvar";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "xstar") return Variant::kXstar;
  if (name == "trend") return Variant::kXstarTrend;
  if (name == "trendvar") return Variant::kXstarTrendVar;
  throw UsageError("unknown variant '" + std::string(name) + "' (expected xstar, trend or trendvar)");
}

Eigen::MatrixXd simulate_residuals(const ResidualModel& model, const GridSpec& grid, std::span<const Date> dates,
                                   std::uint64_t seed) {
  const auto n_cells = static_cast<Eigen::Index>(grid.size());
  const std::size_t n_days = dates.size();
  if (model.marginals.size() != 365 || model.variogram.size() != 365) {
    throw UsageError("residual model must have 365 daily parameter rows");
  }
  std::vector<int> doy(n_days);
  for (std::size_t t = 0; t < n_days; ++t) doy[t] = calendar_day(dates[t]);

  const auto u = simulate_arma(model.arma, n_days, seed);
  Eigen::MatrixXd z(n_cells, static_cast<Eigen::Index>(n_days));

  std::array<std::vector<std::size_t>, 365> by_day;
  for (std::size_t t = 0; t < n_days; ++t) by_day[static_cast<std::size_t>(doy[t] - 1)].push_back(t);

  GaussianFieldSampler sampler(grid, 2);
  for (int d = 1; d <= 365; ++d) {
    const auto& days = by_day[static_cast<std::size_t>(d - 1)];
    if (days.empty()) continue;
    const auto f = sampler.factor(model.spatial(d));
    Eigen::MatrixXd normals(n_cells, static_cast<Eigen::Index>(days.size()));
    for (std::size_t k = 0; k < days.size(); ++k) {
      normals.col(static_cast<Eigen::Index>(k)) =
          standard_normal_vector(grid.size(), seed, streams::kSpatialField, days[k]);
    }
    const Eigen::MatrixXd nu = f->lower.triangularView<Eigen::Lower>() * normals;
    const auto& marginal = model.marginal(d);
    for (std::size_t k = 0; k < days.size(); ++k) {
      const std::size_t t = days[k];
      const double eta = from_copula(marginal, u[t]);
      z.col(static_cast<Eigen::Index>(t)) = nu.col(static_cast<Eigen::Index>(k)).array() + eta;
    }
  }
  return z;
}

StationaryMoments stationary_moments(const MomentCoefficients& fine, const GridSpec& grid,
                                     const CalendarIndex& train, const CalendarIndex& simulated) {
  const auto tp = predictor_parts(fine, grid, train);
  const auto sp = predictor_parts(fine, grid, simulated);
  // Time-mean of the full training mean minus that of baseline + seasonal over
  // the simulated period; the baseline cancels, so the offset is common to all cells.
  const double offset = tp.mean_seasonal.mean() + tp.mean_trend.mean() - sp.mean_seasonal.mean();
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto m = static_cast<Eigen::Index>(simulated.size());
  StationaryMoments out;
  out.mean.resize(n, m);
  out.sd.resize(n, m);
  for (Eigen::Index t = 0; t < m; ++t) {
    out.mean.col(t) = sp.mean_baseline.array() + (sp.mean_seasonal(t) + offset);
    out.sd.col(t) = (sp.log_sd_baseline.array() + sp.log_sd_seasonal(t)).exp();
  }
  return out;
}

SignalTransfer signal_transfer(const CorrectionContext& ctx, const GridSpec& coarse, const CalendarIndex& train,
                               const CalendarIndex& simulated, double min_ratio, double max_ratio) {
  ctx.validate();
  const auto test = predictor_parts(ctx.rcm_test, coarse, simulated);
  const auto trn = predictor_parts(ctx.rcm_train, coarse, train);
  const double train_trend_mean = trn.mean_trend.mean();
  const auto corrected = corrected_moments(ctx, coarse, simulated);

  const auto n = static_cast<Eigen::Index>(coarse.size());
  const auto m = static_cast<Eigen::Index>(simulated.size());
  SignalTransfer s;
  s.delta_mean.resize(n, m);
  s.sd_ratio.resize(n, m);
  for (Eigen::Index t = 0; t < m; ++t) {
    for (Eigen::Index r = 0; r < n; ++r) {
      s.delta_mean(r, t) = test.mean_baseline(r) + test.mean_trend(t) - (trn.mean_baseline(r) + train_trend_mean);
      const double ratio = std::sqrt(corrected.variance(r, t)) / corrected.obs_train.sd(r, t);
      if (!std::isfinite(ratio)) {
        throw FitError("non-finite sd ratio at coarse cell " + std::to_string(coarse.id(static_cast<std::size_t>(r))));
      }
      const double c = std::clamp(ratio, min_ratio, max_ratio);
      if (c != ratio) ++s.clamped;
      s.sd_ratio(r, t) = c;
    }
  }
  return s;
}

std::vector<std::size_t> largest_intersection(const OverlapMap& overlap, std::span<const std::size_t> fine_cells) {
  std::vector<std::size_t> out;
  out.reserve(fine_cells.size());
  for (std::size_t k : fine_cells) {
    const auto r = overlap.largest(k);
    if (!r) throw UsageError("fine cell index " + std::to_string(k) + " has no intersecting coarse cell");
    out.push_back(*r);
  }
  return out;
}

namespace {

void check_shapes(const Eigen::MatrixXd& z, const StationaryMoments& layers) {
  if (z.rows() != layers.mean.rows() || z.cols() != layers.mean.cols()) {
    throw UsageError("residual field and moment layers differ in shape");
  }
}

void check_signal(const Eigen::MatrixXd& z, const SignalTransfer& s, std::span<const std::size_t> map) {
  if (map.size() != static_cast<std::size_t>(z.rows())) throw UsageError("fine-to-coarse map has the wrong length");
  if (s.delta_mean.cols() != z.cols() || s.sd_ratio.cols() != z.cols()) {
    throw UsageError("signal transfer covers a different number of days");
  }
  for (std::size_t r : map) {
    if (static_cast<Eigen::Index>(r) >= s.delta_mean.rows()) throw UsageError("fine-to-coarse map out of range");
  }
}

}  // namespace

Eigen::MatrixXd assemble_xstar(const Eigen::MatrixXd& z_star, const StationaryMoments& layers) {
  check_shapes(z_star, layers);
  return (z_star.array() * layers.sd.array() + layers.mean.array()).matrix();
}

Eigen::MatrixXd assemble_xstar_trend(const Eigen::MatrixXd& z_star, const StationaryMoments& layers,
                                     const SignalTransfer& signal, std::span<const std::size_t> fine_to_coarse) {
  check_shapes(z_star, layers);
  check_signal(z_star, signal, fine_to_coarse);
  Eigen::MatrixXd out = assemble_xstar(z_star, layers);
  for (Eigen::Index s = 0; s < out.rows(); ++s) {
    out.row(s) += signal.delta_mean.row(static_cast<Eigen::Index>(fine_to_coarse[static_cast<std::size_t>(s)]));
  }
  return out;
}

Eigen::MatrixXd assemble_xstar_trend_var(const Eigen::MatrixXd& z_star, const StationaryMoments& layers,
                                         const SignalTransfer& signal, std::span<const std::size_t> fine_to_coarse) {
  check_shapes(z_star, layers);
  check_signal(z_star, signal, fine_to_coarse);
  Eigen::MatrixXd out(z_star.rows(), z_star.cols());
  for (Eigen::Index s = 0; s < out.rows(); ++s) {
    const auto r = static_cast<Eigen::Index>(fine_to_coarse[static_cast<std::size_t>(s)]);
    out.row(s) = z_star.row(s).array() * layers.sd.row(s).array() * signal.sd_ratio.row(r).array() +
                 layers.mean.row(s).array() + signal.delta_mean.row(r).array();
  }
  return out;
}

Eigen::MatrixXd assemble(Variant v, const Eigen::MatrixXd& z_star, const StationaryMoments& layers,
                         const SignalTransfer& signal, std::span<const std::size_t> fine_to_coarse) {
  switch (v) {
    case Variant::kXstar: return assemble_xstar(z_star, layers);
    case Variant::kXstarTrend: return assemble_xstar_trend(z_star, layers, signal, fine_to_coarse);
    case Variant::kXstarTrendVar: return assemble_xstar_trend_var(z_star, layers, signal, fine_to_coarse);
  }
  throw UsageError("unknown variant");
}

Realizations downscale(const DownscaleBundle& b, std::span<const Variant> variants) {
  if (!b.fine_grid || !b.coarse_grid) throw UsageError("downscale bundle is missing a grid");
  const CalendarIndex train(b.train_dates, b.fine.reference_year);
  const CalendarIndex test(b.test_dates, b.fine.reference_year);
  Realizations out;
  out.z_star = simulate_residuals(b.residual, *b.fine_grid, b.test_dates, b.seed);
  const auto layers = stationary_moments(b.fine, *b.fine_grid, train, test);
  const CalendarIndex coarse_train(b.train_dates, b.coarse.rcm_train.reference_year);
  const CalendarIndex coarse_test(b.test_dates, b.coarse.rcm_train.reference_year);
  out.signal = signal_transfer(b.coarse, *b.coarse_grid, coarse_train, coarse_test);
  for (Variant v : variants) {
    out.fields.emplace(v, Field(b.fine_grid, b.test_dates, assemble(v, out.z_star, layers, out.signal, b.fine_to_coarse)));
  }
  return out;
}

}  // namespace stormgen
