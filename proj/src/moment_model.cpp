#include "stormgen/moment_model.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

#include <Eigen/Dense>

namespace stormgen {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// E[log|Z|] for Z ~ N(0,1) is -0.635.
constexpr double kHalfNormalLogOffset = 0.635;

struct Design {
  Eigen::MatrixXd cov;       // cells x 3 (normalized)
  Eigen::MatrixXd harm;      // days x 4
  Eigen::VectorXd decade;    // days
};

Design make_design(const CovariateNormalizer& norm, const GridSpec& grid, const CalendarIndex& cal) {
  Design d;
  d.cov.resize(static_cast<Eigen::Index>(grid.size()), 3);
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const auto c = norm.apply(grid.covariates(r));
    for (int j = 0; j < 3; ++j) d.cov(static_cast<Eigen::Index>(r), j) = c[static_cast<std::size_t>(j)];
  }
  d.harm.resize(static_cast<Eigen::Index>(cal.size()), 4);
  d.decade.resize(static_cast<Eigen::Index>(cal.size()));
  for (std::size_t t = 0; t < cal.size(); ++t) {
    const auto h = harmonics(cal.day_of_year(t));
    for (int j = 0; j < 4; ++j) d.harm(static_cast<Eigen::Index>(t), j) = h[static_cast<std::size_t>(j)];
    d.decade(static_cast<Eigen::Index>(t)) = cal.decade(t);
  }
  return d;
}

PredictorParts parts_from(const MomentCoefficients& c, const Design& d) {
  PredictorParts p;
  const Eigen::Vector3d am(c.mean[1], c.mean[2], c.mean[3]);
  const Eigen::Vector4d hm(c.mean[4], c.mean[5], c.mean[6], c.mean[7]);
  const Eigen::Vector3d as(c.log_sd[1], c.log_sd[2], c.log_sd[3]);
  const Eigen::Vector4d hs(c.log_sd[4], c.log_sd[5], c.log_sd[6], c.log_sd[7]);
  p.mean_baseline = (d.cov * am).array() + c.mean[0];
  p.mean_seasonal = d.harm * hm;
  p.mean_trend = d.decade * c.mean[8];
  p.log_sd_baseline = (d.cov * as).array() + c.log_sd[0];
  p.log_sd_seasonal = d.harm * hs;
  return p;
}

// Average negative log-likelihood and its gradient with respect to the 17
// flat coefficients. The separable design lets the gradient be assembled from
// per-cell and per-day sums of the pointwise derivatives.
double objective(std::span<const double> theta, std::span<double> grad, const Design& d,
                 const Eigen::MatrixXd& x, bool include_trend) {
  const Eigen::Index n_cells = x.rows(), n_days = x.cols();
  const double* th = theta.data();
  Eigen::VectorXd a(n_cells), b(n_cells), m(n_days), g(n_days);
  for (Eigen::Index r = 0; r < n_cells; ++r) {
    a(r) = th[0] + th[1] * d.cov(r, 0) + th[2] * d.cov(r, 1) + th[3] * d.cov(r, 2);
    b(r) = th[9] + th[10] * d.cov(r, 0) + th[11] * d.cov(r, 1) + th[12] * d.cov(r, 2);
  }
  for (Eigen::Index t = 0; t < n_days; ++t) {
    m(t) = th[4] * d.harm(t, 0) + th[5] * d.harm(t, 1) + th[6] * d.harm(t, 2) + th[7] * d.harm(t, 3) +
           (include_trend ? th[8] * d.decade(t) : 0.0);
    g(t) = th[13] * d.harm(t, 0) + th[14] * d.harm(t, 1) + th[15] * d.harm(t, 2) + th[16] * d.harm(t, 3);
  }
  Eigen::VectorXd cell_gm = Eigen::VectorXd::Zero(n_cells), cell_gs = Eigen::VectorXd::Zero(n_cells);
  Eigen::VectorXd day_gm(n_days), day_gs(n_days);
  double f = 0.0;
  for (Eigen::Index t = 0; t < n_days; ++t) {
    const double* col = x.col(t).data();
    double sum_gm = 0.0, sum_gs = 0.0, sum_f = 0.0;
    for (Eigen::Index r = 0; r < n_cells; ++r) {
      const double ls = b(r) + g(t);
      const double inv = std::exp(-ls);
      const double z = (col[r] - a(r) - m(t)) * inv;
      sum_f += ls + 0.5 * z * z;
      const double gm = -z * inv;
      const double gs = 1.0 - z * z;
      sum_gm += gm;
      sum_gs += gs;
      cell_gm(r) += gm;
      cell_gs(r) += gs;
    }
    f += sum_f;
    day_gm(t) = sum_gm;
    day_gs(t) = sum_gs;
  }
  const double n = static_cast<double>(n_cells * n_days);
  if (!grad.empty()) {
    grad[0] = cell_gm.sum() / n;
    grad[9] = cell_gs.sum() / n;
    for (int j = 0; j < 3; ++j) {
      grad[static_cast<std::size_t>(1 + j)] = cell_gm.dot(d.cov.col(j)) / n;
      grad[static_cast<std::size_t>(10 + j)] = cell_gs.dot(d.cov.col(j)) / n;
    }
    for (int j = 0; j < 4; ++j) {
      grad[static_cast<std::size_t>(4 + j)] = day_gm.dot(d.harm.col(j)) / n;
      grad[static_cast<std::size_t>(13 + j)] = day_gs.dot(d.harm.col(j)) / n;
    }
    grad[8] = include_trend ? day_gm.dot(d.decade) / n : 0.0;
  }
  return f / n;
}

// OLS of the mean with constant variance, then OLS of log|e| + 0.635 on the
// log-sd predictors.
std::array<double, kCoefficientCount> initializer(const Design& d, const Eigen::MatrixXd& x,
                                                  bool include_trend) {
  const Eigen::Index n_cells = x.rows(), n_days = x.cols();
  const int pm = include_trend ? 9 : 8;
  Eigen::Matrix<double, 9, 9> xtx = Eigen::Matrix<double, 9, 9>::Zero();
  Eigen::Matrix<double, 9, 1> xty = Eigen::Matrix<double, 9, 1>::Zero();
  Eigen::Matrix<double, 9, 1> row;
  for (Eigen::Index t = 0; t < n_days; ++t) {
    for (Eigen::Index r = 0; r < n_cells; ++r) {
      row << 1.0, d.cov(r, 0), d.cov(r, 1), d.cov(r, 2), d.harm(t, 0), d.harm(t, 1), d.harm(t, 2),
          d.harm(t, 3), d.decade(t);
      xtx.noalias() += row * row.transpose();
      xty += row * x(r, t);
    }
  }
  const Eigen::MatrixXd lhs = xtx.topLeftCorner(pm, pm);
  const Eigen::VectorXd rhs = xty.head(pm);
  const Eigen::VectorXd beta_m = lhs.completeOrthogonalDecomposition().solve(rhs);

  double sse = 0.0;
  Eigen::MatrixXd resid(n_cells, n_days);
  for (Eigen::Index t = 0; t < n_days; ++t) {
    for (Eigen::Index r = 0; r < n_cells; ++r) {
      double mu = beta_m(0) + beta_m(1) * d.cov(r, 0) + beta_m(2) * d.cov(r, 1) + beta_m(3) * d.cov(r, 2) +
                  beta_m(4) * d.harm(t, 0) + beta_m(5) * d.harm(t, 1) + beta_m(6) * d.harm(t, 2) +
                  beta_m(7) * d.harm(t, 3);
      if (include_trend) mu += beta_m(8) * d.decade(t);
      resid(r, t) = x(r, t) - mu;
      sse += resid(r, t) * resid(r, t);
    }
  }
  const double floor = 1e-8 * std::sqrt(sse / static_cast<double>(x.size()) + 1e-300);

  Eigen::Matrix<double, 8, 8> ztz = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> zty = Eigen::Matrix<double, 8, 1>::Zero();
  Eigen::Matrix<double, 8, 1> zr;
  for (Eigen::Index t = 0; t < n_days; ++t) {
    for (Eigen::Index r = 0; r < n_cells; ++r) {
      zr << 1.0, d.cov(r, 0), d.cov(r, 1), d.cov(r, 2), d.harm(t, 0), d.harm(t, 1), d.harm(t, 2), d.harm(t, 3);
      ztz.noalias() += zr * zr.transpose();
      zty += zr * (std::log(std::max(std::abs(resid(r, t)), floor)) + kHalfNormalLogOffset);
    }
  }
  const Eigen::MatrixXd ztz_dyn = ztz;
  const Eigen::VectorXd beta_s = ztz_dyn.completeOrthogonalDecomposition().solve(Eigen::VectorXd(zty));

  std::array<double, kCoefficientCount> theta{};
  for (int j = 0; j < 8; ++j) theta[static_cast<std::size_t>(j)] = beta_m(j);
  theta[8] = include_trend ? beta_m(8) : 0.0;
  for (int j = 0; j < 8; ++j) theta[static_cast<std::size_t>(9 + j)] = beta_s(j);
  return theta;
}

}  // namespace

CovariateNormalizer CovariateNormalizer::from_grid(const GridSpec& grid) {
  CovariateNormalizer n;
  const double count = static_cast<double>(grid.size());
  if (grid.empty()) return n;
  for (int j = 0; j < 3; ++j) {
    auto value = [j](const Covariates& c) { return j == 0 ? c.lat_deg : (j == 1 ? c.lon_deg : c.elev_m); };
    double s = 0.0;
    for (const auto& c : grid.all_covariates()) s += value(c);
    const double m = s / count;
    double ss = 0.0;
    for (const auto& c : grid.all_covariates()) ss += (value(c) - m) * (value(c) - m);
    const double sd = std::sqrt(ss / count);
    n.center[static_cast<std::size_t>(j)] = m;
    // A covariate that is constant over the grid is absorbed by the intercept.
    n.scale[static_cast<std::size_t>(j)] = sd > 0.0 ? sd : 1.0;
  }
  return n;
}

std::array<double, 3> CovariateNormalizer::apply(const Covariates& c) const {
  return {(c.lat_deg - center[0]) / scale[0], (c.lon_deg - center[1]) / scale[1],
          (c.elev_m - center[2]) / scale[2]};
}

const std::array<std::string_view, kCoefficientCount>& MomentCoefficients::names() {
  static const std::array<std::string_view, kCoefficientCount> n = {
      "alpha11", "alpha12", "alpha13", "alpha14", "alpha21", "alpha22", "alpha23", "alpha24", "alpha3",
      "beta11",  "beta12",  "beta13",  "beta14",  "beta21",  "beta22",  "beta23",  "beta24"};
  return n;
}

std::array<double, kCoefficientCount> MomentCoefficients::flat() const {
  std::array<double, kCoefficientCount> v{};
  std::copy(mean.begin(), mean.end(), v.begin());
  std::copy(log_sd.begin(), log_sd.end(), v.begin() + kMeanTerms);
  return v;
}

MomentCoefficients MomentCoefficients::from_flat(std::span<const double> v, const CovariateNormalizer& n,
                                                 int reference_year, bool include_trend) {
  if (v.size() != kCoefficientCount) throw UsageError("moment model needs 17 coefficients");
  MomentCoefficients c;
  std::copy(v.begin(), v.begin() + kMeanTerms, c.mean.begin());
  std::copy(v.begin() + kMeanTerms, v.end(), c.log_sd.begin());
  if (!include_trend) c.mean[8] = 0.0;
  c.normalizer = n;
  c.reference_year = reference_year;
  c.include_trend = include_trend;
  return c;
}

nlohmann::json MomentCoefficients::to_json() const {
  nlohmann::json j;
  const auto v = flat();
  for (std::size_t i = 0; i < kCoefficientCount; ++i) j["coefficients"][std::string(names()[i])] = v[i];
  j["normalizer"] = {{"center", normalizer.center}, {"scale", normalizer.scale}};
  j["reference_year"] = reference_year;
  j["include_trend"] = include_trend;
  return j;
}

MomentCoefficients MomentCoefficients::from_json(const nlohmann::json& j) {
  std::array<double, kCoefficientCount> v{};
  for (std::size_t i = 0; i < kCoefficientCount; ++i) {
    v[i] = j.at("coefficients").at(std::string(names()[i])).get<double>();
    if (!std::isfinite(v[i])) throw IngestError("moment model: non-finite coefficient");
  }
  CovariateNormalizer n;
  n.center = j.at("normalizer").at("center").get<std::array<double, 3>>();
  n.scale = j.at("normalizer").at("scale").get<std::array<double, 3>>();
  for (double s : n.scale) {
    if (!(s > 0.0)) throw IngestError("moment model: normalizer scale must be positive");
  }
  return from_flat(v, n, j.at("reference_year").get<int>(), j.value("include_trend", true));
}

std::array<double, 4> harmonics(int day_of_year) {
  const double w = kTwoPi * day_of_year / 365.0;
  return {std::cos(w), std::sin(w), std::cos(2.0 * w), std::sin(2.0 * w)};
}

DesignRow design_row(const std::array<double, 3>& c, int day_of_year, double decade, bool include_trend) {
  const auto h = harmonics(day_of_year);
  DesignRow row;
  row.log_sd = {1.0, c[0], c[1], c[2], h[0], h[1], h[2], h[3]};
  row.mean = row.log_sd;
  if (include_trend) row.mean.push_back(decade);
  return row;
}

PredictorParts predictor_parts(const MomentCoefficients& c, const GridSpec& grid, const CalendarIndex& cal) {
  return parts_from(c, make_design(c.normalizer, grid, cal));
}

MomentSurface predict(const MomentCoefficients& c, const GridSpec& grid, const CalendarIndex& cal) {
  const auto p = predictor_parts(c, grid, cal);
  MomentSurface s;
  const Eigen::RowVectorXd day_mean = (p.mean_seasonal + p.mean_trend).transpose();
  const Eigen::RowVectorXd day_ls = p.log_sd_seasonal.transpose();
  s.mean = p.mean_baseline.replicate(1, day_mean.size()).rowwise() + day_mean;
  s.sd = (p.log_sd_baseline.replicate(1, day_ls.size()).rowwise() + day_ls).array().exp();
  return s;
}

MomentSurface predict(const MomentCoefficients& c, const Field& like) {
  return predict(c, like.grid(), CalendarIndex(like.dates(), c.reference_year));
}

double log_likelihood(const MomentCoefficients& c, const Field& field) {
  const auto design = make_design(c.normalizer, field.grid(), CalendarIndex(field.dates(), c.reference_year));
  const auto theta = c.flat();
  return -objective(theta, {}, design, field.values(), c.include_trend) *
         static_cast<double>(field.values().size());
}

MomentFit fit_moment_model(const Field& field, const MomentFitOptions& options) {
  if (field.n_days() < 730) throw FitError("moment fit needs at least two years of daily data");
  std::set<std::tuple<double, double, double>> distinct;
  for (const auto& c : field.grid().all_covariates()) distinct.emplace(c.lat_deg, c.lon_deg, c.elev_m);
  if (distinct.size() < 4) throw FitError("moment fit needs at least 4 distinct covariate triples");

  const int ref = options.reference_year.value_or(year_of(field.dates().front()));
  const auto norm = options.normalizer.value_or(CovariateNormalizer::from_grid(field.grid()));
  const auto design = make_design(norm, field.grid(), CalendarIndex(field.dates(), ref));
  const auto& x = field.values();
  const bool trend = options.include_trend;
  const double n = static_cast<double>(x.size());

  MomentFit fit;
  const auto theta0 = initializer(design, x, trend);
  fit.initial = MomentCoefficients::from_flat(theta0, norm, ref, trend);
  fit.initial_log_likelihood = -objective(theta0, {}, design, x, trend) * n;

  auto f = [&](std::span<const double> th, std::span<double> g) {
    return objective(th, g, design, x, trend);
  };
  auto res = optim::minimize_bfgs(f, {theta0.begin(), theta0.end()}, options.optimizer);

  fit.iterations = res.iterations;
  fit.gradient_inf_norm = res.gradient_inf_norm;
  fit.status = res.status;
  // BFGS never returns a point worse than its start, but keep the guarantee explicit.
  if (-res.value * n < fit.initial_log_likelihood) {
    fit.coefficients = fit.initial;
    fit.log_likelihood = fit.initial_log_likelihood;
  } else {
    fit.coefficients = MomentCoefficients::from_flat(res.x, norm, ref, trend);
    fit.log_likelihood = -res.value * n;
  }
  if (!res.converged) {
    throw MomentFitError("moment fit did not converge after " + std::to_string(res.iterations) +
                             " iterations (" + res.status + ", |grad|inf = " +
                             std::to_string(res.gradient_inf_norm) + ")",
                         fit);
  }
  return fit;
}

Field standardize(const Field& field, const MomentSurface& s) {
  const auto& x = field.values();
  if (s.mean.rows() != x.rows() || s.mean.cols() != x.cols() || s.sd.rows() != x.rows() ||
      s.sd.cols() != x.cols()) {
    throw UsageError("standardize: surface dimensions do not match the field");
  }
  if ((s.sd.array() <= 0.0).any()) throw UsageError("standardize: non-positive sd");
  return field.with_values((x - s.mean).cwiseQuotient(s.sd));
}

Field destandardize(const Field& z, const MomentSurface& s) {
  const auto& v = z.values();
  if (s.mean.rows() != v.rows() || s.mean.cols() != v.cols() || s.sd.rows() != v.rows() ||
      s.sd.cols() != v.cols()) {
    throw UsageError("destandardize: surface dimensions do not match the field");
  }
  if ((s.sd.array() <= 0.0).any()) throw UsageError("destandardize: non-positive sd");
  return z.with_values(v.cwiseProduct(s.sd) + s.mean);
}

}  // namespace stormgen
