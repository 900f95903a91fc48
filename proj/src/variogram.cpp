#include "stormgen/variogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "stormgen/error.hpp"

namespace stormgen {

double VariogramParams::gamma(double h) const {
  if (h <= 0.0) return 0.0;
  return nugget + sill * (1.0 - std::exp(-h / range));
}

double VariogramParams::covariance(double h) const {
  if (h <= 0.0) return nugget + sill;
  return sill * std::exp(-h / range);
}

void to_json(nlohmann::json& j, const VariogramParams& v) { j = nlohmann::json::array({v.nugget, v.sill, v.range}); }

void from_json(const nlohmann::json& j, VariogramParams& v) {
  if (!j.is_array() || j.size() != 3) throw IngestError("variogram parameters must be [nugget, sill, range]");
  v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  if (!(v.nugget >= 0.0) || !(v.sill >= 0.0) || !(v.range > 0.0)) {
    throw IngestError("variogram parameters out of range");
  }
}

DistanceBins DistanceBins::for_grid(const GridSpec& grid, int count) {
  const double half = 0.5 * grid.diameter_km();
  if (!(half > 0.0)) throw UsageError("variogram needs at least two distinct cell centers");
  return {half, count};
}

void to_json(nlohmann::json& j, const EmpiricalVariogram& v) {
  j = nlohmann::json::array();
  for (const auto& b : v.bins) j.push_back({{"h", b.h}, {"gamma", b.gamma}, {"pairs", b.pairs}});
}

EmpiricalVariogram empirical_variogram(const GridSpec& grid, const Eigen::MatrixXd& values,
                                       std::span<const std::size_t> days, const DistanceBins& bins) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (values.rows() != n) throw UsageError("variogram: values do not match the grid");
  if (days.empty()) throw UsageError("variogram: no days selected");
  Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(days.size()));
  for (std::size_t k = 0; k < days.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = values.col(static_cast<Eigen::Index>(days[k]));

  // sum_t (a_t - b_t)^2 = G_aa + G_bb - 2 G_ab with G the Gram matrix over days.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(sub);

  const int nb = bins.count;
  const double width = bins.width();
  std::vector<double> sum(static_cast<std::size_t>(nb), 0.0), dist(static_cast<std::size_t>(nb), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(nb), 0);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Point pj = grid.center(static_cast<std::size_t>(j));
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double h = distance_km(grid.center(static_cast<std::size_t>(i)), pj);
      if (h > bins.max_km || h <= 0.0) continue;
      const auto b = static_cast<std::size_t>(std::min(nb - 1, static_cast<int>(h / width)));
      sum[b] += gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
      dist[b] += h;
      ++count[b];
    }
  }
  EmpiricalVariogram out;
  const double nt = static_cast<double>(days.size());
  for (std::size_t b = 0; b < static_cast<std::size_t>(nb); ++b) {
    if (count[b] == 0) {
      ++out.dropped_bins;
      continue;
    }
    const double c = static_cast<double>(count[b]);
    out.bins.push_back({dist[b] / c, std::max(0.0, sum[b] / (2.0 * c * nt)), count[b]});
  }
  return out;
}

std::array<EmpiricalVariogram, 12> monthly_variograms(const Field& field, const DistanceBins& bins) {
  std::array<std::vector<std::size_t>, 12> by_month;
  const auto dates = field.dates();
  for (std::size_t t = 0; t < dates.size(); ++t) by_month[static_cast<std::size_t>(month_of(dates[t]) - 1)].push_back(t);
  std::array<EmpiricalVariogram, 12> out;
  for (std::size_t m = 0; m < 12; ++m) {
    if (by_month[m].empty()) continue;
    out[m] = empirical_variogram(field.grid(), field.values(), by_month[m], bins);
  }
  return out;
}

namespace {

struct Profile {
  double nugget = 0.0, sill = 0.0, objective = std::numeric_limits<double>::infinity();
};

// Non-negative weighted least squares for (nugget, sill) at a fixed range.
Profile profile_linear(const std::vector<double>& h, const std::vector<double>& g, const std::vector<double>& w,
                       double range) {
  const std::size_t n = h.size();
  std::vector<double> basis(n);
  double sw = 0, sb = 0, sbb = 0, sg = 0, sbg = 0;
  for (std::size_t j = 0; j < n; ++j) {
    basis[j] = 1.0 - std::exp(-h[j] / range);
    sw += w[j];
    sb += w[j] * basis[j];
    sbb += w[j] * basis[j] * basis[j];
    sg += w[j] * g[j];
    sbg += w[j] * basis[j] * g[j];
  }
  auto objective = [&](double a, double b) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double r = g[j] - a - b * basis[j];
      s += w[j] * r * r;
    }
    return s;
  };
  Profile best;
  auto consider = [&](double a, double b) {
    if (a < 0.0 || b < 0.0) return;
    const double v = objective(a, b);
    if (v < best.objective) best = {a, b, v};
  };
  const double det = sw * sbb - sb * sb;
  if (det > 1e-14 * sw * sbb) consider((sbb * sg - sb * sbg) / det, (sw * sbg - sb * sg) / det);
  consider(std::max(0.0, sg / sw), 0.0);
  if (sbb > 0.0) consider(0.0, std::max(0.0, sbg / sbb));
  consider(0.0, 0.0);
  return best;
}

// Gauss-Newton polish of an interior solution on all three parameters.
VariogramFit polish(const std::vector<double>& h, const std::vector<double>& g, const std::vector<double>& w,
                    VariogramFit fit) {
  const auto n = static_cast<Eigen::Index>(h.size());
  auto objective = [&](const VariogramParams& p) {
    double s = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double r = g[static_cast<std::size_t>(j)] - p.gamma(h[static_cast<std::size_t>(j)]);
      s += w[static_cast<std::size_t>(j)] * r * r;
    }
    return s;
  };
  for (int it = 0; it < 30; ++it) {
    const auto& p = fit.params;
    Eigen::MatrixXd J(n, 3);
    Eigen::VectorXd r(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double hj = h[static_cast<std::size_t>(j)], sw = std::sqrt(w[static_cast<std::size_t>(j)]);
      const double e = std::exp(-hj / p.range);
      r(j) = sw * (g[static_cast<std::size_t>(j)] - p.gamma(hj));
      J(j, 0) = sw;
      J(j, 1) = sw * (1.0 - e);
      J(j, 2) = sw * p.sill * e * hj / (p.range * p.range);
    }
    const Eigen::Vector3d step = J.colPivHouseholderQr().solve(r);
    VariogramParams next{p.nugget + step(0), p.sill + step(1), p.range + step(2)};
    if (!(next.nugget >= 0.0 && next.sill > 0.0 && next.range > 0.0)) break;
    const double v = objective(next);
    if (!(v < fit.objective)) break;
    fit = {next, v};
  }
  return fit;
}

}  // namespace

VariogramFit variogram_fit(const EmpiricalVariogram& emp) {
  if (emp.bins.size() < 4) throw FitError("variogram fit needs at least 4 non-empty bins");
  std::vector<double> h, g, w;
  for (const auto& b : emp.bins) {
    h.push_back(b.h);
    g.push_back(b.gamma);
    w.push_back(static_cast<double>(b.pairs) / (b.h * b.h));
  }
  const double h_min = *std::min_element(h.begin(), h.end());
  const double h_max = *std::max_element(h.begin(), h.end());
  const double lo = std::log(0.1 * h_min), hi = std::log(10.0 * h_max);

  VariogramFit best;
  best.objective = std::numeric_limits<double>::infinity();
  auto profile = [&](double u) { return profile_linear(h, g, w, std::exp(u)).objective; };
  constexpr int kStarts = 5;
  for (int s = 0; s < kStarts; ++s) {
    const double a = lo + (hi - lo) * s / kStarts, b = lo + (hi - lo) * (s + 1) / kStarts;
    std::uintmax_t iters = 200;
    const auto [u, v] = boost::math::tools::brent_find_minima(profile, a, b, 40, iters);
    if (!std::isfinite(v)) continue;
    if (v < best.objective) {
      const auto lin = profile_linear(h, g, w, std::exp(u));
      best = {{lin.nugget, lin.sill, std::exp(u)}, v};
    }
  }
  if (!std::isfinite(best.objective)) throw FitError("variogram fit: every start failed");
  if (best.params.sill > 0.0) best = polish(h, g, w, best);

  // A pure nugget is preferred when it fits as well as any structured model.
  double sw = 0, sg = 0;
  for (std::size_t j = 0; j < h.size(); ++j) {
    sw += w[j];
    sg += w[j] * g[j];
  }
  const double flat = std::max(0.0, sg / sw);
  double flat_obj = 0;
  for (std::size_t j = 0; j < h.size(); ++j) flat_obj += w[j] * (g[j] - flat) * (g[j] - flat);
  if (flat_obj <= best.objective * (1.0 + 1e-9) + 1e-14 * sw) {
    best = {{flat, 0.0, h_min}, flat_obj};
  }
  return best;
}

std::vector<double> smooth_seasonal(const std::array<double, 12>& monthly, SeasonalFloor floor) {
  auto row = [](double d) {
    const double w = 2.0 * std::numbers::pi * d / 365.0;
    Eigen::Matrix<double, 1, 5> r;
    r << 1.0, std::cos(w), std::sin(w), std::cos(2 * w), std::sin(2 * w);
    return r;
  };
  Eigen::Matrix<double, 12, 5> X;
  Eigen::Matrix<double, 12, 1> y;
  for (int k = 0; k < 12; ++k) {
    X.row(k) = row(365.0 * (k + 0.5) / 12.0);
    y(k) = monthly[static_cast<std::size_t>(k)];
  }
  const Eigen::Matrix<double, 5, 1> beta = X.colPivHouseholderQr().solve(y);
  const double min_month = *std::min_element(monthly.begin(), monthly.end());
  const double lower = floor == SeasonalFloor::kZero ? 0.0 : 0.1 * min_month;
  std::vector<double> out(365);
  for (int d = 1; d <= 365; ++d) out[static_cast<std::size_t>(d - 1)] = std::max(lower, row(d).dot(beta));
  return out;
}

std::vector<VariogramParams> smooth_variogram_params(const std::array<VariogramParams, 12>& monthly) {
  std::array<double, 12> nug{}, sill{}, range{};
  for (std::size_t m = 0; m < 12; ++m) {
    nug[m] = monthly[m].nugget;
    sill[m] = monthly[m].sill;
    range[m] = monthly[m].range;
  }
  const auto n = smooth_seasonal(nug, SeasonalFloor::kZero);
  const auto s = smooth_seasonal(sill, SeasonalFloor::kTenthOfMinimum);
  const auto r = smooth_seasonal(range, SeasonalFloor::kTenthOfMinimum);
  std::vector<VariogramParams> out(365);
  for (std::size_t d = 0; d < 365; ++d) out[d] = {n[d], s[d], r[d]};
  return out;
}

}  // namespace stormgen
