// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "stormgen/arma.hpp"
#include "stormgen/bias_correction.hpp"
#include "stormgen/downscaler.hpp"
#include "stormgen/eqm.hpp"
#include "stormgen/evaluation.hpp"
#include "stormgen/field_io.hpp"
#include "stormgen/field_sampler.hpp"
#include "stormgen/hash.hpp"
#include "stormgen/moment_model.hpp"
#include "stormgen/pipeline.hpp"
#include "stormgen/split_normal.hpp"
#include "stormgen/stats.hpp"
#include "stormgen/synthetic.hpp"
#include "stormgen/variogram.hpp"
#include "support.hpp"

using namespace stormgen;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Newey-West sandwich standard errors of the moment-model MLE evaluated at
// the true coefficients: per-day summed scores, expected information.
std::array<double, kCoefficientCount> sandwich_standard_errors(const MomentCoefficients& truth, const Field& field) {
  const CalendarIndex cal(field.dates(), truth.reference_year);
  const auto surf = predict(truth, field.grid(), cal);
  const auto n_cells = static_cast<Eigen::Index>(field.n_cells());
  const auto n_days = static_cast<Eigen::Index>(field.n_days());
  constexpr int K = static_cast<int>(kCoefficientCount);
  std::vector<std::array<double, 3>> cov(static_cast<std::size_t>(n_cells));
  for (Eigen::Index s = 0; s < n_cells; ++s) cov[static_cast<std::size_t>(s)] = truth.normalizer.apply(field.grid().covariates(static_cast<std::size_t>(s)));

  Eigen::MatrixXd scores(K, n_days);
  Eigen::Matrix<double, 9, 9> jm = Eigen::Matrix<double, 9, 9>::Zero();
  Eigen::Matrix<double, 8, 8> js = Eigen::Matrix<double, 8, 8>::Zero();
  for (Eigen::Index t = 0; t < n_days; ++t) {
    const auto h = harmonics(cal.day_of_year(static_cast<std::size_t>(t)));
    const double y = cal.decade(static_cast<std::size_t>(t));
    Eigen::Matrix<double, 9, 1> st = Eigen::Matrix<double, 9, 1>::Zero();
    Eigen::Matrix<double, 8, 1> ss = Eigen::Matrix<double, 8, 1>::Zero();
    Eigen::Matrix<double, 9, 9> jm_day = Eigen::Matrix<double, 9, 9>::Zero();
    Eigen::Matrix<double, 8, 8> js_day = Eigen::Matrix<double, 8, 8>::Zero();
    for (Eigen::Index s = 0; s < n_cells; ++s) {
      const auto& c = cov[static_cast<std::size_t>(s)];
      Eigen::Matrix<double, 9, 1> xm;
      xm << 1.0, c[0], c[1], c[2], h[0], h[1], h[2], h[3], y;
      const Eigen::Matrix<double, 8, 1> xs = xm.head<8>();
      const double sd = surf.sd(s, t);
      const double z = (field.values()(s, t) - surf.mean(s, t)) / sd;
      st += (z / sd) * xm;
      ss += (z * z - 1.0) * xs;
      jm_day.selfadjointView<Eigen::Lower>().rankUpdate(xm, 1.0 / (sd * sd));
      js_day.selfadjointView<Eigen::Lower>().rankUpdate(xs, 2.0);
    }
    jm += jm_day;
    js += js_day;
    scores.col(t).head<9>() = st;
    scores.col(t).tail<8>() = ss;
  }
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(K, K);
  info.topLeftCorner<9, 9>() = jm.selfadjointView<Eigen::Lower>();
  info.bottomRightCorner<8, 8>() = js.selfadjointView<Eigen::Lower>();

  const int lags = 30;
  Eigen::MatrixXd omega = scores * scores.transpose();
  for (int l = 1; l <= lags; ++l) {
    const double w = 1.0 - static_cast<double>(l) / (lags + 1);
    const Eigen::MatrixXd g = scores.rightCols(n_days - l) * scores.leftCols(n_days - l).transpose();
    omega += w * (g + g.transpose());
  }
  const Eigen::MatrixXd inv = info.inverse();
  const Eigen::MatrixXd v = inv * omega * inv;
  std::array<double, kCoefficientCount> se{};
  for (int k = 0; k < K; ++k) se[static_cast<std::size_t>(k)] = std::sqrt(v(k, k));
  return se;
}

Outcome criterion1() {
  WorldSpec spec;
  spec.seed = 20240601;
  const auto world = generate_world(spec);
  const auto train = world.obs_fine.slice(world.train_dates.front(), world.train_dates.back());
  const auto t0 = std::chrono::steady_clock::now();
  const auto fit = fit_moment_model(train);
  const double elapsed = seconds_since(t0);
  const auto se = sandwich_standard_errors(world.obs_truth, train);
  const auto est = fit.coefficients.flat();
  const auto tru = world.obs_truth.flat();
  double worst = 0.0;
  std::string worst_name;
  for (std::size_t k = 0; k < kCoefficientCount; ++k) {
    const double r = std::abs(est[k] - tru[k]) / se[k];
    if (r > worst) {
      worst = r;
      worst_name = std::string(MomentCoefficients::names()[k]);
    }
  }
  const double trend_err = std::abs(fit.coefficients.trend() - world.obs_truth.trend());
  const bool pass = worst <= 3.0 && trend_err <= 0.05 && elapsed < 60.0;
  return {pass, "max |error|/SE = " + fmt(worst) + " (" + worst_name + "), trend error " + fmt(trend_err) +
                    " degC/decade, fit time " + fmt(elapsed, 3) + " s"};
}

Outcome criterion2() {
  const auto grid = regular_grid(6, 6, 12.5);
  const int ref = 1957;
  // Identity under identical models.
  const auto obs = coefficients(*grid, {4, -0.5, 0.3, -1.5, -7, -1.5, 0.5, 0.3, 0.3},
                                {std::log(2.0), 0.05, -0.03, 0.08, 0.25, 0.05, -0.05, 0.02}, ref);
  const auto test_days = days("1987-01-01", "2005-12-31");
  const CalendarIndex test_cal(test_days, ref);
  Field raw(grid, test_days, normal_matrix(36, static_cast<Eigen::Index>(test_days.size()), 5) * 3.0);
  const auto id = correct(raw, {obs, obs, obs});
  const double identity_err = (id.corrected.values() - raw.values()).cwiseAbs().maxCoeff();

  // Signal preservation on a triple with a prescribed +0.9 degC change.
  const auto train_days = days("1957-01-01", "1986-12-31");
  const CalendarIndex train_cal(train_days, ref);
  auto rcm_train = obs;
  rcm_train.mean[0] -= 2.0;
  rcm_train.log_sd[0] += std::log(1.3);
  const auto pa = predictor_parts(obs, *grid, train_cal), pb = predictor_parts(obs, *grid, test_cal);
  const double modeled = (pb.mean_seasonal + pb.mean_trend).mean() - (pa.mean_seasonal + pa.mean_trend).mean();
  auto rcm_test = rcm_train;
  rcm_test.mean[0] += 0.9 - modeled;
  auto simulate = [&](const MomentCoefficients& c, const CalendarIndex& cal, const std::vector<Date>& d,
                      std::uint64_t seed) {
    const auto s = predict(c, *grid, cal);
    return Field(grid, d, s.mean + s.sd.cwiseProduct(normal_matrix(36, static_cast<Eigen::Index>(d.size()), seed)));
  };
  const auto obs_train = simulate(obs, train_cal, train_days, 11);
  const auto rcm_train_f = simulate(rcm_train, train_cal, train_days, 12);
  const auto rcm_test_f = simulate(rcm_test, test_cal, test_days, 13);
  MomentFitOptions opts;
  opts.reference_year = ref;
  opts.normalizer = CovariateNormalizer::from_grid(*grid);
  const CorrectionContext ctx{fit_moment_model(obs_train, opts).coefficients,
                              fit_moment_model(rcm_train_f, opts).coefficients,
                              fit_moment_model(rcm_test_f, opts).coefficients};
  const auto corrected = correct(rcm_test_f, ctx).corrected;
  const double change = corrected.values().mean() - obs_train.values().mean();
  const bool pass = identity_err < 1e-9 && std::abs(change - 0.9) <= 0.05;
  return {pass, "identity max deviation " + fmt(identity_err) + ", preserved change " + fmt(change) + " degC (target 0.9 +- 0.05)"};
}

Outcome criterion3() {
  const SplitNormal sn{0.0, 1.0, 2.0};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-4.0, 8.0);
  double round_trip = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    round_trip = std::max(round_trip, std::abs(sn.quantile(sn.cdf(x)) - x));
  }
  std::uniform_real_distribution<double> p(0.0, 1.0);
  std::vector<double> sample(10000);
  for (auto& x : sample) {
    double q = p(rng);
    while (q == 0.0) q = p(rng);
    x = sn.quantile(q);
  }
  const auto fit = fit_split_normal(sample);
  const double err = std::max({std::abs(fit.location), std::abs(fit.lower - 1.0), std::abs(fit.upper - 2.0)});
  const bool pass = round_trip < 1e-10 && err <= 0.08;
  return {pass, "round-trip max error " + fmt(round_trip) + ", fitted (" + fmt(fit.location) + ", " + fmt(fit.lower) +
                    ", " + fmt(fit.upper) + "), max parameter error " + fmt(err)};
}

Outcome criterion4() {
  ArmaModel ar1;
  ar1.ar = {0.8};
  ar1.innovation_variance = 1.0;
  const auto series = simulate_arma(ar1, 5000, 404);
  const auto sel = fit_arma(series);
  const auto fixed = fit_arma_order(series, 1, 0);
  const double phi_err = std::abs(fixed.ar[0] - 0.8);

  int white_hits = 0;
  const int seeds = 50;
  ArmaModel wn;
  wn.innovation_variance = 1.0;
  for (int s = 0; s < seeds; ++s) {
    const auto x = simulate_arma(wn, 5000, 1000 + static_cast<std::uint64_t>(s));
    const auto m = fit_arma(x).model;
    if (m.p() == 0 && m.q() == 0) ++white_hits;
  }

  ArmaModel half;
  half.ar = {0.5};
  const auto rho = half.autocorrelation(10);
  double acf_err = 0.0;
  for (int k = 1; k <= 10; ++k) acf_err = std::max(acf_err, std::abs(rho[static_cast<std::size_t>(k - 1)] - std::pow(0.5, k)));

  const bool pass = phi_err <= 0.05 && sel.model.p() >= 1 && white_hits >= 45 && acf_err < 1e-15;
  return {pass, "AR(1) phi error " + fmt(phi_err) + " (selected order (" + std::to_string(sel.model.p()) + "," +
                    std::to_string(sel.model.q()) + ")), white noise selected (0,0) on " + std::to_string(white_hits) +
                    "/50 seeds (need >= 45), ACF max error " + fmt(acf_err)};
}

Outcome criterion5() {
  const auto grid = regular_grid(16, 16, 5.0);
  GaussianFieldSampler sampler(*grid);
  const VariogramParams truth{0.0, 0.8, 30.0};
  const int draws = 400;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(grid->size()), draws);
  const auto f = sampler.factor(truth);
  for (int t = 0; t < draws; ++t) values.col(t) = sampler.sample(*f, 55, streams::kSpatialField, static_cast<std::uint64_t>(t));
  std::vector<std::size_t> all(static_cast<std::size_t>(draws));
  for (std::size_t t = 0; t < all.size(); ++t) all[t] = t;
  const auto emp = empirical_variogram(*grid, values, all, DistanceBins::for_grid(*grid));
  const auto fit = variogram_fit(emp).params;
  const double range_rel = std::abs(fit.range - 30.0) / 30.0;

  const VariogramParams exact{0.1, 0.8, 12.0};
  EmpiricalVariogram clean;
  for (int j = 1; j <= 15; ++j) clean.bins.push_back({2.0 * j, exact.gamma(2.0 * j), static_cast<std::size_t>(50 + j)});
  const auto inv = variogram_fit(clean).params;
  const double inv_err = std::max({std::abs(inv.nugget - 0.1), std::abs(inv.sill - 0.8), std::abs(inv.range - 12.0)});
  const bool pass = range_rel <= 0.2 && inv_err < 1e-6;
  return {pass, "simulated fit (" + fmt(fit.nugget) + ", " + fmt(fit.sill) + ", " + fmt(fit.range) +
                    " km), range error " + fmt(100 * range_rel, 3) + "%, zero-noise inversion error " + fmt(inv_err)};
}

Outcome criterion6() {
  const auto grid = regular_grid(5, 5, 4.0);
  GaussianFieldSampler sampler(*grid);
  const VariogramParams p{0.1, 1.0, 8.0};
  const int n = 10000;
  const auto f = sampler.factor(p);
  const auto cells = static_cast<Eigen::Index>(grid->size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(cells, cells);
  for (int i = 0; i < n; ++i) {
    const auto x = sampler.sample(*f, 66, streams::kSpatialField, static_cast<std::uint64_t>(i));
    acc.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  acc = acc.selfadjointView<Eigen::Lower>();
  acc /= n;
  const double cov_err = (acc - sampler.covariance(p)).cwiseAbs().maxCoeff();

  const VariogramParams nugget{1.0, 0.0, 1.0};
  const auto g = sampler.factor(nugget);
  Eigen::MatrixXd xs(cells, n);
  for (int i = 0; i < n; ++i) xs.col(i) = sampler.sample(*g, 67, streams::kSpatialField, static_cast<std::uint64_t>(i));
  Eigen::MatrixXd centered = xs.colwise() - xs.rowwise().mean();
  Eigen::MatrixXd c = centered * centered.transpose();
  const Eigen::VectorXd d = c.diagonal().cwiseSqrt();
  double max_rho = 0.0;
  for (Eigen::Index i = 0; i < cells; ++i)
    for (Eigen::Index j = 0; j < i; ++j) max_rho = std::max(max_rho, std::abs(c(i, j) / (d(i) * d(j))));
  const bool pass = cov_err < 0.05 && max_rho < 0.05;
  return {pass, "max covariance deviation " + fmt(cov_err) + ", pure-nugget max |rho| " + fmt(max_rho)};
}

Outcome criterion7() {
  const auto coarse0 = make_regular_grid(2, 2, 12.5);
  const auto fine = regular_grid(10, 10, 2.5, 1000);
  const auto overlap = OverlapMap::build(*fine, coarse0);
  const auto coarse = std::make_shared<const GridSpec>(upscale_covariates(*fine, coarse0, overlap));

  DownscaleBundle b;
  b.fine_grid = fine;
  b.coarse_grid = coarse;
  b.fine = coefficients(*fine, {4, -0.5, 0.3, -1.5, -7, -1.5, 0.5, 0.3, 0.3},
                        {std::log(2.0), 0.05, -0.03, 0.08, 0.25, 0.05, -0.05, 0.02}, 1957);
  auto obs_c = coefficients(*coarse, {3, -0.4, 0.2, -1.2, -7, -1.5, 0.5, 0.3, 0.0},
                            {std::log(1.6), 0.05, -0.03, 0.08, 0.25, 0.05, -0.05, 0.02}, 1957);
  auto rcm_test = obs_c;
  rcm_test.mean[0] += 0.9;
  rcm_test.log_sd[0] += std::log(1.2);
  b.coarse = {obs_c, obs_c, rcm_test};
  std::vector<std::size_t> all(fine->size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  b.fine_to_coarse = largest_intersection(overlap, all);
  b.train_dates = days("1957-01-01", "1986-12-31");
  const Date start = parse_date("1987-01-01");
  b.test_dates = daily_range(start, start + std::chrono::days{9999});
  b.seed = 77;
  auto& rm = b.residual;
  rm.arma.ar = {0.5};
  rm.arma.innovation_variance = 0.75;
  rm.marginals.assign(365, SplitNormal{-0.1, 0.3, 0.45});
  rm.variogram.assign(365, VariogramParams{0.05, 0.8, 10.0});

  const std::vector<Variant> first{Variant::kXstar};
  const std::vector<Variant> rest{Variant::kXstarTrend, Variant::kXstarTrendVar};
  const auto r1 = downscale(b, first);
  const auto r2 = downscale(b, rest);
  const bool z_identical = r1.z_star.size() == r2.z_star.size() &&
                           std::memcmp(r1.z_star.data(), r2.z_star.data(), sizeof(double) * r1.z_star.size()) == 0;

  const auto& xs = r1.fields.at(Variant::kXstar).values();
  const auto& xt = r2.fields.at(Variant::kXstarTrend).values();
  const auto& xv = r2.fields.at(Variant::kXstarTrendVar).values();
  const double delta_err = ((xt - xs).rowwise().mean().array() - 0.9).abs().maxCoeff();

  const CalendarIndex train(b.train_dates, 1957), test(b.test_dates, 1957);
  const auto layers = stationary_moments(b.fine, *fine, train, test);
  double ratio_err = 0.0;
  for (Eigen::Index s = 0; s < xt.rows(); ++s) {
    const Eigen::ArrayXd mt = layers.mean.row(s).array() + 0.9;
    const Eigen::ArrayXd a = xv.row(s).array() - mt.transpose();
    const Eigen::ArrayXd c = xt.row(s).array() - mt.transpose();
    auto sd = [](const Eigen::ArrayXd& v) { return std::sqrt((v - v.mean()).square().sum() / static_cast<double>(v.size() - 1)); };
    ratio_err = std::max(ratio_err, std::abs(sd(a) / sd(c) / 1.2 - 1.0));
  }
  const bool pass = z_identical && delta_err <= 0.02 && ratio_err <= 0.03;
  return {pass, std::string("Z* bitwise identical: ") + (z_identical ? "yes" : "no") + ", max |mean(XstarTrend - Xstar) - 0.9| " +
                    fmt(delta_err) + ", max relative sd-ratio error " + fmt(ratio_err)};
}

Outcome criterion8() {
  const auto grid = regular_grid(2, 2, 2.5);
  const auto d = days("1957-01-01", "1986-12-31");
  const auto n = static_cast<Eigen::Index>(d.size());
  const Eigen::MatrixXd base = normal_matrix(4, n, 81);
  const Eigen::MatrixXd rcm = base * 2.0 + normal_matrix(4, n, 82) * 0.5;
  const Eigen::MatrixXd obs = (base.array() * 1.5 + 3.0).matrix() + normal_matrix(4, n, 83) * 0.7;
  const Field obs_f(grid, d, obs), rcm_f(grid, d, rcm);
  const auto table = eqm_train(obs_f, rcm_f);
  const auto mapped = eqm_apply(table, rcm_f);

  std::array<std::vector<std::size_t>, 12> by_month;
  for (std::size_t t = 0; t < d.size(); ++t) by_month[static_cast<std::size_t>(month_of(d[t]) - 1)].push_back(t);
  double self_err = 0.0;
  for (Eigen::Index s = 0; s < 4; ++s) {
    for (std::size_t m = 0; m < 12; ++m) {
      std::vector<double> out, target;
      for (std::size_t t : by_month[m]) {
        out.push_back(mapped.values()(s, static_cast<Eigen::Index>(t)));
        target.push_back(obs(s, static_cast<Eigen::Index>(t)));
      }
      std::sort(out.begin(), out.end());
      std::sort(target.begin(), target.end());
      for (double p : table.knots) {
        self_err = std::max(self_err, std::abs(quantile_inverse_ecdf(out, p) - quantile_inverse_ecdf(target, p)));
      }
    }
  }

  bool monotone = true;
  for (const auto& cell : table.splines) {
    for (const auto& sp : cell) {
      const double lo = sp.x().front() - 5.0, hi = sp.x().back() + 5.0;
      double prev = -std::numeric_limits<double>::infinity();
      for (int i = 0; i <= 20000; ++i) {
        const double v = sp(lo + (hi - lo) * i / 20000.0);
        if (v < prev) monotone = false;
        prev = v;
      }
    }
  }

  std::mt19937_64 rng(84);
  std::normal_distribution<double> nd(0.0, 3.0);
  std::vector<std::pair<double, double>> pairs;
  for (int i = 0; i < 10000; ++i) {
    const double x = nd(rng);
    pairs.emplace_back(x, table.splines[1][6](x));
  }
  std::sort(pairs.begin(), pairs.end());
  bool ranks = true;
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    if (pairs[i].second < pairs[i - 1].second) ranks = false;
  }
  const bool pass = self_err <= 1e-9 && monotone && ranks;
  return {pass, "self-map max knot error " + fmt(self_err) + ", monotone sweeps: " + (monotone ? "yes" : "no") +
                    ", rank preservation on 1e4 inputs: " + (ranks ? "yes" : "no")};
}

Outcome criterion9() {
  const auto f = normal_sample(2000, 91);
  const double self = iqd(f, f);
  const double point = iqd(std::vector<double>{0.0}, std::vector<double>{1.0});
  const auto a = normal_sample(100000, 92, 0.0, 1.0);
  const auto b = normal_sample(100000, 93, 1.0, 1.0);
  const double est = iqd(a, b);
  const double exact = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double x) {
        const double d = normal_cdf(x) - normal_cdf(x - 1.0);
        return d * d;
      },
      -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15, 1e-12);

  int agree = 0;
  const int sets = 6;
  for (int s = 0; s < sets; ++s) {
    const auto obs = normal_sample(1500, 200 + static_cast<std::uint64_t>(s));
    const std::vector<std::pair<double, double>> methods{{0.0, 1.0}, {0.15, 1.0}, {0.0, 1.3}, {0.4, 0.9}, {-0.25, 1.1}, {0.05, 0.8}};
    std::vector<double> by_iqd, by_crps;
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const auto x = normal_sample(1500, 300 + 10 * static_cast<std::uint64_t>(s) + k, methods[k].first, methods[k].second);
      by_iqd.push_back(iqd(x, obs));
      by_crps.push_back(mean_crps(x, obs));
    }
    std::vector<std::size_t> ri(methods.size()), rc(methods.size());
    for (std::size_t k = 0; k < ri.size(); ++k) ri[k] = rc[k] = k;
    std::sort(ri.begin(), ri.end(), [&](auto i, auto j) { return by_iqd[i] < by_iqd[j]; });
    std::sort(rc.begin(), rc.end(), [&](auto i, auto j) { return by_crps[i] < by_crps[j]; });
    if (ri == rc) ++agree;
  }
  const bool pass = self == 0.0 && point == 1.0 && std::abs(est - exact) <= 0.01 && agree == sets;
  return {pass, "IQD(F,F) = " + fmt(self) + ", point masses " + fmt(point, 17) + ", Gaussian IQD " + fmt(est, 6) +
                    " vs quadrature " + fmt(exact, 6) + ", rankings agree on " + std::to_string(agree) + "/" +
                    std::to_string(sets) + " method sets"};
}

fs::path acceptance_dir() { return fs::current_path() / "acceptance_run"; }

PipelineConfig acceptance_config() {
  nlohmann::json j{{"output_dir", "out"}, {"seed", 2024}, {"world", WorldSpec{}.to_json()}};
  j["world"]["seed"] = 17;
  fs::create_directories(acceptance_dir());
  return PipelineConfig::from_json(j, acceptance_dir());
}

// Level of the winter semi-variogram where it flattens: mean gamma over the
// outer third of the distance bins, averaged over December to February.
double winter_sill(const nlohmann::json& variograms) {
  double s = 0.0;
  for (int m : {12, 1, 2}) {
    const auto& bins = variograms.at(static_cast<std::size_t>(m - 1));
    const std::size_t n = bins.size();
    const std::size_t outer = (n + 2) / 3;
    double g = 0.0;
    for (std::size_t j = n - outer; j < n; ++j) g += bins.at(j).at("gamma").get<double>();
    s += g / static_cast<double>(outer);
  }
  return s / 3.0;
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

Outcome criterion10() {
  fs::remove_all(acceptance_dir());
  const auto cfg = acceptance_config();
  const auto t0 = std::chrono::steady_clock::now();
  run_pipeline(cfg);
  const double elapsed = seconds_since(t0);
  const auto report = read_json(cfg.output_dir / "evaluate/report.json").at("fine");
  const auto& m = report.at("methods");
  const double iqd_trend = m.at("trend").at("iqd").at("full").at("mean").get<double>();
  const double iqd_eqm = m.at("eqm").at("iqd").at("full").at("mean").get<double>();
  const double iqd_raw = m.at("raw").at("iqd").at("full").at("mean").get<double>();
  const auto obs_acf = report.at("obs").at("acf").get<std::vector<double>>();
  const double acf_trend = sup_distance(m.at("trend").at("acf").get<std::vector<double>>(), obs_acf);
  const double acf_eqm = sup_distance(m.at("eqm").at("acf").get<std::vector<double>>(), obs_acf);
  const double sill_obs = winter_sill(report.at("obs").at("variograms"));
  const double sill_trend = winter_sill(m.at("trend").at("variograms"));
  const double sill_eqm = winter_sill(m.at("eqm").at("variograms"));
  const bool pass = iqd_trend < iqd_eqm && iqd_eqm < iqd_raw && acf_trend < acf_eqm &&
                    std::abs(sill_trend - sill_obs) < std::abs(sill_eqm - sill_obs) && elapsed < 600.0;
  return {pass, "mean IQD trend " + fmt(iqd_trend) + " < eqm " + fmt(iqd_eqm) + " < raw " + fmt(iqd_raw) +
                    "; ACF sup-distance trend " + fmt(acf_trend) + " vs eqm " + fmt(acf_eqm) + "; winter sill obs " +
                    fmt(sill_obs) + ", trend " + fmt(sill_trend) + ", eqm " + fmt(sill_eqm) + "; pipeline " +
                    fmt(elapsed, 3) + " s"};
}

std::map<std::string, std::string> artifact_hashes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    out[fs::relative(e.path(), root).string()] = sha256_hex(bytes);
  }
  return out;
}

Outcome criterion11() {
  const auto cfg = acceptance_config();
  if (!fs::exists(cfg.output_dir / "evaluate/report.json")) run_pipeline(cfg);
  const auto before = artifact_hashes(cfg.output_dir);
  run_pipeline(cfg);
  const auto after = artifact_hashes(cfg.output_dir);
  std::size_t differing = 0;
  for (const auto& [k, v] : before) {
    const auto it = after.find(k);
    if (it == after.end() || it->second != v) ++differing;
  }
  const bool pass = !before.empty() && differing == 0 && before.size() == after.size();
  return {pass, std::to_string(before.size()) + " artifacts re-generated by every stage, " + std::to_string(differing) +
                    " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},   {5, criterion5},  {6, criterion6},
      {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}, {11, criterion11}};
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %2d: %s - %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
