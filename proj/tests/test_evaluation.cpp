#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <random>

#include "stormgen/arma.hpp"
#include "stormgen/error.hpp"
#include "stormgen/evaluation.hpp"
#include "stormgen/stats.hpp"
#include "support.hpp"

using namespace stormgen;
using namespace testing_support;

namespace {

double shift_iqd(double delta) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [delta](double x) {
        const double d = normal_cdf(x) - normal_cdf(x - delta);
        return d * d;
      },
      -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15, 1e-12);
}

double brute_iqd(std::vector<double> f, std::vector<double> g) {
  std::sort(f.begin(), f.end());
  std::sort(g.begin(), g.end());
  const double lo = std::min(f.front(), g.front()), hi = std::max(f.back(), g.back());
  const int n = 200000;
  const double h = (hi - lo) / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (i + 0.5) * h;
    const double ff = static_cast<double>(std::upper_bound(f.begin(), f.end(), x) - f.begin()) / static_cast<double>(f.size());
    const double gg = static_cast<double>(std::upper_bound(g.begin(), g.end(), x) - g.begin()) / static_cast<double>(g.size());
    s += (ff - gg) * (ff - gg) * h;
  }
  return s;
}

}  // namespace

TEST_CASE("IQD closed cases") {
  const auto f = normal_sample(500, 1);
  CHECK(iqd(f, f) == 0.0);
  CHECK(iqd(std::vector<double>{0.0}, std::vector<double>{1.0}) == 1.0);
  CHECK(iqd(std::vector<double>{0.0, 1.0}, std::vector<double>{0.0}) == doctest::Approx(0.25));
  CHECK_THROWS_AS(iqd(std::vector<double>{}, f), UsageError);
}

TEST_CASE("IQD agrees with brute-force integration and is symmetric unweighted") {
  const auto f = normal_sample(300, 2, 0.3, 1.2);
  const auto g = normal_sample(200, 3);
  CHECK(iqd(f, g) == doctest::Approx(brute_iqd(f, g)).epsilon(1e-4));
  CHECK(iqd(f, g) == doctest::Approx(iqd(g, f)).epsilon(1e-12));
}

TEST_CASE("weighted IQD") {
  const auto f = normal_sample(2000, 4, 0.5, 1.0);
  const auto g = normal_sample(2000, 5);
  const double full = iqd(f, g);
  for (auto w : kAllWeights) {
    const double v = iqd(f, g, w);
    CHECK(v >= 0.0);
    CHECK(v <= full + 1e-15);
  }
  std::vector<double> gs = g;
  std::sort(gs.begin(), gs.end());
  const auto upper = weight_window(WeightKind::kUpperTail, gs);
  CHECK(upper.first == quantile_inverse_ecdf(gs, 0.95));
  const auto center = weight_window(WeightKind::kCenter, gs);
  CHECK(center.first == quantile_inverse_ecdf(gs, 0.45));
  CHECK(center.second == quantile_inverse_ecdf(gs, 0.55));
  CHECK(weight_window(WeightKind::kLowerTail, gs).second == quantile_inverse_ecdf(gs, 0.05));
  CHECK(weight_name(WeightKind::kUpperTail) != weight_name(WeightKind::kLowerTail));
}

TEST_CASE("Gaussian IQD matches quadrature") {
  const auto a = normal_sample(100000, 6, 0.0, 1.0);
  const auto b = normal_sample(100000, 7, 1.0, 1.0);
  CHECK(std::abs(iqd(a, b) - shift_iqd(1.0)) <= 0.01);
}

TEST_CASE("mean CRPS differs from IQD by a term depending only on the observations") {
  const auto g = normal_sample(400, 8);
  double offset = std::numeric_limits<double>::quiet_NaN();
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto f = normal_sample(300, 100 + s, 0.2 * static_cast<double>(s), 1.0 + 0.1 * static_cast<double>(s));
    const double d = mean_crps(f, g) - iqd(f, g);
    if (std::isnan(offset)) offset = d;
    CHECK(d == doctest::Approx(offset).epsilon(1e-9));
  }
  std::vector<double> sorted{0.0, 1.0};
  CHECK(crps_ensemble(sorted, 0.0) == doctest::Approx(0.25));
  CHECK(crps_ensemble(std::vector<double>{2.0}, 5.0) == doctest::Approx(3.0));
}

TEST_CASE("catchment IQD and bootstrap") {
  const auto grid = regular_grid(3, 3, 2.0);
  const auto d = days("2000-01-01", "2000-12-31");
  const Field obs(grid, d, normal_matrix(9, static_cast<Eigen::Index>(d.size()), 9));
  const auto same = iqd_catchment(obs, obs, WeightKind::kFull, 1000, 1);
  CHECK(same.mean == 0.0);
  CHECK(same.lo90 == 0.0);
  CHECK(same.hi90 == 0.0);

  const Eigen::MatrixXd row = obs.values().row(0).replicate(9, 1);
  const Field flat(grid, d, row);
  const Field shifted(grid, d, (row.array() + 1.0).matrix());
  const auto off = iqd_catchment(shifted, flat, WeightKind::kFull, 1000, 1);
  for (double v : off.per_cell) CHECK(v == doctest::Approx(off.per_cell[0]).epsilon(1e-12));
  CHECK(off.hi90 - off.lo90 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(off.lo90 <= off.mean);
  CHECK(off.mean <= off.hi90);

  const auto a = iqd_catchment(Field(grid, d, normal_matrix(9, static_cast<Eigen::Index>(d.size()), 10)), obs,
                               WeightKind::kFull, 1000, 5);
  const auto b = iqd_catchment(Field(grid, d, normal_matrix(9, static_cast<Eigen::Index>(d.size()), 10)), obs,
                               WeightKind::kFull, 1000, 5);
  CHECK(a.lo90 == b.lo90);
  CHECK(a.hi90 == b.hi90);
}

TEST_CASE("bootstrap interval covers a two-population mixture mean") {
  const double ia = shift_iqd(0.5), ib = shift_iqd(1.0);
  const int n_days = 400;
  // Expected eCDF IQD adds the variance of both eCDFs, 1/sqrt(pi) per sample size.
  const double bias = 2.0 / std::sqrt(std::numbers::pi) / n_days;
  const double target = 0.5 * (ia + ib) + bias;
  const int reps = 200, cells = 100;
  const auto grid = regular_grid(10, 10, 1.0);
  const auto d = days("2000-01-01", "2001-02-03");
  REQUIRE(d.size() == static_cast<std::size_t>(n_days));
  std::mt19937_64 rng(77);
  std::bernoulli_distribution coin(0.5);
  int covered = 0;
  for (int r = 0; r < reps; ++r) {
    Eigen::MatrixXd obs = normal_matrix(cells, n_days, 1000 + static_cast<std::uint64_t>(r));
    Eigen::MatrixXd method = normal_matrix(cells, n_days, 5000 + static_cast<std::uint64_t>(r));
    for (Eigen::Index k = 0; k < cells; ++k) method.row(k).array() += coin(rng) ? 0.5 : 1.0;
    const auto s = iqd_catchment(Field(grid, d, method), Field(grid, d, obs), WeightKind::kFull, 2000,
                                 static_cast<std::uint64_t>(r));
    if (s.lo90 <= target && target <= s.hi90) ++covered;
  }
  CHECK(covered >= static_cast<int>(0.85 * reps));
}

TEST_CASE("aggregated autocorrelation") {
  const auto grid = regular_grid(3, 3, 2.0);
  SUBCASE("white noise band") {
    const auto d = days("2000-01-01", "2010-12-31");
    const auto n = static_cast<Eigen::Index>(d.size());
    const auto acf = acf_aggregated(Field(grid, d, normal_matrix(9, n, 12)), 30);
    int inside = 0;
    for (double r : acf) inside += std::abs(r) < 2.0 / std::sqrt(static_cast<double>(n));
    CHECK(inside >= 27);
  }
  SUBCASE("replicated AR(1)") {
    const auto d = days("2000-01-01", "2019-03-31");
    REQUIRE(d.size() >= 7000);
    ArmaModel ar;
    ar.ar = {0.6};
    const auto x = simulate_arma(ar, d.size(), 13);
    Eigen::MatrixXd v(9, static_cast<Eigen::Index>(d.size()));
    for (Eigen::Index t = 0; t < v.cols(); ++t) v.col(t).setConstant(x[static_cast<std::size_t>(t)]);
    const auto acf = acf_aggregated(Field(grid, d, v), 5);
    CHECK(std::abs(acf[0] - 0.6) <= 0.03);
    const auto single = autocorrelation(x, 5);
    for (std::size_t k = 0; k < 5; ++k) CHECK(acf[k] == doctest::Approx(single[k]).epsilon(1e-12));
  }
  SUBCASE("lag limit") {
    const auto d = days("2000-01-01", "2000-04-09");
    const Field f(grid, d, normal_matrix(9, 100, 1));
    CHECK_THROWS_AS(acf_aggregated(f, 25), UsageError);
    CHECK_NOTHROW(acf_aggregated(f, 24));
  }
}

TEST_CASE("variogram comparison") {
  const auto grid = regular_grid(5, 5, 2.0);
  const auto d = days("2000-01-01", "2001-12-31");
  const auto n = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd a = normal_matrix(25, n, 14);
  for (Eigen::Index t = 0; t < n; ++t) {
    const int m = month_of(d[static_cast<std::size_t>(t)]);
    if (m == 12 || m <= 2) a.col(t) *= 2.0;
  }
  const Field fa(grid, d, a);
  const Field fb(grid, d, (a.array() + 3.0).matrix());
  const auto out = variogram_compare({{"a", &fa}, {"b", &fb}, {"c", &fa}}, DistanceBins::for_grid(*grid));
  for (std::size_t m = 0; m < 12; ++m) {
    REQUIRE(out.at("a")[m].bins.size() == out.at("b")[m].bins.size());
    for (std::size_t j = 0; j < out.at("a")[m].bins.size(); ++j) {
      CHECK(out.at("a")[m].bins[j].gamma == doctest::Approx(out.at("b")[m].bins[j].gamma).epsilon(1e-12));
      CHECK(out.at("a")[m].bins[j].gamma == out.at("c")[m].bins[j].gamma);
    }
  }
  const auto& jan = out.at("a")[0].bins;
  const auto& jul = out.at("a")[6].bins;
  CHECK(jan.back().gamma > jul.back().gamma);
}

TEST_CASE("evaluation report tables") {
  const auto grid = regular_grid(3, 3, 2.0);
  const auto d = days("2000-01-01", "2001-12-31");
  const auto n = static_cast<Eigen::Index>(d.size());
  const Field obs(grid, d, normal_matrix(9, n, 15));
  const Field m1(grid, d, normal_matrix(9, n, 16));
  const Field m2(grid, d, (normal_matrix(9, n, 17).array() + 0.5).matrix());
  EvalOptions opts;
  opts.resamples = 200;
  opts.catchment_id = "c1";
  const auto rep = evaluate_methods({{"m1", &m1}, {"m2", &m2}}, obs, opts);
  CHECK(rep.methods.at("m1").iqd.at(WeightKind::kFull).mean < rep.methods.at("m2").iqd.at(WeightKind::kFull).mean);
  const auto csv = rep.iqd_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 4);
  CHECK(csv.find("c1,fine,m2,") != std::string::npos);
  const auto acf = rep.acf_csv();
  CHECK(std::count(acf.begin(), acf.end(), '\n') == 1 + 3 * 30);
  const auto j = rep.to_json();
  CHECK(j.at("methods").contains("m1"));
  for (const auto& [name, m] : rep.methods) {
    for (const auto& [w, s] : m.iqd) {
      CHECK(s.mean >= 0.0);
      CHECK(s.lo90 <= s.mean);
      CHECK(s.mean <= s.hi90);
    }
  }
}
