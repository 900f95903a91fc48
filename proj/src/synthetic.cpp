#include "stormgen/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "stormgen/downscaler.hpp"
#include "stormgen/error.hpp"
#include "stormgen/stats.hpp"

namespace stormgen {

namespace {

double hill(double x, double y, double extent) {
  const double dx = x - 0.35 * extent, dy = y - 0.6 * extent, s = 0.3 * extent;
  return 900.0 * std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
}

std::vector<double> ar1_series(double phi, std::size_t n, std::uint64_t seed) {
  ArmaModel m;
  m.ar = {phi};
  m.innovation_variance = 1.0 - phi * phi;
  return simulate_arma(m, n, seed);
}

}  // namespace

GridSpec make_regular_grid(int nx, int ny, double cell_km, CellId first_id) {
  if (nx <= 0 || ny <= 0 || !(cell_km > 0.0)) throw UsageError("grid dimensions must be positive");
  const double extent = std::max(nx, ny) * cell_km;
  std::vector<CellId> ids;
  std::vector<Point> centers;
  std::vector<Covariates> cov;
  std::vector<Rect> cells;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Point c{(i + 0.5) * cell_km, (j + 0.5) * cell_km};
      ids.push_back(first_id + j * nx + i);
      centers.push_back(c);
      cov.push_back({63.0 + c.northing_km / 111.0,
                     10.0 + c.easting_km / (111.0 * std::cos(63.0 * std::numbers::pi / 180.0)),
                     hill(c.easting_km, c.northing_km, extent)});
      cells.push_back(Rect::centered(c, cell_km, cell_km));
    }
  }
  return {std::move(ids), std::move(centers), std::move(cov), std::move(cells)};
}

nlohmann::json WorldSpec::to_json() const {
  return {{"coarse_nx", coarse_nx},
          {"coarse_ny", coarse_ny},
          {"fine_per_coarse", fine_per_coarse},
          {"coarse_km", coarse_km},
          {"train", {train_start, train_end}},
          {"test", {test_start, test_end}},
          {"mean", mean},
          {"log_sd", log_sd},
          {"mean_change", mean_change},
          {"ar_phi", ar_phi},
          {"eta_variance", eta_variance},
          {"eta_asymmetry", eta_asymmetry},
          {"nu", nu},
          {"range_amplitude", range_amplitude},
          {"rcm_mean_offset", rcm_mean_offset},
          {"rcm_sd_factor", rcm_sd_factor},
          {"rcm_phi", rcm_phi},
          {"rcm_common_fraction", rcm_common_fraction},
          {"noise_scale", noise_scale},
          {"seed", seed}};
}

WorldSpec WorldSpec::from_json(const nlohmann::json& j) {
  WorldSpec s;
  s.coarse_nx = j.value("coarse_nx", s.coarse_nx);
  s.coarse_ny = j.value("coarse_ny", s.coarse_ny);
  s.fine_per_coarse = j.value("fine_per_coarse", s.fine_per_coarse);
  s.coarse_km = j.value("coarse_km", s.coarse_km);
  if (j.contains("train")) {
    s.train_start = j["train"].at(0).get<std::string>();
    s.train_end = j["train"].at(1).get<std::string>();
  }
  if (j.contains("test")) {
    s.test_start = j["test"].at(0).get<std::string>();
    s.test_end = j["test"].at(1).get<std::string>();
  }
  s.mean = j.value("mean", s.mean);
  s.log_sd = j.value("log_sd", s.log_sd);
  s.mean_change = j.value("mean_change", s.mean_change);
  s.ar_phi = j.value("ar_phi", s.ar_phi);
  s.eta_variance = j.value("eta_variance", s.eta_variance);
  s.eta_asymmetry = j.value("eta_asymmetry", s.eta_asymmetry);
  if (j.contains("nu")) s.nu = j["nu"].get<VariogramParams>();
  s.range_amplitude = j.value("range_amplitude", s.range_amplitude);
  s.rcm_mean_offset = j.value("rcm_mean_offset", s.rcm_mean_offset);
  s.rcm_sd_factor = j.value("rcm_sd_factor", s.rcm_sd_factor);
  s.rcm_phi = j.value("rcm_phi", s.rcm_phi);
  s.rcm_common_fraction = j.value("rcm_common_fraction", s.rcm_common_fraction);
  s.noise_scale = j.value("noise_scale", s.noise_scale);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

void WorldSpec::validate() const {
  if (std::abs(ar_phi) >= 1.0 || std::abs(rcm_phi) >= 1.0) throw UsageError("AR coefficients must lie in (-1, 1)");
  if (rcm_common_fraction < 0.0 || rcm_common_fraction > 1.0) throw UsageError("rcm_common_fraction must lie in [0, 1]");
  if (!(eta_variance > 0.0) || std::abs(eta_asymmetry) >= 1.0) throw UsageError("invalid eta parameters");
  if (!(rcm_sd_factor > 0.0) || noise_scale < 0.0) throw UsageError("invalid noise scales");
  if (fine_per_coarse <= 0 || coarse_nx <= 0 || coarse_ny <= 0 || !(coarse_km > 0.0))
    throw UsageError("world grid dimensions must be positive");
}

World generate_world(const WorldSpec& spec) {
  spec.validate();
  World w;
  const int k = spec.fine_per_coarse;
  const auto coarse = make_regular_grid(spec.coarse_nx, spec.coarse_ny, spec.coarse_km);
  w.fine = std::make_shared<const GridSpec>(make_regular_grid(spec.coarse_nx * k, spec.coarse_ny * k, spec.coarse_km / k));
  w.overlap = OverlapMap::build(*w.fine, coarse);
  w.coarse = std::make_shared<const GridSpec>(upscale_covariates(*w.fine, coarse, w.overlap));

  const Date train0 = parse_date(spec.train_start), train1 = parse_date(spec.train_end);
  const Date test0 = parse_date(spec.test_start), test1 = parse_date(spec.test_end);
  if (!(train0 <= train1 && test0 <= test1)) throw UsageError("world periods must be non-empty");
  if (test0 != train1 + std::chrono::days{1}) throw UsageError("world test period must start the day after training ends");
  w.train_dates = daily_range(train0, train1);
  w.test_dates = daily_range(test0, test1);
  std::vector<Date> all = w.train_dates;
  all.insert(all.end(), w.test_dates.begin(), w.test_dates.end());
  const auto n_train = static_cast<Eigen::Index>(w.train_dates.size());
  const auto n_test = static_cast<Eigen::Index>(w.test_dates.size());

  const int ref = year_of(train0);
  MomentCoefficients truth;
  truth.mean = spec.mean;
  truth.log_sd = spec.log_sd;
  truth.normalizer = CovariateNormalizer::from_grid(*w.fine);
  truth.reference_year = ref;
  truth.include_trend = true;
  w.obs_truth = truth;

  const CalendarIndex train_cal(w.train_dates, ref), test_cal(w.test_dates, ref);
  {
    const auto a = predictor_parts(truth, *w.fine, train_cal);
    const auto b = predictor_parts(truth, *w.fine, test_cal);
    const double modeled = (b.mean_seasonal + b.mean_trend).mean() - (a.mean_seasonal + a.mean_trend).mean();
    w.test_offset = spec.mean_change - modeled;
  }
  MomentCoefficients test_truth = truth;
  test_truth.mean[0] += w.test_offset;

  auto& rt = w.residual_truth;
  rt.catchment_id = "world";
  rt.arma.ar = {spec.ar_phi};
  rt.arma.innovation_variance = 1.0 - spec.ar_phi * spec.ar_phi;
  rt.marginals.resize(365);
  rt.variogram.resize(365);
  const double a = spec.eta_asymmetry;
  for (int d = 1; d <= 365; ++d) {
    const double c = std::cos(2.0 * std::numbers::pi * d / 365.0);
    const double s = std::sqrt(spec.eta_variance / (1.0 + a * a * c * c * (3.0 - 8.0 / std::numbers::pi)));
    SplitNormal sn{0.0, s * (1.0 + a * c), s * (1.0 - a * c)};
    sn.location = -std::sqrt(2.0 / std::numbers::pi) * (sn.upper - sn.lower);
    rt.marginals[static_cast<std::size_t>(d - 1)] = sn;
    rt.variogram[static_cast<std::size_t>(d - 1)] = {spec.nu.nugget, spec.nu.sill, spec.nu.range + spec.range_amplitude * c};
  }

  const auto n_fine = static_cast<Eigen::Index>(w.fine->size());
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n_fine, n_train + n_test);
  if (spec.noise_scale > 0.0) {
    z = spec.noise_scale * simulate_residuals(rt, *w.fine, all, derive_seed(spec.seed, streams::kWorldTemporal));
  }
  Eigen::MatrixXd obs(n_fine, n_train + n_test);
  {
    const auto s0 = predict(truth, *w.fine, train_cal);
    const auto s1 = predict(test_truth, *w.fine, test_cal);
    obs.leftCols(n_train) = s0.mean.array() + s0.sd.array() * z.leftCols(n_train).array();
    obs.rightCols(n_test) = s1.mean.array() + s1.sd.array() * z.rightCols(n_test).array();
  }
  w.obs_fine = Field(w.fine, all, std::move(obs));
  w.obs_coarse = upscale(w.obs_fine, w.coarse, w.overlap);

  MomentCoefficients rcm = truth;
  rcm.mean[0] += spec.rcm_mean_offset;
  rcm.log_sd[0] += std::log(spec.rcm_sd_factor);
  w.rcm_truth = rcm;
  MomentCoefficients rcm_test = rcm;
  rcm_test.mean[0] += w.test_offset;

  const auto n_coarse = static_cast<Eigen::Index>(w.coarse->size());
  const auto n_all = all.size();
  Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(n_coarse, static_cast<Eigen::Index>(n_all));
  if (spec.noise_scale > 0.0) {
    const auto common = ar1_series(spec.rcm_phi, n_all, derive_seed(spec.seed, streams::kWorldRcmCommon));
    const double wc = std::sqrt(spec.rcm_common_fraction), wl = std::sqrt(1.0 - spec.rcm_common_fraction);
    for (Eigen::Index r = 0; r < n_coarse; ++r) {
      const auto local =
          ar1_series(spec.rcm_phi, n_all, derive_seed(spec.seed, streams::kWorldRcmLocal, static_cast<std::uint64_t>(r)));
      for (std::size_t t = 0; t < n_all; ++t) {
        noise(r, static_cast<Eigen::Index>(t)) = spec.noise_scale * (wc * common[t] + wl * local[t]);
      }
    }
  }
  Eigen::MatrixXd rcm_values(n_coarse, static_cast<Eigen::Index>(n_all));
  {
    const auto s0 = predict(rcm, *w.coarse, train_cal);
    const auto s1 = predict(rcm_test, *w.coarse, test_cal);
    rcm_values.leftCols(n_train) = s0.mean.array() + s0.sd.array() * noise.leftCols(n_train).array();
    rcm_values.rightCols(n_test) = s1.mean.array() + s1.sd.array() * noise.rightCols(n_test).array();
  }
  w.rcm_coarse = Field(w.coarse, std::move(all), std::move(rcm_values));
  return w;
}

}  // namespace stormgen
