#include "stormgen/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>

#include "stormgen/error.hpp"
#include "stormgen/field_io.hpp"
#include "stormgen/stats.hpp"

namespace stormgen {

std::string_view weight_name(WeightKind w) {
  switch (w) {
    case WeightKind::kFull: return "full";
    case WeightKind::kUpperTail: return "upper_tail";
    case WeightKind::kCenter: return "center";
    case WeightKind::kLowerTail: return "lower_tail";
  }
  return "unknown";
}

std::pair<double, double> weight_window(WeightKind w, std::span<const double> g) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (w) {
    case WeightKind::kFull: return {-inf, inf};
    case WeightKind::kUpperTail: return {quantile_inverse_ecdf(g, 0.95), inf};
    case WeightKind::kCenter: return {quantile_inverse_ecdf(g, 0.45), quantile_inverse_ecdf(g, 0.55)};
    case WeightKind::kLowerTail: return {-inf, quantile_inverse_ecdf(g, 0.05)};
  }
  return {-inf, inf};
}

double iqd(std::span<const double> f_sample, std::span<const double> g_sample, WeightKind weight) {
  if (f_sample.empty() || g_sample.empty()) throw UsageError("IQD needs non-empty samples");
  std::vector<double> f(f_sample.begin(), f_sample.end()), g(g_sample.begin(), g_sample.end());
  std::sort(f.begin(), f.end());
  std::sort(g.begin(), g.end());
  const auto [lo, hi] = weight_window(weight, g);

  std::vector<double> breaks;
  breaks.reserve(f.size() + g.size() + 2);
  std::merge(f.begin(), f.end(), g.begin(), g.end(), std::back_inserter(breaks));
  if (std::isfinite(lo)) breaks.push_back(lo);
  if (std::isfinite(hi)) breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const double nf = static_cast<double>(f.size()), ng = static_cast<double>(g.size());
  std::size_t i = 0, j = 0;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double x = breaks[k];
    while (i < f.size() && f[i] <= x) ++i;
    while (j < g.size() && g[j] <= x) ++j;
    const double a = x, b = breaks[k + 1];
    // Indicator weights are constant on the open interval (a, b).
    if (b <= lo || a >= hi) continue;
    const double diff = static_cast<double>(i) / nf - static_cast<double>(j) / ng;
    total += diff * diff * (b - a);
  }
  return total;
}

double crps_ensemble(std::span<const double> x, double y) {
  const double n = static_cast<double>(x.size());
  double abs_obs = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    abs_obs += std::abs(x[i] - y);
    spread += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
  }
  return abs_obs / n - spread / (n * n);
}

double mean_crps(std::span<const double> f_sample, std::span<const double> g_sample) {
  std::vector<double> f(f_sample.begin(), f_sample.end());
  std::sort(f.begin(), f.end());
  double s = 0.0;
  for (double y : g_sample) s += crps_ensemble(f, y);
  return s / static_cast<double>(g_sample.size());
}

namespace {

void check_aligned(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw UsageError("evaluation fields must share the grid");
  if (a.n_days() != b.n_days() || !std::equal(a.dates().begin(), a.dates().end(), b.dates().begin())) {
    throw UsageError("evaluation fields must cover the same dates");
  }
}

std::vector<double> row(const Field& f, std::size_t s) {
  const auto r = f.values().row(static_cast<Eigen::Index>(s));
  return {r.begin(), r.end()};
}

}  // namespace

IqdSummary iqd_catchment(const Field& method, const Field& obs, WeightKind weight, std::size_t resamples,
                         std::uint64_t seed) {
  check_aligned(method, obs);
  IqdSummary out;
  const std::size_t n = obs.n_cells();
  if (n == 0) throw UsageError("IQD needs at least one cell");
  out.per_cell.resize(n);
  for (std::size_t s = 0; s < n; ++s) out.per_cell[s] = iqd(row(method, s), row(obs, s), weight);
  out.mean = mean(out.per_cell);

  auto engine = make_engine(seed, streams::kBootstrap);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> boot(std::max<std::size_t>(resamples, 1));
  for (double& b : boot) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += out.per_cell[pick(engine)];
    b = s / static_cast<double>(n);
  }
  std::sort(boot.begin(), boot.end());
  out.lo90 = std::min(quantile_linear(boot, 0.05), out.mean);
  out.hi90 = std::max(quantile_linear(boot, 0.95), out.mean);
  return out;
}

std::vector<double> acf_aggregated(const Field& field, int max_lag) {
  if (max_lag < 1 || static_cast<std::size_t>(max_lag) * 4 >= field.n_days()) {
    throw UsageError("ACF lag must satisfy 1 <= max_lag < n_days / 4");
  }
  const Eigen::VectorXd series = field.values().colwise().mean().transpose();
  return autocorrelation(std::span<const double>(series.data(), static_cast<std::size_t>(series.size())), max_lag);
}

std::map<std::string, std::array<EmpiricalVariogram, 12>> variogram_compare(
    const std::map<std::string, const Field*>& fields, const DistanceBins& bins) {
  std::map<std::string, std::array<EmpiricalVariogram, 12>> out;
  for (const auto& [name, f] : fields) out.emplace(name, monthly_variograms(*f, bins));
  return out;
}

EvalReport evaluate_methods(const std::map<std::string, const Field*>& methods, const Field& obs,
                            const EvalOptions& options) {
  EvalReport report;
  report.catchment_id = options.catchment_id;
  report.scale = options.scale;
  report.obs_acf = acf_aggregated(obs, options.max_lag);
  std::optional<DistanceBins> bins;
  if (options.variograms && obs.n_cells() >= 2) {
    bins = DistanceBins::for_grid(obs.grid());
    report.obs_variograms = monthly_variograms(obs, *bins);
    report.has_variograms = true;
  }
  std::uint64_t k = 0;
  for (const auto& [name, field] : methods) {
    check_aligned(*field, obs);
    MethodReport m;
    for (WeightKind w : kAllWeights) {
      m.iqd.emplace(w, iqd_catchment(*field, obs, w, options.resamples, derive_seed(options.seed, k++)));
    }
    m.acf = acf_aggregated(*field, options.max_lag);
    if (bins) {
      m.variograms = monthly_variograms(*field, *bins);
      m.has_variograms = true;
    }
    report.methods.emplace(name, std::move(m));
  }
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["catchment_id"] = catchment_id;
  j["scale"] = scale;
  j["obs"]["acf"] = obs_acf;
  if (has_variograms) {
    for (std::size_t m = 0; m < 12; ++m) j["obs"]["variograms"].push_back(obs_variograms[m]);
  }
  for (const auto& [name, r] : methods) {
    auto& jm = j["methods"][name];
    for (const auto& [w, s] : r.iqd) {
      jm["iqd"][std::string(weight_name(w))] = {{"mean", s.mean}, {"lo90", s.lo90}, {"hi90", s.hi90}};
    }
    jm["acf"] = r.acf;
    if (r.has_variograms) {
      for (std::size_t m = 0; m < 12; ++m) jm["variograms"].push_back(r.variograms[m]);
    }
  }
  return j;
}

std::string EvalReport::iqd_csv() const {
  std::ostringstream os;
  os << "catchment,scale,method,weight,mean,lo90,hi90\n";
  for (const auto& [name, r] : methods) {
    for (const auto& [w, s] : r.iqd) {
      os << catchment_id << ',' << scale << ',' << name << ',' << weight_name(w) << ',' << format_double(s.mean)
         << ',' << format_double(s.lo90) << ',' << format_double(s.hi90) << '\n';
    }
  }
  return os.str();
}

std::string EvalReport::acf_csv() const {
  std::ostringstream os;
  os << "catchment,scale,method,lag,acf\n";
  auto emit = [&](const std::string& name, const std::vector<double>& acf) {
    for (std::size_t k = 0; k < acf.size(); ++k) {
      os << catchment_id << ',' << scale << ',' << name << ',' << k + 1 << ',' << format_double(acf[k]) << '\n';
    }
  };
  emit("obs", obs_acf);
  for (const auto& [name, r] : methods) emit(name, r.acf);
  return os.str();
}

std::string EvalReport::variogram_csv() const {
  std::ostringstream os;
  os << "catchment,scale,method,month,h_km,gamma,pairs\n";
  auto emit = [&](const std::string& name, const std::array<EmpiricalVariogram, 12>& v) {
    for (std::size_t m = 0; m < 12; ++m) {
      for (const auto& b : v[m].bins) {
        os << catchment_id << ',' << scale << ',' << name << ',' << m + 1 << ',' << format_double(b.h) << ','
           << format_double(b.gamma) << ',' << b.pairs << '\n';
      }
    }
  };
  if (has_variograms) emit("obs", obs_variograms);
  for (const auto& [name, r] : methods) {
    if (r.has_variograms) emit(name, r.variograms);
  }
  return os.str();
}

}  // namespace stormgen
