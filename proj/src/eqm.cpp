#include "stormgen/eqm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "stormgen/error.hpp"
#include "stormgen/field_io.hpp"
#include "stormgen/stats.hpp"

namespace stormgen {

namespace {

double edge_slope(double h0, double h1, double m0, double m1) {
  double d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
  if (d * m0 <= 0.0) return 0.0;
  if (m0 * m1 <= 0.0 && std::abs(d) > 3.0 * std::abs(m0)) return 3.0 * m0;
  return d;
}

}  // namespace

MonotoneSpline::MonotoneSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n != y_.size() || n == 0) throw UsageError("spline needs matching, non-empty knot vectors");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) throw UsageError("spline knots must be strictly increasing");
    if (y_[i] < y_[i - 1]) throw UsageError("spline values must be nondecreasing");
  }
  d_.assign(n, 0.0);
  if (n == 1) return;
  std::vector<double> h(n - 1), m(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    m[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  if (n == 2) {
    d_[0] = d_[1] = m[0];
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (m[i - 1] * m[i] <= 0.0) {
      d_[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1], w2 = h[i] + 2.0 * h[i - 1];
      d_[i] = (w1 + w2) / (w1 / m[i - 1] + w2 / m[i]);
    }
  }
  d_[0] = edge_slope(h[0], h[1], m[0], m[1]);
  d_[n - 1] = edge_slope(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
}

MonotoneSpline MonotoneSpline::from_parts(std::vector<double> x, std::vector<double> y, std::vector<double> slopes) {
  if (x.size() != y.size() || x.size() != slopes.size()) throw IngestError("spline parts differ in length");
  MonotoneSpline s;
  s.x_ = std::move(x);
  s.y_ = std::move(y);
  s.d_ = std::move(slopes);
  return s;
}

double MonotoneSpline::operator()(double v) const {
  const std::size_t n = x_.size();
  if (n == 1) return y_[0] + (v - x_[0]);
  if (v <= x_.front()) return y_.front() + (v - x_.front()) * (y_[1] - y_[0]) / (x_[1] - x_[0]);
  if (v >= x_.back()) return y_.back() + (v - x_.back()) * (y_[n - 1] - y_[n - 2]) / (x_[n - 1] - x_[n - 2]);
  const auto it = std::upper_bound(x_.begin(), x_.end(), v);
  const std::size_t i = static_cast<std::size_t>(std::distance(x_.begin(), it)) - 1;
  const double h = x_[i + 1] - x_[i];
  const double t = (v - x_[i]) / h;
  if (t == 0.0) return y_[i];
  const double t2 = t * t, t3 = t2 * t;
  const double r = (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * d_[i] + (-2 * t3 + 3 * t2) * y_[i + 1] +
                   (t3 - t2) * h * d_[i + 1];
  return std::clamp(r, y_[i], y_[i + 1]);
}

std::vector<double> knot_grid(double step) {
  if (!(step > 0.0) || step >= 1.0) throw UsageError("knot step must lie in (0, 1)");
  std::vector<double> knots;
  for (long k = 1;; ++k) {
    const double p = std::clamp(static_cast<double>(k) * step, 0.001, 0.999);
    if (knots.empty() || p > knots.back()) knots.push_back(p);
    if (static_cast<double>(k) * step >= 0.999) break;
  }
  if (knots.front() > 0.001) knots.insert(knots.begin(), 0.001);
  return knots;
}

namespace {

MonotoneSpline build_map(std::vector<double> src, std::vector<double> tgt, std::span<const double> knots) {
  std::sort(src.begin(), src.end());
  std::sort(tgt.begin(), tgt.end());
  std::vector<double> xs, ys;
  std::vector<int> counts;
  for (double p : knots) {
    const double a = quantile_inverse_ecdf(src, p), b = quantile_inverse_ecdf(tgt, p);
    if (!xs.empty() && a == xs.back()) {
      ++counts.back();
      ys.back() += (b - ys.back()) / counts.back();
    } else {
      xs.push_back(a);
      ys.push_back(b);
      counts.push_back(1);
    }
  }
  return MonotoneSpline(std::move(xs), std::move(ys));
}

void check_alignment(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw UsageError("EQM fields must share the fine grid");
  if (a.n_days() != b.n_days() || !std::equal(a.dates().begin(), a.dates().end(), b.dates().begin())) {
    throw UsageError("EQM training fields must cover the same dates");
  }
}

}  // namespace

TransferTable eqm_train(const Field& obs_fine, const Field& rcm_regridded, double knot_step) {
  check_alignment(obs_fine, rcm_regridded);
  TransferTable table;
  table.knot_step = knot_step;
  table.knots = knot_grid(knot_step);
  table.cell_ids.assign(obs_fine.grid().ids().begin(), obs_fine.grid().ids().end());
  std::array<std::vector<std::size_t>, 12> by_month;
  for (std::size_t t = 0; t < obs_fine.n_days(); ++t) {
    by_month[static_cast<std::size_t>(month_of(obs_fine.dates()[t]) - 1)].push_back(t);
  }
  for (std::size_t m = 0; m < 12; ++m) {
    if (by_month[m].size() < kMinEqmSample) {
      throw UsageError("EQM needs at least " + std::to_string(kMinEqmSample) + " days per cell and month; month " +
                       std::to_string(m + 1) + " has " + std::to_string(by_month[m].size()));
    }
  }
  const std::size_t n = obs_fine.n_cells();
  table.splines.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t m = 0; m < 12; ++m) {
      std::vector<double> src, tgt;
      src.reserve(by_month[m].size());
      tgt.reserve(by_month[m].size());
      for (std::size_t t : by_month[m]) {
        src.push_back(rcm_regridded.values()(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)));
        tgt.push_back(obs_fine.values()(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)));
      }
      table.splines[s][m] = build_map(std::move(src), std::move(tgt), table.knots);
    }
  }
  return table;
}

Field eqm_apply(const TransferTable& table, const Field& rcm) {
  const auto& grid = rcm.grid();
  if (grid.size() != table.cell_ids.size() || !std::equal(table.cell_ids.begin(), table.cell_ids.end(), grid.ids().begin())) {
    throw UsageError("EQM table was trained on a different grid");
  }
  Eigen::MatrixXd out(rcm.values().rows(), rcm.values().cols());
  for (std::size_t t = 0; t < rcm.n_days(); ++t) {
    const auto m = static_cast<std::size_t>(month_of(rcm.dates()[t]) - 1);
    for (std::size_t s = 0; s < grid.size(); ++s) {
      const auto i = static_cast<Eigen::Index>(s), j = static_cast<Eigen::Index>(t);
      out(i, j) = table.splines[s][m](rcm.values()(i, j));
    }
  }
  return rcm.with_values(std::move(out));
}

void TransferTable::save(const std::filesystem::path& path, const std::string& grid_hash) const {
  std::string blob;
  std::vector<std::uint64_t> sizes;
  auto append = [&blob](std::span<const double> v) {
    blob.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  };
  for (const auto& cell : splines) {
    for (const auto& s : cell) {
      sizes.push_back(s.x().size());
      append(s.x());
      append(s.y());
      append(s.slopes());
    }
  }
  nlohmann::json header{{"format", "stormgen-eqm-1"},
                        {"grid_hash", grid_hash},
                        {"knot_step", knot_step},
                        {"knots", knots},
                        {"months", 12},
                        {"cell_ids", cell_ids},
                        {"segment_sizes", sizes},
                        {"layout", "per cell, per month: x[n], y[n], slope[n] as little-endian float64"}};
  write_file_atomic(path, blob);
  auto header_path = path;
  header_path.replace_extension(".json");
  write_json_atomic(header_path, header);
}

TransferTable TransferTable::load(const std::filesystem::path& path) {
  auto header_path = path;
  header_path.replace_extension(".json");
  const auto header = read_json(header_path);
  TransferTable t;
  t.knot_step = header.at("knot_step").get<double>();
  t.knots = header.at("knots").get<std::vector<double>>();
  t.cell_ids = header.at("cell_ids").get<std::vector<CellId>>();
  const auto sizes = header.at("segment_sizes").get<std::vector<std::uint64_t>>();
  if (sizes.size() != t.cell_ids.size() * 12) throw IngestError("EQM table header is inconsistent");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t offset = 0;
  auto take = [&](std::size_t n) {
    std::vector<double> v(n);
    if (offset + n * sizeof(double) > blob.size()) throw IngestError("EQM table blob is truncated");
    std::memcpy(v.data(), blob.data() + offset, n * sizeof(double));
    offset += n * sizeof(double);
    return v;
  };
  t.splines.resize(t.cell_ids.size());
  std::size_t k = 0;
  for (auto& cell : t.splines) {
    for (auto& s : cell) {
      const auto n = static_cast<std::size_t>(sizes[k++]);
      auto x = take(n);
      auto y = take(n);
      auto d = take(n);
      s = MonotoneSpline::from_parts(std::move(x), std::move(y), std::move(d));
    }
  }
  if (offset != blob.size()) throw IngestError("EQM table blob has trailing bytes");
  return t;
}

}  // namespace stormgen
