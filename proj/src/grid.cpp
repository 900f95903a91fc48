#include "stormgen/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "stormgen/error.hpp"

namespace stormgen {

double intersection_area(const Rect& a, const Rect& b) {
  const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

double distance_km(Point a, Point b) {
  return std::hypot(a.easting_km - b.easting_km, a.northing_km - b.northing_km);
}

GridSpec::GridSpec(std::vector<CellId> ids, std::vector<Point> centers,
                   std::vector<Covariates> covariates, std::vector<Rect> cells)
    : ids_(std::move(ids)),
      centers_(std::move(centers)),
      covariates_(std::move(covariates)),
      cells_(std::move(cells)) {
  const std::size_t n = ids_.size();
  if (centers_.size() != n || covariates_.size() != n || cells_.size() != n) {
    throw IngestError("grid: ids, centers, covariates and cells differ in length");
  }
  lookup_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!lookup_.emplace(ids_[i], i).second) {
      throw IngestError("grid: duplicate cell id " + std::to_string(ids_[i]));
    }
    const auto& c = covariates_[i];
    if (!std::isfinite(c.lat_deg) || !std::isfinite(c.lon_deg) || !std::isfinite(c.elev_m)) {
      throw IngestError("grid: cell " + std::to_string(ids_[i]) + " has a missing covariate");
    }
    if (!(cells_[i].width() > 0.0) || !(cells_[i].height() > 0.0)) {
      throw IngestError("grid: cell " + std::to_string(ids_[i]) + " has a degenerate polygon");
    }
  }
}

std::optional<std::size_t> GridSpec::find(CellId id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t GridSpec::index_of(CellId id) const {
  auto i = find(id);
  if (!i) throw UsageError("grid: unknown cell id " + std::to_string(id));
  return *i;
}

GridSpec GridSpec::subset(std::span<const std::size_t> indices) const {
  std::vector<CellId> ids;
  std::vector<Point> centers;
  std::vector<Covariates> cov;
  std::vector<Rect> cells;
  for (std::size_t i : indices) {
    ids.push_back(ids_.at(i));
    centers.push_back(centers_[i]);
    cov.push_back(covariates_[i]);
    cells.push_back(cells_[i]);
  }
  return GridSpec(std::move(ids), std::move(centers), std::move(cov), std::move(cells));
}

GridSpec GridSpec::with_covariates(std::vector<Covariates> covariates) const {
  return GridSpec(ids_, centers_, std::move(covariates), cells_);
}

double GridSpec::diameter_km() const {
  double best = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = i + 1; j < size(); ++j) {
      best = std::max(best, distance_km(centers_[i], centers_[j]));
    }
  }
  return best;
}

Eigen::MatrixXd GridSpec::distance_matrix() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    d(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      d(i, j) = d(j, i) = distance_km(centers_[i], centers_[j]);
    }
  }
  return d;
}

bool GridSpec::operator==(const GridSpec& o) const {
  if (ids_ != o.ids_) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto &a = covariates_[i], &b = o.covariates_[i];
    const auto &r = cells_[i], &s = o.cells_[i];
    if (centers_[i].easting_km != o.centers_[i].easting_km ||
        centers_[i].northing_km != o.centers_[i].northing_km || a.lat_deg != b.lat_deg ||
        a.lon_deg != b.lon_deg || a.elev_m != b.elev_m || r.x0 != s.x0 || r.x1 != s.x1 ||
        r.y0 != s.y0 || r.y1 != s.y1) {
      return false;
    }
  }
  return true;
}

void validate_time_axis(std::span<const Date> dates) {
  for (std::size_t t = 1; t < dates.size(); ++t) {
    const auto step = (dates[t] - dates[t - 1]).count();
    if (step <= 0) {
      throw IngestError("non-monotone time axis at " + format_date(dates[t]) + " (record " +
                        std::to_string(t + 1) + ")");
    }
    if (step != 1) {
      throw IngestError("time axis is not daily: gap after " + format_date(dates[t - 1]));
    }
  }
}

Field::Field(GridPtr grid, std::vector<Date> dates, Eigen::MatrixXd values)
    : grid_(std::move(grid)), dates_(std::move(dates)), values_(std::move(values)) {
  if (!grid_) throw UsageError("field: null grid");
  if (static_cast<std::size_t>(values_.rows()) != grid_->size() ||
      static_cast<std::size_t>(values_.cols()) != dates_.size()) {
    throw IngestError("field: dimension mismatch (" + std::to_string(values_.rows()) + "x" +
                      std::to_string(values_.cols()) + " values for " +
                      std::to_string(grid_->size()) + " cells and " +
                      std::to_string(dates_.size()) + " dates)");
  }
  validate_time_axis(dates_);
}

Field Field::slice(Date first, Date last) const {
  auto lo = std::lower_bound(dates_.begin(), dates_.end(), first);
  auto hi = std::upper_bound(dates_.begin(), dates_.end(), last);
  if (lo >= hi) {
    throw UsageError("field: no dates in window " + format_date(first) + ".." + format_date(last));
  }
  const auto start = static_cast<Eigen::Index>(lo - dates_.begin());
  const auto count = static_cast<Eigen::Index>(hi - lo);
  return Field(grid_, std::vector<Date>(lo, hi), values_.middleCols(start, count));
}

Field Field::select_cells(std::span<const std::size_t> indices, GridPtr subgrid) const {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(indices.size()), values_.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    v.row(static_cast<Eigen::Index>(k)) = values_.row(static_cast<Eigen::Index>(indices[k]));
  }
  return Field(std::move(subgrid), dates_, std::move(v));
}

Field Field::with_values(Eigen::MatrixXd values) const {
  return Field(grid_, dates_, std::move(values));
}

OverlapMap::OverlapMap(std::vector<CellId> coarse_ids, std::size_t n_fine)
    : by_coarse_(coarse_ids.size()),
      largest_(n_fine),
      largest_area_(n_fine, 0.0),
      coarse_ids_(std::move(coarse_ids)) {}

void OverlapMap::add(std::size_t coarse, std::size_t fine, double area_km2) {
  if (!(area_km2 >= 0.0)) throw IngestError("overlap: negative or NaN area");
  if (area_km2 == 0.0) return;
  by_coarse_.at(coarse).push_back({fine, area_km2});
  auto& best = largest_.at(fine);
  if (!best || area_km2 > largest_area_[fine] ||
      (area_km2 == largest_area_[fine] && coarse_ids_[coarse] < coarse_ids_[*best])) {
    best = coarse;
    largest_area_[fine] = area_km2;
  }
}

OverlapMap OverlapMap::build(const GridSpec& fine, const GridSpec& coarse) {
  OverlapMap map({coarse.ids().begin(), coarse.ids().end()}, fine.size());
  for (std::size_t r = 0; r < coarse.size(); ++r) {
    const Rect& c = coarse.cell(r);
    for (std::size_t k = 0; k < fine.size(); ++k) {
      const double a = intersection_area(c, fine.cell(k));
      if (a > 0.0) map.add(r, k, a);
    }
  }
  return map;
}

OverlapMap OverlapMap::from_triples(const GridSpec& fine, const GridSpec& coarse,
                                    std::span<const std::tuple<CellId, CellId, double>> triples) {
  OverlapMap map({coarse.ids().begin(), coarse.ids().end()}, fine.size());
  for (const auto& [cid, fid, area] : triples) {
    auto r = coarse.find(cid);
    auto k = fine.find(fid);
    if (!r) throw IngestError("overlap: unknown coarse id " + std::to_string(cid));
    if (!k) throw IngestError("overlap: unknown fine id " + std::to_string(fid));
    map.add(*r, *k, area);
  }
  for (std::size_t r = 0; r < coarse.size(); ++r) {
    double total = 0.0;
    for (const auto& e : map.overlaps(r)) total += e.area_km2;
    const double cap = coarse.cell(r).area();
    if (total > cap * (1.0 + 1e-9)) {
      throw IngestError("overlap: coarse cell " + std::to_string(coarse.id(r)) +
                        " overlaps exceed its area");
    }
  }
  return map;
}

Field upscale(const Field& fine, GridPtr coarse_grid, const OverlapMap& overlap) {
  const std::size_t n_coarse = coarse_grid->size();
  if (overlap.n_coarse() != n_coarse || overlap.n_fine() != fine.n_cells()) {
    throw UsageError("upscale: overlap map does not match the grids");
  }
  std::string empty;
  for (std::size_t r = 0; r < n_coarse; ++r) {
    if (overlap.overlaps(r).empty()) {
      empty += (empty.empty() ? "" : ", ") + std::to_string(coarse_grid->id(r));
    }
  }
  if (!empty.empty()) throw UsageError("upscale: coarse cells with zero overlap: " + empty);

  const auto& x = fine.values();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_coarse), x.cols());
  for (std::size_t r = 0; r < n_coarse; ++r) {
    const auto entries = overlap.overlaps(r);
    double total = 0.0;
    for (const auto& e : entries) total += e.area_km2;
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(x.cols());
    for (const auto& e : entries) acc += e.area_km2 * x.row(static_cast<Eigen::Index>(e.fine));
    out.row(static_cast<Eigen::Index>(r)) = acc / total;
  }
  return Field(std::move(coarse_grid), {fine.dates().begin(), fine.dates().end()}, std::move(out));
}

GridSpec upscale_covariates(const GridSpec& fine, const GridSpec& coarse, const OverlapMap& overlap) {
  std::vector<Covariates> cov(coarse.size());
  for (std::size_t r = 0; r < coarse.size(); ++r) {
    double total = 0.0, lat = 0.0, lon = 0.0, elev = 0.0;
    for (const auto& e : overlap.overlaps(r)) {
      const auto& c = fine.covariates(e.fine);
      total += e.area_km2;
      lat += e.area_km2 * c.lat_deg;
      lon += e.area_km2 * c.lon_deg;
      elev += e.area_km2 * c.elev_m;
    }
    if (total <= 0.0) {
      throw UsageError("upscale: coarse cell " + std::to_string(coarse.id(r)) + " has zero overlap");
    }
    cov[r] = {lat / total, lon / total, elev / total};
  }
  return coarse.with_covariates(std::move(cov));
}

std::vector<std::size_t> nearest_neighbors(const GridSpec& coarse, const GridSpec& fine) {
  if (coarse.empty()) throw UsageError("nearest_neighbor_regrid: empty coarse grid");
  std::vector<std::size_t> nn(fine.size());
  for (std::size_t k = 0; k < fine.size(); ++k) {
    const Point p = fine.center(k);
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < coarse.size(); ++r) {
      const double dx = coarse.center(r).easting_km - p.easting_km;
      const double dy = coarse.center(r).northing_km - p.northing_km;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best_d2 || (d2 == best_d2 && coarse.id(r) < coarse.id(best))) {
        best = r;
        best_d2 = d2;
      }
    }
    nn[k] = best;
  }
  return nn;
}

Field nearest_neighbor_regrid(const Field& coarse, GridPtr fine_grid) {
  const auto nn = nearest_neighbors(coarse.grid(), *fine_grid);
  Eigen::MatrixXd v(static_cast<Eigen::Index>(nn.size()), coarse.values().cols());
  for (std::size_t k = 0; k < nn.size(); ++k) {
    v.row(static_cast<Eigen::Index>(k)) = coarse.values().row(static_cast<Eigen::Index>(nn[k]));
  }
  return Field(std::move(fine_grid), {coarse.dates().begin(), coarse.dates().end()}, std::move(v));
}

std::vector<std::size_t> catchment_cells(const GridSpec& fine, const GridSpec& coarse,
                                         const OverlapMap& overlap,
                                         std::span<const CellId> coarse_ids) {
  std::set<std::size_t> wanted;
  for (CellId id : coarse_ids) wanted.insert(coarse.index_of(id));
  std::vector<std::size_t> cells;
  for (std::size_t k = 0; k < fine.size(); ++k) {
    auto r = overlap.largest(k);
    if (r && wanted.count(*r)) cells.push_back(k);
  }
  return cells;
}

}  // namespace stormgen
