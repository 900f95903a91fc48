#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stormgen/calendar.hpp"

namespace stormgen {

using CellId = std::int64_t;

struct Point {
  double easting_km = 0.0;
  double northing_km = 0.0;
};

struct Covariates {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  double elev_m = 0.0;
};

/// Axis-aligned cell footprint in projected km.
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  static Rect centered(Point c, double width_km, double height_km) {
    return {c.easting_km - 0.5 * width_km, c.northing_km - 0.5 * height_km,
            c.easting_km + 0.5 * width_km, c.northing_km + 0.5 * height_km};
  }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
};

double intersection_area(const Rect& a, const Rect& b);
double distance_km(Point a, Point b);

/// Rectangular-cell grid geometry with geographic covariates.
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(std::vector<CellId> ids, std::vector<Point> centers, std::vector<Covariates> covariates,
           std::vector<Rect> cells);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  CellId id(std::size_t i) const { return ids_[i]; }
  Point center(std::size_t i) const { return centers_[i]; }
  const Covariates& covariates(std::size_t i) const { return covariates_[i]; }
  const Rect& cell(std::size_t i) const { return cells_[i]; }
  std::span<const CellId> ids() const { return ids_; }
  std::span<const Point> centers() const { return centers_; }
  std::span<const Covariates> all_covariates() const { return covariates_; }
  std::span<const Rect> cells() const { return cells_; }

  std::optional<std::size_t> find(CellId id) const;
  std::size_t index_of(CellId id) const;

  GridSpec subset(std::span<const std::size_t> indices) const;
  GridSpec with_covariates(std::vector<Covariates> covariates) const;

  /// Largest center-to-center distance.
  double diameter_km() const;
  /// Dense symmetric matrix of center distances.
  Eigen::MatrixXd distance_matrix() const;

  bool operator==(const GridSpec& other) const;

 private:
  std::vector<CellId> ids_;
  std::vector<Point> centers_;
  std::vector<Covariates> covariates_;
  std::vector<Rect> cells_;
  std::unordered_map<CellId, std::size_t> lookup_;
};

using GridPtr = std::shared_ptr<const GridSpec>;

/// Daily temperature field (cells x days, degC) on a grid. Column t holds the
/// spatial field of day t, so per-day access is contiguous.
class Field {
 public:
  Field() = default;
  Field(GridPtr grid, std::vector<Date> dates, Eigen::MatrixXd values);

  const GridSpec& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const Date> dates() const { return dates_; }
  const Eigen::MatrixXd& values() const { return values_; }
  std::size_t n_cells() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t n_days() const { return static_cast<std::size_t>(values_.cols()); }

  /// Inclusive date window; throws UsageError when empty.
  Field slice(Date first, Date last) const;
  Field select_cells(std::span<const std::size_t> indices, GridPtr subgrid) const;
  Field with_values(Eigen::MatrixXd values) const;

 private:
  GridPtr grid_;
  std::vector<Date> dates_;
  Eigen::MatrixXd values_;
};

/// Checks a date axis for strict daily increments; throws IngestError otherwise.
void validate_time_axis(std::span<const Date> dates);

/// Area overlaps between a fine and a coarse grid.
class OverlapMap {
 public:
  struct Entry {
    std::size_t fine = 0;
    double area_km2 = 0.0;
  };

  OverlapMap() = default;
  OverlapMap(std::vector<CellId> coarse_ids, std::size_t n_fine);

  /// Exhaustive rectangle intersection of every fine/coarse cell pair.
  static OverlapMap build(const GridSpec& fine, const GridSpec& coarse);
  /// From precomputed (coarse_id, fine_id, area) triples.
  static OverlapMap from_triples(const GridSpec& fine, const GridSpec& coarse,
                                 std::span<const std::tuple<CellId, CellId, double>> triples);

  void add(std::size_t coarse, std::size_t fine, double area_km2);

  std::size_t n_coarse() const { return by_coarse_.size(); }
  std::size_t n_fine() const { return largest_.size(); }
  std::span<const Entry> overlaps(std::size_t coarse) const { return by_coarse_[coarse]; }
  /// Coarse cell with the largest intersection (ties to lowest coarse id).
  std::optional<std::size_t> largest(std::size_t fine) const { return largest_[fine]; }

 private:
  std::vector<std::vector<Entry>> by_coarse_;
  std::vector<std::optional<std::size_t>> largest_;
  std::vector<double> largest_area_;
  std::vector<CellId> coarse_ids_;
};

/// Area-weighted aggregation of a fine field onto the coarse grid.
Field upscale(const Field& fine, GridPtr coarse_grid, const OverlapMap& overlap);

/// Area-weighted aggregation of the fine-grid covariates onto the coarse grid.
GridSpec upscale_covariates(const GridSpec& fine, const GridSpec& coarse, const OverlapMap& overlap);

/// Index of the nearest coarse center for each fine cell (ties to lowest id).
std::vector<std::size_t> nearest_neighbors(const GridSpec& coarse, const GridSpec& fine);

Field nearest_neighbor_regrid(const Field& coarse, GridPtr fine_grid);

/// Fine cells whose largest-intersection coarse cell is in `coarse_ids`.
std::vector<std::size_t> catchment_cells(const GridSpec& fine, const GridSpec& coarse,
                                         const OverlapMap& overlap,
                                         std::span<const CellId> coarse_ids);

}  // namespace stormgen
