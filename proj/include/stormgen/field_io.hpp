#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "stormgen/grid.hpp"

namespace stormgen {

namespace fs = std::filesystem;

/// Grid CSV: `cell_id,easting_km,northing_km,width_km,height_km,lat,lon,elev_m`.
GridSpec load_grid(const fs::path& path);
void save_grid(const fs::path& path, const GridSpec& grid);

/// Reads a field in either format: `.csv` (`date,cell_<id>,...`) or `.bin`
/// (row-major float64, day by day) with a `.json` sidecar next to it. Columns
/// are reordered to the grid's cell order.
Field load_field(const fs::path& path, GridPtr grid);
void save_field_csv(const fs::path& path, const Field& field);
/// Writes `path` (.bin) plus `path` with extension replaced by `.json`.
void save_field_binary(const fs::path& path, const Field& field);
/// Dispatches on extension.
void save_field(const fs::path& path, const Field& field);

/// Overlap CSV: `coarse_id,fine_id,area_km2`.
OverlapMap load_overlap(const fs::path& path, const GridSpec& fine, const GridSpec& coarse);
void save_overlap(const fs::path& path, const OverlapMap& overlap, const GridSpec& fine,
                  const GridSpec& coarse);

/// Writes via a temporary file in the same directory and renames it into place.
void write_file_atomic(const fs::path& path, std::string_view contents);
void write_json_atomic(const fs::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const fs::path& path);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace stormgen
