#include "stormgen/field_io.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "stormgen/error.hpp"

namespace stormgen {

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& s : out) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  }
  return out;
}

double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IngestError(where + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

CellId parse_id(std::string_view s, const std::string& where) {
  CellId v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IngestError(where + ": cannot parse cell id '" + std::string(s) + "'");
  }
  return v;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IngestError("cannot open " + path.string());
  return in;
}

// Maps file column order onto the grid's cell order.
std::vector<std::size_t> column_map(const std::vector<CellId>& file_ids, const GridSpec& grid,
                                    const fs::path& path) {
  if (file_ids.size() != grid.size()) {
    throw IngestError(path.string() + ": dimension mismatch (" + std::to_string(file_ids.size()) +
                      " cells in file, " + std::to_string(grid.size()) + " in grid)");
  }
  std::vector<std::size_t> map(file_ids.size());
  std::vector<bool> seen(grid.size(), false);
  for (std::size_t j = 0; j < file_ids.size(); ++j) {
    auto idx = grid.find(file_ids[j]);
    if (!idx) {
      throw IngestError(path.string() + ": cell " + std::to_string(file_ids[j]) +
                        " is not in the grid");
    }
    if (seen[*idx]) {
      throw IngestError(path.string() + ": duplicate cell " + std::to_string(file_ids[j]));
    }
    seen[*idx] = true;
    map[j] = *idx;
  }
  return map;
}

void check_finite(const Eigen::MatrixXd& values, const GridSpec& grid,
                  std::span<const Date> dates, const fs::path& path) {
  for (Eigen::Index t = 0; t < values.cols(); ++t) {
    for (Eigen::Index k = 0; k < values.rows(); ++k) {
      if (!std::isfinite(values(k, t))) {
        throw IngestError(path.string() + ": missing value (NaN) at cell " +
                          std::to_string(grid.id(static_cast<std::size_t>(k))) + ", day " +
                          std::to_string(t + 1) + " (" +
                          format_date(dates[static_cast<std::size_t>(t)]) + ")");
      }
    }
  }
}

Field load_field_csv(const fs::path& path, GridPtr grid) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IngestError(path.string() + ": empty file");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "date") {
    throw IngestError(path.string() + ": header must start with 'date'");
  }
  std::vector<CellId> ids;
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j].substr(0, 5) != "cell_") {
      throw IngestError(path.string() + ": bad column name '" + std::string(header[j]) + "'");
    }
    ids.push_back(parse_id(header[j].substr(5), path.string()));
  }
  const auto map = column_map(ids, *grid, path);

  std::vector<Date> dates;
  std::vector<std::vector<double>> rows;
  std::size_t record = 1;
  while (std::getline(in, line)) {
    ++record;
    if (line.empty() || line == "\r") continue;
    const auto cols = split_csv(line);
    const std::string where = path.string() + " record " + std::to_string(record);
    if (cols.size() != header.size()) {
      throw IngestError(where + ": dimension mismatch (" + std::to_string(cols.size()) +
                        " columns, expected " + std::to_string(header.size()) + ")");
    }
    Date d;
    try {
      d = parse_date(cols[0]);
    } catch (const std::invalid_argument& e) {
      throw IngestError(where + ": " + e.what());
    }
    if (!dates.empty() && d <= dates.back()) {
      throw IngestError(where + ": non-monotone time axis at " + format_date(d));
    }
    dates.push_back(d);
    std::vector<double> row(grid->size());
    for (std::size_t j = 1; j < cols.size(); ++j) row[map[j - 1]] = parse_double(cols[j], where);
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd values(static_cast<Eigen::Index>(grid->size()),
                         static_cast<Eigen::Index>(dates.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t k = 0; k < grid->size(); ++k) {
      values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = rows[t][k];
    }
  }
  check_finite(values, *grid, dates, path);
  return Field(std::move(grid), std::move(dates), std::move(values));
}

fs::path sidecar_of(const fs::path& bin) {
  auto p = bin;
  p.replace_extension(".json");
  return p;
}

Field load_field_binary(const fs::path& path, GridPtr grid) {
  fs::path bin = path, meta = path;
  if (path.extension() == ".json") {
    bin.replace_extension(".bin");
  } else {
    meta = sidecar_of(path);
  }
  const auto doc = read_json(meta);
  const auto n_cells = doc.at("n_cells").get<std::size_t>();
  const auto n_days = doc.at("n_days").get<std::size_t>();
  const auto ids = doc.at("cell_ids").get<std::vector<CellId>>();
  if (ids.size() != n_cells) {
    throw IngestError(meta.string() + ": dimension mismatch (cell_ids vs n_cells)");
  }
  const auto map = column_map(ids, *grid, meta);
  Date start;
  try {
    start = parse_date(doc.at("start_date").get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw IngestError(meta.string() + ": " + e.what());
  }

  auto in = open_in(bin, std::ios::binary);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != n_cells * n_days * sizeof(double)) {
    throw IngestError(bin.string() + ": dimension mismatch (" + std::to_string(bytes) +
                      " bytes for " + std::to_string(n_cells) + "x" + std::to_string(n_days) +
                      " values)");
  }
  in.seekg(0);
  std::vector<double> buf(n_cells);
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n_cells), static_cast<Eigen::Index>(n_days));
  for (std::size_t t = 0; t < n_days; ++t) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n_cells * sizeof(double)));
    for (std::size_t j = 0; j < n_cells; ++j) {
      values(static_cast<Eigen::Index>(map[j]), static_cast<Eigen::Index>(t)) = buf[j];
    }
  }
  auto dates = daily_range(start, start + std::chrono::days{static_cast<long>(n_days) - 1});
  check_finite(values, *grid, dates, bin);
  return Field(std::move(grid), std::move(dates), std::move(values));
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json_atomic(const fs::path& path, const nlohmann::json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(path.string() + ": " + e.what());
  }
}

GridSpec load_grid(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IngestError(path.string() + ": empty file");
  const auto header = split_csv(line);
  const std::vector<std::string_view> expected = {"cell_id", "easting_km", "northing_km", "width_km",
                                                  "height_km", "lat", "lon", "elev_m"};
  if (header != expected) {
    throw IngestError(path.string() +
                      ": header must be cell_id,easting_km,northing_km,width_km,height_km,lat,lon,elev_m");
  }
  std::vector<CellId> ids;
  std::vector<Point> centers;
  std::vector<Covariates> cov;
  std::vector<Rect> cells;
  std::size_t record = 1;
  while (std::getline(in, line)) {
    ++record;
    if (line.empty() || line == "\r") continue;
    const auto c = split_csv(line);
    const std::string where = path.string() + " record " + std::to_string(record);
    if (c.size() != expected.size()) throw IngestError(where + ": wrong number of columns");
    ids.push_back(parse_id(c[0], where));
    const Point p{parse_double(c[1], where), parse_double(c[2], where)};
    centers.push_back(p);
    cells.push_back(Rect::centered(p, parse_double(c[3], where), parse_double(c[4], where)));
    cov.push_back({parse_double(c[5], where), parse_double(c[6], where), parse_double(c[7], where)});
  }
  return GridSpec(std::move(ids), std::move(centers), std::move(cov), std::move(cells));
}

void save_grid(const fs::path& path, const GridSpec& grid) {
  std::ostringstream os;
  os << "cell_id,easting_km,northing_km,width_km,height_km,lat,lon,elev_m\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& r = grid.cell(i);
    const auto& c = grid.covariates(i);
    os << grid.id(i) << ',' << format_double(grid.center(i).easting_km) << ','
       << format_double(grid.center(i).northing_km) << ',' << format_double(r.width()) << ','
       << format_double(r.height()) << ',' << format_double(c.lat_deg) << ','
       << format_double(c.lon_deg) << ',' << format_double(c.elev_m) << '\n';
  }
  write_file_atomic(path, os.str());
}

Field load_field(const fs::path& path, GridPtr grid) {
  if (path.extension() == ".csv") return load_field_csv(path, std::move(grid));
  if (path.extension() == ".bin" || path.extension() == ".json") {
    return load_field_binary(path, std::move(grid));
  }
  throw IngestError(path.string() + ": unknown field format (expected .csv or .bin)");
}

void save_field_csv(const fs::path& path, const Field& field) {
  std::ostringstream os;
  os << "date";
  for (CellId id : field.grid().ids()) os << ",cell_" << id;
  os << '\n';
  const auto& v = field.values();
  for (std::size_t t = 0; t < field.n_days(); ++t) {
    os << format_date(field.dates()[t]);
    for (Eigen::Index k = 0; k < v.rows(); ++k) {
      os << ',' << format_double(v(k, static_cast<Eigen::Index>(t)));
    }
    os << '\n';
  }
  write_file_atomic(path, os.str());
}

void save_field_binary(const fs::path& path, const Field& field) {
  nlohmann::json meta;
  meta["n_cells"] = field.n_cells();
  meta["n_days"] = field.n_days();
  meta["start_date"] = field.n_days() ? format_date(field.dates().front()) : "";
  meta["cell_ids"] = std::vector<CellId>(field.grid().ids().begin(), field.grid().ids().end());
  // Eigen column-major storage is exactly day-by-day row-major on disk.
  const auto& v = field.values();
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(v.data()),
                                           static_cast<std::size_t>(v.size()) * sizeof(double)));
  write_json_atomic(sidecar_of(path), meta);
}

void save_field(const fs::path& path, const Field& field) {
  if (path.extension() == ".csv") {
    save_field_csv(path, field);
  } else if (path.extension() == ".bin") {
    save_field_binary(path, field);
  } else {
    throw UsageError(path.string() + ": unknown field format (expected .csv or .bin)");
  }
}

OverlapMap load_overlap(const fs::path& path, const GridSpec& fine, const GridSpec& coarse) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IngestError(path.string() + ": empty file");
  const auto header = split_csv(line);
  if (header != std::vector<std::string_view>{"coarse_id", "fine_id", "area_km2"}) {
    throw IngestError(path.string() + ": header must be coarse_id,fine_id,area_km2");
  }
  std::vector<std::tuple<CellId, CellId, double>> triples;
  std::size_t record = 1;
  while (std::getline(in, line)) {
    ++record;
    if (line.empty() || line == "\r") continue;
    const auto c = split_csv(line);
    const std::string where = path.string() + " record " + std::to_string(record);
    if (c.size() != 3) throw IngestError(where + ": wrong number of columns");
    triples.emplace_back(parse_id(c[0], where), parse_id(c[1], where), parse_double(c[2], where));
  }
  return OverlapMap::from_triples(fine, coarse, triples);
}

void save_overlap(const fs::path& path, const OverlapMap& overlap, const GridSpec& fine,
                  const GridSpec& coarse) {
  std::ostringstream os;
  os << "coarse_id,fine_id,area_km2\n";
  for (std::size_t r = 0; r < overlap.n_coarse(); ++r) {
    for (const auto& e : overlap.overlaps(r)) {
      os << coarse.id(r) << ',' << fine.id(e.fine) << ',' << format_double(e.area_km2) << '\n';
    }
  }
  write_file_atomic(path, os.str());
}

}  // namespace stormgen
