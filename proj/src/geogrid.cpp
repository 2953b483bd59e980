#include "geogrid.hpp"

#include <cmath>
#include <numbers>

namespace georva {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

GeoPoint normalize_point(double lat_deg, double lon_deg) {
  if (!(lat_deg >= -90.0 && lat_deg <= 90.0)) {
    fail(Errc::invalid_argument,
         "latitude " + std::to_string(lat_deg) + " outside [-90, 90]");
  }
  if (!std::isfinite(lon_deg)) {
    fail(Errc::invalid_argument, "longitude is not finite");
  }
  // In-range longitudes pass through untouched so normalization is idempotent
  // at full precision; only out-of-range values go through the wrap.
  if (lon_deg >= -180.0 && lon_deg < 180.0) return {lat_deg, lon_deg};
  double lon = std::fmod(lon_deg + 180.0, 360.0);
  if (lon < 0.0) lon += 360.0;
  return {lat_deg, lon - 180.0};
}

GlobalGrid::GlobalGrid(uint32_t height, uint32_t width, double earth_radius_km)
    : height_(height), width_(width), radius_(earth_radius_km) {
  if (height_ < 1 || width_ < 1) {
    fail(Errc::invalid_argument, "grid dimensions must be >= 1");
  }
  if (!(radius_ > 0.0)) {
    fail(Errc::invalid_argument, "earth radius must be positive");
  }
}

double GlobalGrid::row_edge_lat(uint32_t k) const {
  // (90 * (h - 2k)) / h keeps north/south edges exactly mirrored, which makes
  // pixel areas symmetric about the equator bit-for-bit.
  return (90.0 * (double(height_) - 2.0 * double(k))) / double(height_);
}

double GlobalGrid::pixel_area_km2(uint32_t row) const {
  if (row >= height_) {
    fail(Errc::invalid_argument,
         "row " + std::to_string(row) + " out of range for height " + std::to_string(height_));
  }
  const double sin_north = std::sin(row_edge_lat(row) * kDegToRad);
  const double sin_south = std::sin(row_edge_lat(row + 1) * kDegToRad);
  return radius_ * radius_ * (lon_step() * kDegToRad) * (sin_north - sin_south);
}

double GlobalGrid::total_area_km2() const {
  return 4.0 * std::numbers::pi * radius_ * radius_;
}

PixelIndex GlobalGrid::locate(const GeoPoint& p) const {
  const GeoPoint q = normalize_point(p.lat, p.lon);
  double row_f = std::floor((90.0 - q.lat) * double(height_) / 180.0);
  if (row_f < 0.0) row_f = 0.0;
  uint32_t row = uint32_t(row_f);
  if (row >= height_) row = height_ - 1;  // lat == -90 lands here

  double col_f = std::floor((q.lon + 180.0) * double(width_) / 360.0);
  if (col_f < 0.0) col_f = 0.0;
  uint32_t col = uint32_t(col_f);
  if (col >= width_) col = 0;  // wrap rounding spill at the antimeridian
  return {row, col};
}

GeoPoint GlobalGrid::pixel_center(PixelIndex p) const {
  if (p.row >= height_ || p.col >= width_) {
    fail(Errc::invalid_argument, "pixel index out of range");
  }
  const double lat = 90.0 - (double(p.row) + 0.5) * lat_step();
  const double lon = -180.0 + (double(p.col) + 0.5) * lon_step();
  return {lat, lon};
}

PixelAreaMap::PixelAreaMap(const GlobalGrid& grid) : grid_(grid) {
  row_areas_.resize(grid.height());
  for (uint32_t i = 0; i < grid.height(); ++i) {
    row_areas_[i] = grid.pixel_area_km2(i);
  }
  double sum = 0.0;
  for (double a : row_areas_) sum += a;
  total_ = sum * double(grid.width());
}

double PixelAreaMap::row_area(uint32_t row) const {
  if (row >= row_areas_.size()) {
    fail(Errc::invalid_argument, "row " + std::to_string(row) + " out of range");
  }
  return row_areas_[row];
}

double great_circle_km(const GeoPoint& a, const GeoPoint& b, double earth_radius_km) {
  const GeoPoint pa = normalize_point(a.lat, a.lon);
  const GeoPoint pb = normalize_point(b.lat, b.lon);
  const double phi1 = pa.lat * kDegToRad;
  const double phi2 = pb.lat * kDegToRad;
  const double dphi = (pb.lat - pa.lat) * kDegToRad;
  const double dlam = (pb.lon - pa.lon) * kDegToRad;
  const double sp = std::sin(dphi / 2.0);
  const double sl = std::sin(dlam / 2.0);
  double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  if (h > 1.0) h = 1.0;
  if (h < 0.0) h = 0.0;
  return 2.0 * earth_radius_km * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
}

double spherical_cap_area_km2(double cap_radius_km, double earth_radius_km) {
  const double max_radius = std::numbers::pi * earth_radius_km;
  if (!(cap_radius_km >= 0.0) || cap_radius_km > max_radius) {
    fail(Errc::invalid_argument,
         "cap radius " + std::to_string(cap_radius_km) + " outside [0, pi R]");
  }
  const double r2 = earth_radius_km * earth_radius_km;
  return 2.0 * std::numbers::pi * r2 * (1.0 - std::cos(cap_radius_km / earth_radius_km));
}

}  // namespace georva
