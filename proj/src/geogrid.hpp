#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "error.hpp"

namespace georva {

// IUGG mean Earth radius, km.
inline constexpr double kEarthRadiusKm = 6371.0088;

struct GeoPoint {
  double lat = 0.0;  // degrees, [-90, +90]
  double lon = 0.0;  // degrees, [-180, +180)
};

// Validates latitude and wraps longitude into [-180, 180).
GeoPoint normalize_point(double lat_deg, double lon_deg);

struct PixelIndex {
  uint32_t row = 0;
  uint32_t col = 0;
  bool operator==(const PixelIndex&) const = default;
};

/** Equirectangular full-globe grid indexed by (lat, lon).
    Row 0's north edge is +90 deg; column 0's west edge is -180 deg.
    Pixel spans are uniform in degrees; pixel areas depend on latitude only. */
class GlobalGrid {
 public:
  GlobalGrid(uint32_t height, uint32_t width, double earth_radius_km = kEarthRadiusKm);

  uint32_t height() const { return height_; }
  uint32_t width() const { return width_; }
  double earth_radius_km() const { return radius_; }
  size_t pixel_count() const { return size_t(height_) * width_; }
  size_t pixel_offset(PixelIndex p) const { return size_t(p.row) * width_ + p.col; }

  double lat_step() const { return 180.0 / height_; }
  double lon_step() const { return 360.0 / width_; }

  // Latitude of horizontal edge k, k in [0, height]; +90 at k=0, -90 at k=height.
  // Computed so that edge(height - k) == -edge(k) exactly.
  double row_edge_lat(uint32_t k) const;

  // Spherical area of one pixel in the given row, km^2.
  double pixel_area_km2(uint32_t row) const;

  double total_area_km2() const;  // 4 pi R^2

  // Pixel whose cell contains p. Points on a shared edge belong to the
  // cell to the south/east; lat -90 maps to the last row; lon wraps.
  PixelIndex locate(const GeoPoint& p) const;

  GeoPoint pixel_center(PixelIndex p) const;
  GeoPoint pixel_center(uint32_t row, uint32_t col) const { return pixel_center({row, col}); }

  bool same_shape(const GlobalGrid& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool operator==(const GlobalGrid&) const = default;

 private:
  uint32_t height_;
  uint32_t width_;
  double radius_;
};

/** Precomputed per-row pixel areas (A_pix). All pixels in a row share an area,
    so only height values are stored. */
class PixelAreaMap {
 public:
  explicit PixelAreaMap(const GlobalGrid& grid);

  const GlobalGrid& grid() const { return grid_; }
  double row_area(uint32_t row) const;
  std::span<const double> row_areas() const { return row_areas_; }
  double total_km2() const { return total_; }

 private:
  GlobalGrid grid_;
  std::vector<double> row_areas_;
  double total_;
};

// Haversine great-circle distance, km.
double great_circle_km(const GeoPoint& a, const GeoPoint& b,
                       double earth_radius_km = kEarthRadiusKm);

// Area of a spherical cap with the given great-circle radius: 2 pi R^2 (1 - cos(r/R)).
// cap_radius_km must lie in [0, pi R].
double spherical_cap_area_km2(double cap_radius_km, double earth_radius_km = kEarthRadiusKm);

}  // namespace georva
