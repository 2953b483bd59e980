#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "geogrid.hpp"
#include "raster.hpp"

namespace georva {

/** Equal-width partition of log10(density) into n buckets. Bucket b spans
    [edges[b], edges[b+1]); interior boundary values belong to the upper
    bucket, and the last bucket is closed on both sides. Land pixels with
    density <= 0 go to bucket 0; pixels equal to nodata_value (or non-finite)
    carry no label. */
struct BucketSpec {
  uint32_t n_buckets = 0;
  std::vector<double> edges;  // n_buckets + 1, strictly ascending
  float nodata_value = 0.0f;
};

/** Streaming min/max scan over log10 of positive densities, so bucket edges
    for huge rasters can be fit without loading them whole. */
class BucketRangeScan {
 public:
  void feed(std::span<const float> values, float nodata);
  // Errors: no land pixels at all (empty domain), no positive densities, or a
  // single distinct positive value (degenerate range).
  BucketSpec finish(uint32_t n, float nodata) const;

 private:
  double lo_ = 0.0, hi_ = 0.0;
  uint64_t positive_ = 0, land_ = 0;
};

BucketSpec build_buckets(const FloatGrid& density, uint32_t n, float nodata);

// Bucket for one density value; nullopt means unlabeled (nodata).
std::optional<uint32_t> bucket_of(const BucketSpec& spec, float density);

// Labels every pixel of a density grid; nodata pixels get the no-label value.
LabelGrid bucketize(const FloatGrid& density, const BucketSpec& spec);

/** Reclassification table from source raster codes to merged class indices.
    A destination of kDropped sends the code to the no-label value. */
class MergeMap {
 public:
  static constexpr int64_t kDropped = -1;

  explicit MergeMap(std::vector<std::pair<uint32_t, int64_t>> pairs);
  // Land-cover default: 22 top-level ESA codes (10..220) merged to 7 classes,
  // code 0 dropped as nodata.
  static MergeMap land_cover_default();
  static MergeMap read(const std::filesystem::path& path);  // src_code,dst_class

  // Merged class for a source code; nullopt = dropped; unmapped codes error.
  std::optional<uint32_t> merged(uint32_t src_code) const;
  // Raw table entry: nullopt = unmapped, kDropped, or the class index.
  std::optional<int64_t> lookup(uint32_t src_code) const noexcept;
  uint32_t class_count() const { return class_count_; }  // max dst + 1

 private:
  std::unordered_map<uint32_t, int64_t> map_;
  uint32_t class_count_ = 0;
};

// Relabels a grid through the map. Source no-label pixels stay unlabeled;
// any other unmapped code is an error naming the code. Output uses u8
// storage when every destination fits, else u16.
LabelGrid apply_merge(const LabelGrid& labels, const MergeMap& m);

/** Rectangular region in degrees: lat in [lat_min, lat_max), lon in
    [lon_min, lon_max); lon_min > lon_max spans the antimeridian. */
struct CellRect {
  int64_t id = 0;
  double lat_min = 0, lat_max = 0, lon_min = 0, lon_max = 0;
};

struct CellPolygon {
  int64_t id = 0;
  std::vector<GeoPoint> vertices;  // >= 3, straight edges in lat-lon space
};

std::vector<CellRect> read_cells(const std::filesystem::path& path);
// One polygon per line: "cell_id;lon lat,lon lat,...".
std::vector<CellPolygon> read_polygons(const std::filesystem::path& path);

/** Partition of the grid into labeled class regions plus unlabeled remainder,
    with per-class spherical areas. The label grid stores grid_values[i] for
    class i; scores join on the external class_ids[i]. */
struct ClassMaskSet {
  std::shared_ptr<const LabelGrid> labels;
  std::vector<int64_t> class_ids;
  std::vector<uint32_t> grid_values;
  std::vector<double> class_areas;  // km²
  std::unordered_map<int64_t, uint32_t> index_of;
  double nodata_area = 0.0;

  uint32_t class_count() const { return uint32_t(class_ids.size()); }
  // Spherical area of one class; unknown ids error.
  double area_of(int64_t class_id) const;

  // Classes = distinct label values present (ascending); external id = value.
  static ClassMaskSet from_labels(LabelGrid labels, const PixelAreaMap& areas);
  // Pixel centers rasterized into cells; a center claimed by two cells is a
  // conflict error. Cells containing no center keep area 0.
  static ClassMaskSet rasterize_cells(const std::vector<CellRect>& cells,
                                      const PixelAreaMap& areas);
  static ClassMaskSet rasterize_polygons(const std::vector<CellPolygon>& polys,
                                         const PixelAreaMap& areas);
};

}  // namespace georva
