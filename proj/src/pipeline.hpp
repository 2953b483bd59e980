#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eval.hpp"
#include "masks.hpp"
#include "raster.hpp"

namespace georva {

/** Attribute-raster preprocessing: classify at native resolution (density
    bucketing and/or land-cover merging), block-downsample to the common grid,
    and write label grids plus class-area tables. Inputs stream row blocks, so
    native rasters never load whole. */
struct PrepareConfig {
  uint32_t grid_height = 5400;
  uint32_t grid_width = 10800;
  double earth_radius_km = kEarthRadiusKm;
  DownsampleKernel kernel = DownsampleKernel::mode;
  std::filesystem::path out_dir;

  std::filesystem::path density_raster;  // float32 densities (optional)
  uint32_t n_buckets = 4;
  float density_nodata = -1.0f;

  std::filesystem::path landcover_raster;  // class codes (optional)
  std::filesystem::path merge_csv;         // empty = built-in land-cover table
};

void cmd_prepare(const PrepareConfig& config);

/** One multiplicative ensemble member. Scores members spread per-image class
    scores over a mask set; indicator members contribute a fixed 0/1 factor
    (classes empty = the two highest class ids, the urban-prior default).
    Exactly one mask source (labels / cells / polygons) per member. */
struct MemberConfig {
  std::string name;
  bool is_indicator = false;
  std::filesystem::path scores_csv;
  std::filesystem::path labels_grv;
  std::filesystem::path cells_csv;
  std::filesystem::path polygons_txt;
  std::vector<int64_t> indicator_classes;
};

struct EvalConfig {
  uint32_t grid_height = 5400;
  uint32_t grid_width = 10800;
  double earth_radius_km = kEarthRadiusKm;
  std::filesystem::path manifest_csv;
  std::vector<MemberConfig> members;
  std::filesystem::path bucket_labels_grv;  // enables buckets + balancing
  bool balanced = false;
  uint64_t seed = 0;
  uint32_t threads = 0;  // 0 = available parallelism
  std::string run_name = "eval";
  // Replace this scores member with the indicator over its top-2 classes.
  std::string urban_prior_member;
  std::filesystem::path out_dir;
};

/** Per-image records plus the curves/tables derived from them; returned so
    library callers can post-process without re-reading the CSVs. */
struct EvalOutputs {
  std::vector<EvalRecord> records;
  std::vector<std::pair<std::string, std::string>> skipped;  // (image_id, reason)
};

EvalOutputs cmd_eval(const EvalConfig& config);

// Human-readable header/statistics dump for any GRV1 file.
std::string cmd_info(const std::filesystem::path& path, double earth_radius_km);

struct RebalanceConfig {
  std::filesystem::path manifest_csv;
  std::filesystem::path bucket_labels_grv;
  uint32_t n_buckets = 0;  // 0 = one past the highest label present
  uint64_t seed = 0;
  double earth_radius_km = kEarthRadiusKm;
  std::filesystem::path out_csv;
};

void cmd_rebalance(const RebalanceConfig& config);

struct RasterizeConfig {
  std::filesystem::path cells_csv;      // exactly one of these two
  std::filesystem::path polygons_txt;
  uint32_t grid_height = 5400;
  uint32_t grid_width = 10800;
  double earth_radius_km = kEarthRadiusKm;
  std::filesystem::path out_grv;
  std::filesystem::path out_areas_csv;  // cell_id,grid_value,area_km2
};

void cmd_rasterize_cells(const RasterizeConfig& config);

// Streaming block downsample of a label raster file.
void cmd_downsample(const std::filesystem::path& in, const std::filesystem::path& out,
                    uint32_t target_h, uint32_t target_w, DownsampleKernel kernel);

// Materializes one image's ensembled map as a float32 raster (row-streamed;
// scale is a plain multiplier applied for visualization headroom).
void cmd_densify(const EvalConfig& config, const std::string& image_id, double scale,
                 const std::filesystem::path& out_grv);

}  // namespace georva
