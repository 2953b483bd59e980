/* georva: geolocation probability-map ensembling and recall-vs-area
 * evaluation on a global equirectangular grid.
 *
 * Every function returns a georva_status; on failure a human-readable
 * message for the calling thread is available from georva_last_error().
 * Handles are opaque and owned by the caller via the matching _free call.
 */
#ifndef GEORVA_H
#define GEORVA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum georva_status {
  GEORVA_OK = 0,
  GEORVA_E_ARGUMENT = 1,  /* invalid parameter or configuration */
  GEORVA_E_FORMAT = 2,    /* malformed file (bad magic, truncation, header) */
  GEORVA_E_DIMENSION = 3, /* grid/raster shape mismatch */
  GEORVA_E_DATA = 4,      /* well-formed input violating a consistency rule */
  GEORVA_E_RESOURCE = 5,  /* size/memory budget exceeded */
  GEORVA_E_IO = 6,        /* file system failure */
  GEORVA_E_UNKNOWN = 7
} georva_status;

const char* georva_version(void);
/* Message from the last failing call on this thread; "" when none. */
const char* georva_last_error(void);

/* ---------- spherical geometry ---------- */

/* Full-globe equirectangular grid with per-row pixel areas precomputed. */
typedef struct georva_grid georva_grid;

georva_status georva_grid_new(uint32_t height, uint32_t width, double earth_radius_km,
                              georva_grid** out);
void georva_grid_free(georva_grid* grid);

georva_status georva_grid_pixel_area_km2(const georva_grid* grid, uint32_t row,
                                         double* out);
georva_status georva_grid_total_area_km2(const georva_grid* grid, double* out);
/* Pixel containing (lat, lon); edge points go to the south/east pixel. */
georva_status georva_grid_locate(const georva_grid* grid, double lat, double lon,
                                 uint32_t* out_row, uint32_t* out_col);
georva_status georva_grid_pixel_center(const georva_grid* grid, uint32_t row,
                                       uint32_t col, double* out_lat, double* out_lon);

/* Haversine great-circle distance in km. */
georva_status georva_great_circle_km(double lat1, double lon1, double lat2, double lon2,
                                     double earth_radius_km, double* out);
/* Spherical cap area 2*pi*R^2*(1 - cos(r/R)); r must lie in [0, pi*R]. */
georva_status georva_cap_area_km2(double cap_radius_km, double earth_radius_km,
                                  double* out);

/* ---------- raster files ---------- */

typedef enum georva_dtype {
  GEORVA_F32 = 0,
  GEORVA_U8 = 1,
  GEORVA_U16 = 2
} georva_dtype;

/* Reads only the 16-byte header. */
georva_status georva_raster_info(const char* path, uint32_t* out_height,
                                 uint32_t* out_width, georva_dtype* out_dtype);

typedef enum georva_kernel {
  GEORVA_KERNEL_MODE = 0,   /* block majority, ties to the smallest label */
  GEORVA_KERNEL_NEAREST = 1 /* block-center source pixel */
} georva_kernel;

/* ---------- attribute-raster preprocessing ---------- */

typedef struct georva_prepare_cfg georva_prepare_cfg;

georva_prepare_cfg* georva_prepare_cfg_new(void);
void georva_prepare_cfg_free(georva_prepare_cfg* cfg);
georva_status georva_prepare_cfg_grid(georva_prepare_cfg* cfg, uint32_t height,
                                      uint32_t width, double earth_radius_km);
georva_status georva_prepare_cfg_kernel(georva_prepare_cfg* cfg, georva_kernel kernel);
/* Population-density input: log10 equal-width bucketing into n_buckets. */
georva_status georva_prepare_cfg_density(georva_prepare_cfg* cfg, const char* raster_path,
                                         uint32_t n_buckets, float nodata);
/* Class-code input: reclassified through merge_csv (NULL = built-in
 * land-cover table). */
georva_status georva_prepare_cfg_landcover(georva_prepare_cfg* cfg,
                                           const char* raster_path,
                                           const char* merge_csv);
georva_status georva_prepare_cfg_out_dir(georva_prepare_cfg* cfg, const char* dir);
georva_status georva_prepare_run(const georva_prepare_cfg* cfg);

/* ---------- ensemble evaluation ---------- */

typedef struct georva_eval_cfg georva_eval_cfg;

georva_eval_cfg* georva_eval_cfg_new(void);
void georva_eval_cfg_free(georva_eval_cfg* cfg);
georva_status georva_eval_cfg_grid(georva_eval_cfg* cfg, uint32_t height, uint32_t width,
                                   double earth_radius_km);
georva_status georva_eval_cfg_manifest(georva_eval_cfg* cfg, const char* manifest_csv);
georva_status georva_eval_cfg_out_dir(georva_eval_cfg* cfg, const char* dir);
/* Label grid assigning a bucket to each image's ground-truth pixel; enables
 * per-bucket curves and balanced evaluation. */
georva_status georva_eval_cfg_buckets(georva_eval_cfg* cfg, const char* labels_grv);
georva_status georva_eval_cfg_balanced(georva_eval_cfg* cfg, int balanced);
georva_status georva_eval_cfg_seed(georva_eval_cfg* cfg, uint64_t seed);
georva_status georva_eval_cfg_threads(georva_eval_cfg* cfg, uint32_t threads);
georva_status georva_eval_cfg_run_name(georva_eval_cfg* cfg, const char* name);
/* Replace the named scores member with the indicator over its two highest
 * class ids (the constant urban-prior baseline). */
georva_status georva_eval_cfg_urban_prior(georva_eval_cfg* cfg, const char* member_name);
/* Multiplicative scores member. Exactly one mask source of labels_grv /
 * cells_csv / polygons_txt must be non-NULL. */
georva_status georva_eval_cfg_add_member(georva_eval_cfg* cfg, const char* name,
                                         const char* scores_csv, const char* labels_grv,
                                         const char* cells_csv, const char* polygons_txt);
/* Fixed 0/1 indicator member over class_ids (n_classes 0 = top-2). */
georva_status georva_eval_cfg_add_indicator(georva_eval_cfg* cfg, const char* name,
                                            const char* labels_grv, const char* cells_csv,
                                            const char* polygons_txt,
                                            const int64_t* class_ids, size_t n_classes);
/* Runs the evaluation and writes eval/curve/table CSVs into the output
 * directory. Out-counts are optional (NULL to ignore). */
georva_status georva_eval_run(const georva_eval_cfg* cfg, size_t* out_evaluated,
                              size_t* out_skipped);
/* Exports one image's ensembled map as a float32 raster (values scaled by
 * scale for visualization headroom). */
georva_status georva_densify_run(const georva_eval_cfg* cfg, const char* image_id,
                                 double scale, const char* out_grv);

/* ---------- stand-alone commands ---------- */

/* Header plus per-class or value statistics as printable text; free the
 * returned buffer with georva_text_free. */
georva_status georva_info_text(const char* path, double earth_radius_km, char** out_text);
void georva_text_free(char* text);

/* Equal-size stratified subsample of a manifest, written as a manifest CSV.
 * n_buckets 0 derives the count from the highest label present. */
georva_status georva_rebalance_run(const char* manifest_csv, const char* bucket_labels_grv,
                                   uint32_t n_buckets, uint64_t seed,
                                   double earth_radius_km, const char* out_csv);

/* Rasterizes cell rectangles (cells_csv) or polygons (polygons_txt; exactly
 * one non-NULL) into a label grid plus a cell-area table. NULL out_areas_csv
 * derives the path from out_grv. */
georva_status georva_rasterize_cells_run(const char* cells_csv, const char* polygons_txt,
                                         uint32_t grid_height, uint32_t grid_width,
                                         double earth_radius_km, const char* out_grv,
                                         const char* out_areas_csv);

/* Streaming block downsample of a label raster file. */
georva_status georva_downsample_run(const char* in_path, const char* out_path,
                                    uint32_t target_height, uint32_t target_width,
                                    georva_kernel kernel);

#ifdef __cplusplus
}
#endif

#endif /* GEORVA_H */
