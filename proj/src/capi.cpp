#include "georva/georva.h"

#include <cstring>
#include <new>
#include <string>

#include "eval.hpp"
#include "geogrid.hpp"
#include "pipeline.hpp"
#include "raster.hpp"

struct georva_grid {
  georva::PixelAreaMap areas;
};

struct georva_prepare_cfg {
  georva::PrepareConfig cfg;
};

struct georva_eval_cfg {
  georva::EvalConfig cfg;
};

namespace {

thread_local std::string t_last_error;

template <typename F>
georva_status wrap(F&& f) noexcept {
  try {
    f();
    t_last_error.clear();
    return GEORVA_OK;
  } catch (const georva::Error& e) {
    t_last_error = e.what();
    switch (e.code()) {
      case georva::Errc::invalid_argument: return GEORVA_E_ARGUMENT;
      case georva::Errc::format: return GEORVA_E_FORMAT;
      case georva::Errc::dimension: return GEORVA_E_DIMENSION;
      case georva::Errc::data: return GEORVA_E_DATA;
      case georva::Errc::resource: return GEORVA_E_RESOURCE;
      case georva::Errc::io: return GEORVA_E_IO;
    }
    return GEORVA_E_UNKNOWN;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return GEORVA_E_UNKNOWN;
  } catch (...) {
    t_last_error = "unknown failure";
    return GEORVA_E_UNKNOWN;
  }
}

georva_status arg_error(const char* message) noexcept {
  t_last_error = message;
  return GEORVA_E_ARGUMENT;
}

// NULL-tolerant conversion for optional path/string parameters.
std::string opt_str(const char* s) { return s ? std::string(s) : std::string(); }

georva::DownsampleKernel to_kernel(georva_kernel k) {
  if (k != GEORVA_KERNEL_MODE && k != GEORVA_KERNEL_NEAREST) {
    georva::fail(georva::Errc::invalid_argument, "unknown downsampling kernel");
  }
  return k == GEORVA_KERNEL_MODE ? georva::DownsampleKernel::mode
                                 : georva::DownsampleKernel::nearest;
}

}  // namespace

extern "C" {

const char* georva_version(void) { return "0.1.0"; }

const char* georva_last_error(void) { return t_last_error.c_str(); }

georva_status georva_grid_new(uint32_t height, uint32_t width, double earth_radius_km,
                              georva_grid** out) {
  if (!out) return arg_error("out pointer is NULL");
  *out = nullptr;
  return wrap([&] {
    *out = new georva_grid{
        georva::PixelAreaMap(georva::GlobalGrid(height, width, earth_radius_km))};
  });
}

void georva_grid_free(georva_grid* grid) { delete grid; }

georva_status georva_grid_pixel_area_km2(const georva_grid* grid, uint32_t row,
                                         double* out) {
  if (!grid || !out) return arg_error("NULL argument");
  return wrap([&] { *out = grid->areas.row_area(row); });
}

georva_status georva_grid_total_area_km2(const georva_grid* grid, double* out) {
  if (!grid || !out) return arg_error("NULL argument");
  return wrap([&] { *out = grid->areas.total_km2(); });
}

georva_status georva_grid_locate(const georva_grid* grid, double lat, double lon,
                                 uint32_t* out_row, uint32_t* out_col) {
  if (!grid || !out_row || !out_col) return arg_error("NULL argument");
  return wrap([&] {
    const georva::PixelIndex p =
        grid->areas.grid().locate(georva::normalize_point(lat, lon));
    *out_row = p.row;
    *out_col = p.col;
  });
}

georva_status georva_grid_pixel_center(const georva_grid* grid, uint32_t row,
                                       uint32_t col, double* out_lat, double* out_lon) {
  if (!grid || !out_lat || !out_lon) return arg_error("NULL argument");
  return wrap([&] {
    const georva::GlobalGrid& g = grid->areas.grid();
    if (row >= g.height() || col >= g.width()) {
      georva::fail(georva::Errc::invalid_argument, "pixel index out of range");
    }
    const georva::GeoPoint c = g.pixel_center(row, col);
    *out_lat = c.lat;
    *out_lon = c.lon;
  });
}

georva_status georva_great_circle_km(double lat1, double lon1, double lat2, double lon2,
                                     double earth_radius_km, double* out) {
  if (!out) return arg_error("out pointer is NULL");
  return wrap([&] {
    *out = georva::great_circle_km(georva::normalize_point(lat1, lon1),
                                   georva::normalize_point(lat2, lon2), earth_radius_km);
  });
}

georva_status georva_cap_area_km2(double cap_radius_km, double earth_radius_km,
                                  double* out) {
  if (!out) return arg_error("out pointer is NULL");
  return wrap([&] { *out = georva::spherical_cap_area_km2(cap_radius_km, earth_radius_km); });
}

georva_status georva_raster_info(const char* path, uint32_t* out_height,
                                 uint32_t* out_width, georva_dtype* out_dtype) {
  if (!path || !out_height || !out_width || !out_dtype) return arg_error("NULL argument");
  return wrap([&] {
    const georva::RasterInfo info = georva::peek_raster(path);
    *out_height = info.height;
    *out_width = info.width;
    *out_dtype = georva_dtype(info.type);
  });
}

georva_prepare_cfg* georva_prepare_cfg_new(void) {
  return new (std::nothrow) georva_prepare_cfg{};
}

void georva_prepare_cfg_free(georva_prepare_cfg* cfg) { delete cfg; }

georva_status georva_prepare_cfg_grid(georva_prepare_cfg* cfg, uint32_t height,
                                      uint32_t width, double earth_radius_km) {
  if (!cfg) return arg_error("NULL config");
  cfg->cfg.grid_height = height;
  cfg->cfg.grid_width = width;
  cfg->cfg.earth_radius_km = earth_radius_km;
  return GEORVA_OK;
}

georva_status georva_prepare_cfg_kernel(georva_prepare_cfg* cfg, georva_kernel kernel) {
  if (!cfg) return arg_error("NULL config");
  return wrap([&] { cfg->cfg.kernel = to_kernel(kernel); });
}

georva_status georva_prepare_cfg_density(georva_prepare_cfg* cfg, const char* raster_path,
                                         uint32_t n_buckets, float nodata) {
  if (!cfg || !raster_path) return arg_error("NULL argument");
  cfg->cfg.density_raster = raster_path;
  cfg->cfg.n_buckets = n_buckets;
  cfg->cfg.density_nodata = nodata;
  return GEORVA_OK;
}

georva_status georva_prepare_cfg_landcover(georva_prepare_cfg* cfg,
                                           const char* raster_path,
                                           const char* merge_csv) {
  if (!cfg || !raster_path) return arg_error("NULL argument");
  cfg->cfg.landcover_raster = raster_path;
  cfg->cfg.merge_csv = opt_str(merge_csv);
  return GEORVA_OK;
}

georva_status georva_prepare_cfg_out_dir(georva_prepare_cfg* cfg, const char* dir) {
  if (!cfg || !dir) return arg_error("NULL argument");
  cfg->cfg.out_dir = dir;
  return GEORVA_OK;
}

georva_status georva_prepare_run(const georva_prepare_cfg* cfg) {
  if (!cfg) return arg_error("NULL config");
  return wrap([&] { georva::cmd_prepare(cfg->cfg); });
}

georva_eval_cfg* georva_eval_cfg_new(void) { return new (std::nothrow) georva_eval_cfg{}; }

void georva_eval_cfg_free(georva_eval_cfg* cfg) { delete cfg; }

georva_status georva_eval_cfg_grid(georva_eval_cfg* cfg, uint32_t height, uint32_t width,
                                   double earth_radius_km) {
  if (!cfg) return arg_error("NULL config");
  cfg->cfg.grid_height = height;
  cfg->cfg.grid_width = width;
  cfg->cfg.earth_radius_km = earth_radius_km;
  return GEORVA_OK;
}

georva_status georva_eval_cfg_manifest(georva_eval_cfg* cfg, const char* manifest_csv) {
  if (!cfg || !manifest_csv) return arg_error("NULL argument");
  cfg->cfg.manifest_csv = manifest_csv;
  return GEORVA_OK;
}

georva_status georva_eval_cfg_out_dir(georva_eval_cfg* cfg, const char* dir) {
  if (!cfg || !dir) return arg_error("NULL argument");
  cfg->cfg.out_dir = dir;
  return GEORVA_OK;
}

georva_status georva_eval_cfg_buckets(georva_eval_cfg* cfg, const char* labels_grv) {
  if (!cfg || !labels_grv) return arg_error("NULL argument");
  cfg->cfg.bucket_labels_grv = labels_grv;
  return GEORVA_OK;
}

georva_status georva_eval_cfg_balanced(georva_eval_cfg* cfg, int balanced) {
  if (!cfg) return arg_error("NULL config");
  cfg->cfg.balanced = balanced != 0;
  return GEORVA_OK;
}

georva_status georva_eval_cfg_seed(georva_eval_cfg* cfg, uint64_t seed) {
  if (!cfg) return arg_error("NULL config");
  cfg->cfg.seed = seed;
  return GEORVA_OK;
}

georva_status georva_eval_cfg_threads(georva_eval_cfg* cfg, uint32_t threads) {
  if (!cfg) return arg_error("NULL config");
  cfg->cfg.threads = threads;
  return GEORVA_OK;
}

georva_status georva_eval_cfg_run_name(georva_eval_cfg* cfg, const char* name) {
  if (!cfg || !name) return arg_error("NULL argument");
  cfg->cfg.run_name = name;
  return GEORVA_OK;
}

georva_status georva_eval_cfg_urban_prior(georva_eval_cfg* cfg, const char* member_name) {
  if (!cfg || !member_name) return arg_error("NULL argument");
  cfg->cfg.urban_prior_member = member_name;
  return GEORVA_OK;
}

georva_status georva_eval_cfg_add_member(georva_eval_cfg* cfg, const char* name,
                                         const char* scores_csv, const char* labels_grv,
                                         const char* cells_csv, const char* polygons_txt) {
  if (!cfg || !name || !scores_csv) return arg_error("NULL argument");
  georva::MemberConfig m;
  m.name = name;
  m.scores_csv = scores_csv;
  m.labels_grv = opt_str(labels_grv);
  m.cells_csv = opt_str(cells_csv);
  m.polygons_txt = opt_str(polygons_txt);
  cfg->cfg.members.push_back(std::move(m));
  return GEORVA_OK;
}

georva_status georva_eval_cfg_add_indicator(georva_eval_cfg* cfg, const char* name,
                                            const char* labels_grv, const char* cells_csv,
                                            const char* polygons_txt,
                                            const int64_t* class_ids, size_t n_classes) {
  if (!cfg || !name) return arg_error("NULL argument");
  if (n_classes > 0 && !class_ids) return arg_error("class_ids is NULL");
  georva::MemberConfig m;
  m.name = name;
  m.is_indicator = true;
  m.labels_grv = opt_str(labels_grv);
  m.cells_csv = opt_str(cells_csv);
  m.polygons_txt = opt_str(polygons_txt);
  m.indicator_classes.assign(class_ids, class_ids + n_classes);
  cfg->cfg.members.push_back(std::move(m));
  return GEORVA_OK;
}

georva_status georva_eval_run(const georva_eval_cfg* cfg, size_t* out_evaluated,
                              size_t* out_skipped) {
  if (!cfg) return arg_error("NULL config");
  return wrap([&] {
    const georva::EvalOutputs out = georva::cmd_eval(cfg->cfg);
    if (out_evaluated) *out_evaluated = out.records.size();
    if (out_skipped) *out_skipped = out.skipped.size();
  });
}

georva_status georva_densify_run(const georva_eval_cfg* cfg, const char* image_id,
                                 double scale, const char* out_grv) {
  if (!cfg || !image_id || !out_grv) return arg_error("NULL argument");
  return wrap([&] { georva::cmd_densify(cfg->cfg, image_id, scale, out_grv); });
}

georva_status georva_info_text(const char* path, double earth_radius_km, char** out_text) {
  if (!path || !out_text) return arg_error("NULL argument");
  *out_text = nullptr;
  return wrap([&] {
    const std::string text = georva::cmd_info(path, earth_radius_km);
    char* buf = static_cast<char*>(::operator new(text.size() + 1));
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_text = buf;
  });
}

void georva_text_free(char* text) { ::operator delete(text); }

georva_status georva_rebalance_run(const char* manifest_csv, const char* bucket_labels_grv,
                                   uint32_t n_buckets, uint64_t seed,
                                   double earth_radius_km, const char* out_csv) {
  if (!manifest_csv || !bucket_labels_grv || !out_csv) return arg_error("NULL argument");
  return wrap([&] {
    georva::RebalanceConfig cfg;
    cfg.manifest_csv = manifest_csv;
    cfg.bucket_labels_grv = bucket_labels_grv;
    cfg.n_buckets = n_buckets;
    cfg.seed = seed;
    cfg.earth_radius_km = earth_radius_km;
    cfg.out_csv = out_csv;
    georva::cmd_rebalance(cfg);
  });
}

georva_status georva_rasterize_cells_run(const char* cells_csv, const char* polygons_txt,
                                         uint32_t grid_height, uint32_t grid_width,
                                         double earth_radius_km, const char* out_grv,
                                         const char* out_areas_csv) {
  if (!out_grv) return arg_error("NULL output path");
  return wrap([&] {
    georva::RasterizeConfig cfg;
    cfg.cells_csv = opt_str(cells_csv);
    cfg.polygons_txt = opt_str(polygons_txt);
    cfg.grid_height = grid_height;
    cfg.grid_width = grid_width;
    cfg.earth_radius_km = earth_radius_km;
    cfg.out_grv = out_grv;
    cfg.out_areas_csv = opt_str(out_areas_csv);
    georva::cmd_rasterize_cells(cfg);
  });
}

georva_status georva_downsample_run(const char* in_path, const char* out_path,
                                    uint32_t target_height, uint32_t target_width,
                                    georva_kernel kernel) {
  if (!in_path || !out_path) return arg_error("NULL argument");
  return wrap([&] {
    georva::cmd_downsample(in_path, out_path, target_height, target_width,
                           to_kernel(kernel));
  });
}

}  // extern "C"
