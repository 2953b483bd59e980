// Command-line surface over the georva C API: attribute-raster preparation,
// ensemble evaluation, and the supporting file utilities. Configuration comes
// from flags, optionally seeded by a JSON config file; flags win.
//
// Exit codes: 0 success, 1 usage or other failure, 2 malformed file,
// 3 data-consistency violation.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "georva/georva.h"
#include "json.hpp"

using nlohmann::json;

namespace {

int map_exit(georva_status s) {
  switch (s) {
    case GEORVA_OK: return 0;
    case GEORVA_E_FORMAT: return 2;
    case GEORVA_E_DIMENSION:
    case GEORVA_E_DATA: return 3;
    default: return 1;
  }
}

int report(georva_status s) {
  std::fprintf(stderr, "georva: %s\n", georva_last_error());
  return map_exit(s);
}

#define GV_CHECK(call)                                    \
  do {                                                    \
    const georva_status gv_s = (call);                    \
    if (gv_s != GEORVA_OK) return report(gv_s);           \
  } while (0)

// Usage-level problem detected inside a subcommand callback.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

georva_kernel parse_kernel(const std::string& name) {
  if (name == "mode") return GEORVA_KERNEL_MODE;
  if (name == "nearest") return GEORVA_KERNEL_NEAREST;
  throw UsageError("unknown kernel '" + name + "' (use mode or nearest)");
}

const char* opt_cstr(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

json load_config_file(const std::string& path, int& bad_exit) {
  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "georva: cannot open config file %s\n", path.c_str());
    bad_exit = 1;
    return {};
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    std::fprintf(stderr, "georva: %s: %s\n", path.c_str(), e.what());
    bad_exit = 2;
    return {};
  }
}

/** One ensemble member as configured on the command line or in JSON. */
struct MemberSpec {
  std::string name, scores, labels, cells, polygons;
  bool indicator = false;
  std::vector<int64_t> classes;
};

// Flag form: "name=base,scores=s.csv,cells=c.csv" with keys name/scores/
// labels/cells/polygons/classes plus the bare word "indicator"; classes are
// ':'-separated ids.
MemberSpec parse_member_flag(const std::string& spec) {
  MemberSpec m;
  size_t start = 0;
  while (start <= spec.size()) {
    size_t comma = spec.find(',', start);
    if (comma == std::string::npos) comma = spec.size();
    const std::string part = spec.substr(start, comma - start);
    start = comma + 1;
    if (part.empty()) continue;
    const size_t eq = part.find('=');
    if (eq == std::string::npos) {
      if (part == "indicator") {
        m.indicator = true;
        continue;
      }
      throw UsageError("bad member field '" + part + "' in --member");
    }
    const std::string key = part.substr(0, eq);
    const std::string value = part.substr(eq + 1);
    if (key == "name") {
      m.name = value;
    } else if (key == "scores") {
      m.scores = value;
    } else if (key == "labels") {
      m.labels = value;
    } else if (key == "cells") {
      m.cells = value;
    } else if (key == "polygons") {
      m.polygons = value;
    } else if (key == "classes") {
      size_t p = 0;
      while (p <= value.size()) {
        size_t colon = value.find(':', p);
        if (colon == std::string::npos) colon = value.size();
        const std::string tok = value.substr(p, colon - p);
        p = colon + 1;
        if (tok.empty()) continue;
        m.classes.push_back(std::stoll(tok));
      }
    } else {
      throw UsageError("unknown member key '" + key + "' in --member");
    }
  }
  return m;
}

MemberSpec parse_member_json(const json& j) {
  MemberSpec m;
  m.name = j.value("name", std::string());
  m.scores = j.value("scores", std::string());
  m.labels = j.value("labels", std::string());
  m.cells = j.value("cells", std::string());
  m.polygons = j.value("polygons", std::string());
  m.indicator = j.value("indicator", false);
  if (j.contains("classes")) {
    for (const auto& c : j.at("classes")) m.classes.push_back(c.get<int64_t>());
  }
  return m;
}

/** Shared flag set for eval and densify (same ensemble configuration). */
struct EvalOpts {
  std::string config;
  uint32_t grid_height = 5400, grid_width = 10800;
  double radius = 6371.0088;
  std::string manifest, out_dir, buckets, run_name = "eval", urban_prior;
  bool balanced = false;
  uint64_t seed = 0;
  uint32_t threads = 0;
  std::vector<std::string> member_flags;

  CLI::Option *o_gh = nullptr, *o_gw = nullptr, *o_radius = nullptr, *o_manifest = nullptr,
              *o_out = nullptr, *o_buckets = nullptr, *o_name = nullptr, *o_urban = nullptr,
              *o_balanced = nullptr, *o_seed = nullptr, *o_threads = nullptr;

  void add_flags(CLI::App* cmd, bool with_outputs) {
    cmd->add_option("--config", config, "JSON config file (flags override it)");
    o_gh = cmd->add_option("--grid-height", grid_height, "common grid height");
    o_gw = cmd->add_option("--grid-width", grid_width, "common grid width");
    o_radius = cmd->add_option("--radius", radius, "earth radius in km");
    o_manifest = cmd->add_option("--manifest", manifest, "image manifest CSV");
    cmd->add_option("--member", member_flags,
                    "ensemble member spec (name=..,scores=..,labels=|cells=|polygons=..;"
                    " repeatable; replaces config-file members)");
    o_urban = cmd->add_option("--urban-prior", urban_prior,
                              "replace this scores member with the top-2-class indicator");
    if (with_outputs) {
      o_out = cmd->add_option("--out", out_dir, "output directory");
      o_buckets = cmd->add_option("--buckets", buckets, "bucket label grid (GRV1)");
      o_balanced = cmd->add_flag("--balanced", balanced, "also evaluate a bucket-balanced subset");
      o_seed = cmd->add_option("--seed", seed, "sampling seed");
      o_threads = cmd->add_option("--threads", threads, "worker threads (0 = auto)");
      o_name = cmd->add_option("--name", run_name, "method name for the threshold table");
    }
  }

  // Fills unset flags from the config file, then applies everything to cfg.
  // Returns a nonzero exit code on failure.
  int apply(georva_eval_cfg* cfg) {
    json j;
    if (!config.empty()) {
      int bad = 0;
      j = load_config_file(config, bad);
      if (bad) return bad;
      if (!o_gh->count()) grid_height = j.value("grid_height", grid_height);
      if (!o_gw->count()) grid_width = j.value("grid_width", grid_width);
      if (!o_radius->count()) radius = j.value("earth_radius_km", radius);
      if (!o_manifest->count()) manifest = j.value("manifest", manifest);
      if (!o_urban->count()) urban_prior = j.value("urban_prior", urban_prior);
      if (o_out && !o_out->count()) out_dir = j.value("out_dir", out_dir);
      if (o_buckets && !o_buckets->count()) buckets = j.value("buckets", buckets);
      if (o_balanced && !o_balanced->count()) balanced = j.value("balanced", balanced);
      if (o_seed && !o_seed->count()) seed = j.value("seed", seed);
      if (o_threads && !o_threads->count()) threads = j.value("threads", threads);
      if (o_name && !o_name->count()) run_name = j.value("run_name", run_name);
    }
    std::vector<MemberSpec> members;
    if (!member_flags.empty()) {
      for (const std::string& spec : member_flags) members.push_back(parse_member_flag(spec));
    } else if (j.contains("members")) {
      for (const auto& jm : j.at("members")) members.push_back(parse_member_json(jm));
    }
    if (members.empty()) {
      throw UsageError("no ensemble members given (--member or config \"members\")");
    }
    if (manifest.empty()) throw UsageError("--manifest is required");

    GV_CHECK(georva_eval_cfg_grid(cfg, grid_height, grid_width, radius));
    GV_CHECK(georva_eval_cfg_manifest(cfg, manifest.c_str()));
    if (o_out) {
      if (out_dir.empty()) throw UsageError("--out is required");
      GV_CHECK(georva_eval_cfg_out_dir(cfg, out_dir.c_str()));
      if (!buckets.empty()) GV_CHECK(georva_eval_cfg_buckets(cfg, buckets.c_str()));
      GV_CHECK(georva_eval_cfg_balanced(cfg, balanced ? 1 : 0));
      GV_CHECK(georva_eval_cfg_seed(cfg, seed));
      GV_CHECK(georva_eval_cfg_threads(cfg, threads));
      GV_CHECK(georva_eval_cfg_run_name(cfg, run_name.c_str()));
    }
    if (!urban_prior.empty()) {
      GV_CHECK(georva_eval_cfg_urban_prior(cfg, urban_prior.c_str()));
    }
    for (const MemberSpec& m : members) {
      if (m.indicator) {
        GV_CHECK(georva_eval_cfg_add_indicator(
            cfg, m.name.c_str(), opt_cstr(m.labels), opt_cstr(m.cells),
            opt_cstr(m.polygons), m.classes.empty() ? nullptr : m.classes.data(),
            m.classes.size()));
      } else {
        if (m.scores.empty()) {
          throw UsageError("member '" + m.name + "' needs scores= (or indicator)");
        }
        GV_CHECK(georva_eval_cfg_add_member(cfg, m.name.c_str(), m.scores.c_str(),
                                            opt_cstr(m.labels), opt_cstr(m.cells),
                                            opt_cstr(m.polygons)));
      }
    }
    return 0;
  }
};

/** Owns a config handle for the duration of a subcommand. */
struct EvalCfgHandle {
  georva_eval_cfg* cfg = georva_eval_cfg_new();
  ~EvalCfgHandle() { georva_eval_cfg_free(cfg); }
};

struct PrepareCfgHandle {
  georva_prepare_cfg* cfg = georva_prepare_cfg_new();
  ~PrepareCfgHandle() { georva_prepare_cfg_free(cfg); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probability-map ensembling and recall-vs-area evaluation on a global grid"};
  app.set_version_flag("--version", georva_version());
  app.require_subcommand(1);
  int exit_code = 0;

  // ---- prepare ----
  auto* prepare = app.add_subcommand(
      "prepare", "Classify attribute rasters and downsample them to the common grid");
  struct {
    std::string config, density, landcover, merge, out_dir, kernel = "mode";
    uint32_t grid_height = 5400, grid_width = 10800, n_buckets = 4;
    double radius = 6371.0088, nodata = -1.0;
    CLI::Option *o_gh, *o_gw, *o_radius, *o_density, *o_landcover, *o_merge, *o_out,
        *o_kernel, *o_buckets, *o_nodata;
  } prep;
  prepare->add_option("--config", prep.config, "JSON config file (flags override it)");
  prep.o_density = prepare->add_option("--density", prep.density, "density raster (f32 GRV1)");
  prep.o_buckets = prepare->add_option("--buckets", prep.n_buckets, "number of density buckets");
  prep.o_nodata = prepare->add_option("--nodata", prep.nodata, "density nodata sentinel");
  prep.o_landcover =
      prepare->add_option("--landcover", prep.landcover, "class-code raster (u8/u16 GRV1)");
  prep.o_merge = prepare->add_option("--merge", prep.merge,
                                     "merge table CSV (default: built-in land-cover table)");
  prep.o_gh = prepare->add_option("--grid-height", prep.grid_height, "common grid height");
  prep.o_gw = prepare->add_option("--grid-width", prep.grid_width, "common grid width");
  prep.o_radius = prepare->add_option("--radius", prep.radius, "earth radius in km");
  prep.o_kernel =
      prepare->add_option("--kernel", prep.kernel, "downsampling kernel (mode|nearest)");
  prep.o_out = prepare->add_option("--out", prep.out_dir, "output directory");
  prepare->callback([&] {
    if (!prep.config.empty()) {
      int bad = 0;
      const json j = load_config_file(prep.config, bad);
      if (bad) {
        exit_code = bad;
        return;
      }
      if (!prep.o_density->count()) prep.density = j.value("density", prep.density);
      if (!prep.o_buckets->count()) prep.n_buckets = j.value("n_buckets", prep.n_buckets);
      if (!prep.o_nodata->count()) prep.nodata = j.value("density_nodata", prep.nodata);
      if (!prep.o_landcover->count()) prep.landcover = j.value("landcover", prep.landcover);
      if (!prep.o_merge->count()) prep.merge = j.value("merge", prep.merge);
      if (!prep.o_gh->count()) prep.grid_height = j.value("grid_height", prep.grid_height);
      if (!prep.o_gw->count()) prep.grid_width = j.value("grid_width", prep.grid_width);
      if (!prep.o_radius->count()) prep.radius = j.value("earth_radius_km", prep.radius);
      if (!prep.o_kernel->count()) prep.kernel = j.value("kernel", prep.kernel);
      if (!prep.o_out->count()) prep.out_dir = j.value("out_dir", prep.out_dir);
    }
    exit_code = [&]() -> int {
      PrepareCfgHandle h;
      GV_CHECK(georva_prepare_cfg_grid(h.cfg, prep.grid_height, prep.grid_width, prep.radius));
      GV_CHECK(georva_prepare_cfg_kernel(h.cfg, parse_kernel(prep.kernel)));
      if (!prep.density.empty()) {
        GV_CHECK(georva_prepare_cfg_density(h.cfg, prep.density.c_str(), prep.n_buckets,
                                            float(prep.nodata)));
      }
      if (!prep.landcover.empty()) {
        GV_CHECK(georva_prepare_cfg_landcover(h.cfg, prep.landcover.c_str(),
                                              opt_cstr(prep.merge)));
      }
      if (prep.out_dir.empty()) throw UsageError("--out is required");
      GV_CHECK(georva_prepare_cfg_out_dir(h.cfg, prep.out_dir.c_str()));
      GV_CHECK(georva_prepare_run(h.cfg));
      return 0;
    }();
  });

  // ---- eval ----
  auto* eval = app.add_subcommand(
      "eval", "Evaluate an ensemble over a manifest and write records, curves, and tables");
  auto eval_opts = std::make_shared<EvalOpts>();
  eval_opts->add_flags(eval, /*with_outputs=*/true);
  eval->callback([&, eval_opts] {
    exit_code = [&]() -> int {
      EvalCfgHandle h;
      if (const int rc = eval_opts->apply(h.cfg)) return rc;
      size_t evaluated = 0, skipped = 0;
      GV_CHECK(georva_eval_run(h.cfg, &evaluated, &skipped));
      std::printf("evaluated %zu image(s), skipped %zu\n", evaluated, skipped);
      return 0;
    }();
  });

  // ---- densify ----
  auto* densify = app.add_subcommand(
      "densify", "Export one image's ensembled probability map as a float32 raster");
  auto dens_opts = std::make_shared<EvalOpts>();
  struct {
    std::string image, out;
    double scale = 1.0;
  } dens;
  dens_opts->add_flags(densify, /*with_outputs=*/false);
  densify->add_option("--image", dens.image, "image id from the manifest")->required();
  densify->add_option("--out", dens.out, "output raster path")->required();
  densify->add_option("--scale", dens.scale, "multiplier applied to every value");
  densify->callback([&, dens_opts] {
    exit_code = [&]() -> int {
      EvalCfgHandle h;
      if (const int rc = dens_opts->apply(h.cfg)) return rc;
      GV_CHECK(georva_densify_run(h.cfg, dens.image.c_str(), dens.scale, dens.out.c_str()));
      return 0;
    }();
  });

  // ---- info ----
  auto* info = app.add_subcommand("info", "Print a raster's header and statistics");
  struct {
    std::string path;
    double radius = 6371.0088;
  } info_opts;
  info->add_option("path", info_opts.path, "GRV1 raster file")->required();
  info->add_option("--radius", info_opts.radius, "earth radius in km");
  info->callback([&] {
    exit_code = [&]() -> int {
      char* text = nullptr;
      GV_CHECK(georva_info_text(info_opts.path.c_str(), info_opts.radius, &text));
      std::fputs(text, stdout);
      georva_text_free(text);
      return 0;
    }();
  });

  // ---- rebalance ----
  auto* rebalance = app.add_subcommand(
      "rebalance", "Write an equal-size-per-bucket subsample of a manifest");
  struct {
    std::string manifest, buckets, out;
    uint32_t n_buckets = 0;
    uint64_t seed = 0;
    double radius = 6371.0088;
  } reb;
  rebalance->add_option("--manifest", reb.manifest, "image manifest CSV")->required();
  rebalance->add_option("--buckets", reb.buckets, "bucket label grid (GRV1)")->required();
  rebalance->add_option("--n-buckets", reb.n_buckets,
                        "bucket count (0 = highest label present + 1)");
  rebalance->add_option("--seed", reb.seed, "sampling seed");
  rebalance->add_option("--radius", reb.radius, "earth radius in km");
  rebalance->add_option("--out", reb.out, "output manifest CSV")->required();
  rebalance->callback([&] {
    exit_code = [&]() -> int {
      GV_CHECK(georva_rebalance_run(reb.manifest.c_str(), reb.buckets.c_str(), reb.n_buckets,
                                    reb.seed, reb.radius, reb.out.c_str()));
      return 0;
    }();
  });

  // ---- rasterize-cells ----
  auto* rasterize = app.add_subcommand(
      "rasterize-cells", "Label the grid with prediction cells and write their areas");
  struct {
    std::string cells, polygons, out, areas;
    uint32_t grid_height = 5400, grid_width = 10800;
    double radius = 6371.0088;
  } ras;
  rasterize->add_option("--cells", ras.cells, "cell rectangles CSV");
  rasterize->add_option("--polygons", ras.polygons, "cell polygons file");
  rasterize->add_option("--grid-height", ras.grid_height, "common grid height");
  rasterize->add_option("--grid-width", ras.grid_width, "common grid width");
  rasterize->add_option("--radius", ras.radius, "earth radius in km");
  rasterize->add_option("--out", ras.out, "output label raster (GRV1)")->required();
  rasterize->add_option("--areas", ras.areas, "output areas CSV (default: out with .csv)");
  rasterize->callback([&] {
    exit_code = [&]() -> int {
      GV_CHECK(georva_rasterize_cells_run(opt_cstr(ras.cells), opt_cstr(ras.polygons),
                                          ras.grid_height, ras.grid_width, ras.radius,
                                          ras.out.c_str(), opt_cstr(ras.areas)));
      return 0;
    }();
  });

  // ---- downsample ----
  auto* down = app.add_subcommand("downsample", "Block-downsample a label raster file");
  struct {
    std::string in, out, kernel = "mode";
    uint32_t height = 0, width = 0;
  } ds;
  down->add_option("--in", ds.in, "source raster (GRV1)")->required();
  down->add_option("--out", ds.out, "target raster (GRV1)")->required();
  down->add_option("--height", ds.height, "target height")->required();
  down->add_option("--width", ds.width, "target width")->required();
  down->add_option("--kernel", ds.kernel, "downsampling kernel (mode|nearest)");
  down->callback([&] {
    exit_code = [&]() -> int {
      GV_CHECK(georva_downsample_run(ds.in.c_str(), ds.out.c_str(), ds.height, ds.width,
                                     parse_kernel(ds.kernel)));
      return 0;
    }();
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // help/version exit 0; any usage problem exits 1
  } catch (const UsageError& e) {
    std::fprintf(stderr, "georva: %s\n", e.what());
    return 1;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "georva: config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "georva: %s\n", e.what());
    return 1;
  }
  return exit_code;
}
