#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "csvio.hpp"
#include "doctest.h"
#include "eval.hpp"
#include "oracle.hpp"
#include "pipeline.hpp"

using namespace georva;
namespace fs = std::filesystem;

namespace {

const fs::path kFixture = fs::path(GEORVA_TEST_DIR) / "fixtures" / "toy";
constexpr uint32_t kToyH = 36, kToyW = 72;
constexpr double kFourPiR2 = 510065880.9728718;

fs::path temp_dir(const char* name) {
  fs::path d = fs::temp_directory_path() / "georva_pipeline_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file: " << p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::invalid_argument;
}

PrepareConfig toy_prepare(const fs::path& out) {
  PrepareConfig c;
  c.grid_height = kToyH;
  c.grid_width = kToyW;
  c.out_dir = out;
  c.density_raster = kFixture / "density.grv";
  c.n_buckets = 4;
  c.density_nodata = -1.0f;
  c.landcover_raster = kFixture / "landcover.grv";
  return c;
}

EvalConfig toy_eval(const fs::path& prepared, const fs::path& out) {
  EvalConfig c;
  c.grid_height = kToyH;
  c.grid_width = kToyW;
  c.manifest_csv = kFixture / "manifest.csv";
  c.out_dir = out;
  c.run_name = "toy";
  MemberConfig a;
  a.name = "base_a";
  a.scores_csv = kFixture / "scores_a.csv";
  a.cells_csv = kFixture / "cells.csv";
  MemberConfig b;
  b.name = "base_b";
  b.scores_csv = kFixture / "scores_b.csv";
  b.cells_csv = kFixture / "cells.csv";
  MemberConfig ls;
  ls.name = "ls";
  ls.scores_csv = kFixture / "ls_scores.csv";
  ls.labels_grv = prepared / "ls_buckets.grv";
  c.members = {a, b, ls};
  c.bucket_labels_grv = prepared / "ls_buckets.grv";
  c.threads = 2;
  return c;
}

// The fixture members, rebuilt against the reference implementation.
struct OracleSide {
  std::vector<ClassMaskSet> masks;
  std::vector<ScoreTable> tables;

  explicit OracleSide(const fs::path& prepared) {
    PixelAreaMap areas{GlobalGrid(kToyH, kToyW)};
    const auto cells = read_cells(kFixture / "cells.csv");
    masks.push_back(ClassMaskSet::rasterize_cells(cells, areas));
    masks.push_back(ClassMaskSet::rasterize_cells(cells, areas));
    const AnyRaster ls = read_raster(prepared / "ls_buckets.grv");
    masks.push_back(ClassMaskSet::from_labels(std::get<LabelGrid>(ls), areas));
    tables.push_back(ScoreTable::read(kFixture / "scores_a.csv"));
    tables.push_back(ScoreTable::read(kFixture / "scores_b.csv"));
    tables.push_back(ScoreTable::read(kFixture / "ls_scores.csv"));
  }

  DenseMap dense_for(const std::string& image_id) const {
    std::vector<ScoreVector> scores;
    std::vector<const ClassMaskSet*> ptrs;
    for (size_t m = 0; m < masks.size(); ++m) {
      const ScoreVector* sv = tables[m].find(image_id);
      REQUIRE(sv != nullptr);
      scores.push_back(*sv);
      ptrs.push_back(&masks[m]);
    }
    return oracle_dense_ensemble(scores, ptrs, kToyH, kToyW);
  }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GEORVA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("preparation classifies, downsamples, and reports both attribute rasters") {
  const fs::path out = temp_dir("prepare");
  cmd_prepare(toy_prepare(out));

  const AnyRaster buckets_any = read_raster(out / "ls_buckets.grv");
  REQUIRE(std::holds_alternative<LabelGrid>(buckets_any));
  const LabelGrid& buckets = std::get<LabelGrid>(buckets_any);
  CHECK(buckets.height() == kToyH);
  CHECK(buckets.width() == kToyW);
  CHECK_FALSE(buckets.wide());
  const std::vector<uint64_t> bucket_hist = label_histogram(buckets);
  for (uint32_t b = 0; b < 4; ++b) CHECK(bucket_hist[b] > 0);
  for (uint32_t b = 4; b < 255; ++b) CHECK(bucket_hist[b] == 0);
  CHECK(bucket_hist[buckets.no_label()] > 0);  // the ocean

  // Bucket edges: five ascending values spanning the density's log range.
  CsvReader edges(out / "ls_edges.csv", {"edge_index", "log10_density"});
  std::vector<double> edge_vals;
  while (edges.next()) edge_vals.push_back(edges.number(1));
  REQUIRE(edge_vals.size() == 5);
  for (size_t i = 1; i < 5; ++i) CHECK(edge_vals[i] > edge_vals[i - 1]);
  CHECK(edge_vals[0] >= 0.0);   // fixture densities start at 10^0
  CHECK(edge_vals[4] <= 4.0);   // and end at 10^4

  // Class areas: per-class rows then the unlabeled remainder; sums to Earth.
  CsvReader areas_csv(out / "ls_areas.csv", {"class_id", "area_km2"});
  double covered = 0.0;
  size_t n_rows = 0;
  while (areas_csv.next()) {
    covered += areas_csv.number(1);
    ++n_rows;
  }
  CHECK(n_rows == 5);  // four bucket rows plus the -1 remainder
  CHECK(covered == doctest::Approx(kFourPiR2).epsilon(1e-9));

  const AnyRaster classes_any = read_raster(out / "lc_classes.grv");
  const LabelGrid& classes = std::get<LabelGrid>(classes_any);
  const std::vector<uint64_t> class_hist = label_histogram(classes);
  for (uint32_t k = 0; k < 7; ++k) CHECK(class_hist[k] > 0);
  for (uint32_t k = 7; k < 255; ++k) CHECK(class_hist[k] == 0);
  CHECK(class_hist[classes.no_label()] > 0);

  // Rerunning the preparation writes bit-identical artifacts.
  const fs::path out2 = temp_dir("prepare_again");
  cmd_prepare(toy_prepare(out2));
  for (const char* name : {"ls_buckets.grv", "ls_edges.csv", "ls_areas.csv",
                           "lc_classes.grv", "lc_areas.csv"}) {
    CHECK_MESSAGE(slurp(out / name) == slurp(out2 / name), name);
  }
}

TEST_CASE("preparation validates raster types and divisibility") {
  const fs::path out = temp_dir("prepare_bad");
  PrepareConfig c = toy_prepare(out);
  c.density_raster = kFixture / "landcover.grv";  // u8 where f32 is required
  c.landcover_raster.clear();
  CHECK(code_of([&] { cmd_prepare(c); }) == Errc::data);

  PrepareConfig swapped = toy_prepare(out);
  swapped.landcover_raster = kFixture / "density.grv";  // f32 where labels required
  swapped.density_raster.clear();
  CHECK(code_of([&] { cmd_prepare(swapped); }) == Errc::data);

  PrepareConfig odd = toy_prepare(out);
  odd.grid_height = 35;  // 72 rows cannot collapse into 35
  CHECK(code_of([&] { cmd_prepare(odd); }) == Errc::dimension);
}

TEST_CASE("cell rasterization writes the label grid and an area table") {
  const fs::path out = temp_dir("rasterize");
  RasterizeConfig c;
  c.cells_csv = kFixture / "cells.csv";
  c.grid_height = kToyH;
  c.grid_width = kToyW;
  c.out_grv = out / "cells.grv";
  cmd_rasterize_cells(c);

  const AnyRaster grid_any = read_raster(out / "cells.grv");
  const LabelGrid& grid = std::get<LabelGrid>(grid_any);
  const std::vector<uint64_t> hist = label_histogram(grid);
  CHECK(hist[grid.no_label()] == 0);  // the cells tile the whole globe

  CsvReader areas(out / "cells.csv", {"cell_id", "grid_value", "area_km2"});
  double total = 0.0;
  size_t rows = 0;
  std::set<int64_t> ids;
  while (areas.next()) {
    total += areas.number(2);
    ids.insert(areas.integer(0));
    ++rows;
  }
  CHECK(rows == 36);
  CHECK(ids.count(100) == 1);
  CHECK(ids.count(135) == 1);
  CHECK(total == doctest::Approx(kFourPiR2).epsilon(1e-9));
}

TEST_CASE("the toy ensemble evaluates end to end and matches the reference") {
  const fs::path prepared = temp_dir("eval_prepared");
  cmd_prepare(toy_prepare(prepared));
  const fs::path out = temp_dir("eval_out");
  const EvalConfig config = toy_eval(prepared, out);
  const EvalOutputs results = cmd_eval(config);

  REQUIRE(results.records.size() == 19);
  REQUIRE(results.skipped.size() == 1);
  CHECK(results.skipped[0].first == "img_19");
  CHECK(results.skipped[0].second == "no scores in member 'base_a'");

  // Every record agrees exactly with the literal reference pipeline.
  OracleSide oracle(prepared);
  PixelAreaMap areas{GlobalGrid(kToyH, kToyW)};
  const ImageManifest manifest = read_manifest(config.manifest_csv);
  for (const EvalRecord& rec : results.records) {
    CAPTURE(rec.image_id);
    const DenseMap dense = oracle.dense_for(rec.image_id);
    const GeoPoint gt = [&] {
      for (const ImageRow& row : manifest.rows)
        if (row.id == rec.image_id) return row.point;
      FAIL("record for unknown image");
      return GeoPoint{};
    }();
    REQUIRE(rec.min_area_km2 == oracle_min_area(dense, gt, areas));
    REQUIRE(rec.has_top1);
    const auto [top1, gcd] = oracle_top1(dense, gt, areas);
    REQUIRE(rec.top1.lat == top1.lat);
    REQUIRE(rec.top1.lon == top1.lon);
    REQUIRE(rec.gcd_km == gcd);
  }

  // The written artifacts cover records, skips, curves, and the table.
  CHECK(slurp(out / "eval.csv").find("img_00,") != std::string::npos);
  CHECK(slurp(out / "skipped.csv").find("img_19,") != std::string::npos);
  CsvReader curve(out / "curve.csv", {"area_km2", "recall"});
  double last_recall = 0.0, last_area = -1.0;
  while (curve.next()) {
    CHECK(curve.number(0) > last_area);
    CHECK(curve.number(1) >= last_recall);
    last_area = curve.number(0);
    last_recall = curve.number(1);
  }
  CHECK(last_recall == 1.0);
  const std::string table = slurp(out / "table.csv");
  CHECK(table.find("method,rva_1km,rva_25km,rva_200km,rva_750km,rva_2500km,"
                   "gcd_1km,gcd_25km,gcd_200km,gcd_750km,gcd_2500km") == 0);
  CHECK(table.find("\ntoy,") != std::string::npos);

  // Records carry the ground-truth pixel's bucket; ocean images carry none.
  const AnyRaster buckets = read_raster(prepared / "ls_buckets.grv");
  const LabelJoin join =
      label_images(manifest, std::get<LabelGrid>(buckets), areas.grid());
  size_t matched = 0;
  for (const EvalRecord& rec : results.records) {
    for (size_t i = 0; i < manifest.rows.size(); ++i) {
      if (manifest.rows[i].id == rec.image_id) {
        CHECK(rec.bucket == join.labels[i]);
        ++matched;
      }
    }
  }
  CHECK(matched == 19);

  // A second run regenerates every artifact byte for byte.
  const fs::path out2 = temp_dir("eval_out_again");
  cmd_eval(toy_eval(prepared, out2));
  for (const auto& entry : fs::directory_iterator(out)) {
    const std::string name = entry.path().filename().string();
    CAPTURE(name);
    CHECK(slurp(entry.path()) == slurp(out2 / name));
  }
}

TEST_CASE("balanced evaluation subsamples buckets equally and reproducibly") {
  const fs::path prepared = temp_dir("bal_prepared");
  cmd_prepare(toy_prepare(prepared));
  const fs::path out = temp_dir("bal_out");
  EvalConfig config = toy_eval(prepared, out);
  config.balanced = true;
  config.seed = 7;
  const EvalOutputs results = cmd_eval(config);

  // Count evaluated records per bucket; the balanced subset takes the min.
  std::vector<size_t> per_bucket(4, 0);
  for (const EvalRecord& rec : results.records) {
    if (rec.bucket >= 0) ++per_bucket[size_t(rec.bucket)];
  }
  size_t n_min = SIZE_MAX;
  uint32_t n_buckets = 0;
  for (size_t b = 0; b < 4; ++b) {
    if (per_bucket[b] > 0) n_buckets = uint32_t(b) + 1;
  }
  for (size_t b = 0; b < n_buckets; ++b) n_min = std::min(n_min, per_bucket[b]);
  REQUIRE(n_min > 0);

  const ImageManifest balanced = read_manifest(out / "balanced_manifest.csv");
  CHECK(balanced.rows.size() == size_t(n_buckets) * n_min);

  const std::string eval_bal = slurp(out / "eval_balanced.csv");
  for (const ImageRow& row : balanced.rows) {
    CHECK(eval_bal.find(row.id + ",") != std::string::npos);
  }
  CHECK(slurp(out / "curve_balanced.csv").find("area_km2,recall") == 0);
  CHECK(slurp(out / "table_balanced.csv").find("\ntoy,") != std::string::npos);

  // Same seed, same subset; the draw depends only on records and seed.
  const fs::path out2 = temp_dir("bal_out2");
  EvalConfig again = toy_eval(prepared, out2);
  again.balanced = true;
  again.seed = 7;
  cmd_eval(again);
  CHECK(slurp(out / "balanced_manifest.csv") == slurp(out2 / "balanced_manifest.csv"));
  CHECK(slurp(out / "eval_balanced.csv") == slurp(out2 / "eval_balanced.csv"));

  const fs::path out3 = temp_dir("bal_out3");
  EvalConfig other_seed = toy_eval(prepared, out3);
  other_seed.balanced = true;
  other_seed.seed = 8;
  cmd_eval(other_seed);
  // A different seed reshuffles (sizes still equal).
  CHECK(read_manifest(out3 / "balanced_manifest.csv").rows.size() ==
        balanced.rows.size());

  // Balancing without a bucket grid is a configuration error.
  EvalConfig no_buckets = toy_eval(prepared, temp_dir("bal_bad"));
  no_buckets.balanced = true;
  no_buckets.bucket_labels_grv.clear();
  CHECK(code_of([&] { cmd_eval(no_buckets); }) == Errc::invalid_argument);
}

TEST_CASE("the urban prior swaps a scores member for a top-2 indicator") {
  const fs::path prepared = temp_dir("urban_prepared");
  cmd_prepare(toy_prepare(prepared));

  const fs::path with_prior = temp_dir("urban_a");
  EvalConfig config = toy_eval(prepared, with_prior);
  config.urban_prior_member = "ls";
  const EvalOutputs res = cmd_eval(config);
  CHECK(res.records.size() == 19);

  // The prior restricts predictions to the two highest-density buckets. The
  // fixture has buckets 0..3, so an image scores a positive peak exactly when
  // its ground truth sits in bucket 2 or 3.
  for (const EvalRecord& rec : res.records) {
    CAPTURE(rec.image_id);
    CHECK((rec.p_star > 0.0) == (rec.bucket >= 2));
  }

  // Reference: replace the member by hand with an indicator over those two
  // buckets, spelled as literal class ids.
  const fs::path manual = temp_dir("urban_b");
  EvalConfig explicit_cfg = toy_eval(prepared, manual);
  explicit_cfg.members[2].is_indicator = true;
  explicit_cfg.members[2].scores_csv.clear();
  explicit_cfg.members[2].indicator_classes = {2, 3};
  cmd_eval(explicit_cfg);
  CHECK(slurp(with_prior / "eval.csv") == slurp(manual / "eval.csv"));

  EvalConfig missing = toy_eval(prepared, temp_dir("urban_c"));
  missing.urban_prior_member = "nope";
  CHECK(code_of([&] { cmd_eval(missing); }) == Errc::invalid_argument);
}

TEST_CASE("rebalance and downsample commands operate on files directly") {
  const fs::path prepared = temp_dir("cmd_prepared");
  cmd_prepare(toy_prepare(prepared));

  RebalanceConfig rc;
  rc.manifest_csv = kFixture / "manifest.csv";
  rc.bucket_labels_grv = prepared / "ls_buckets.grv";
  rc.out_csv = temp_dir("cmd_rebalance") / "balanced.csv";
  cmd_rebalance(rc);
  const ImageManifest balanced = read_manifest(rc.out_csv);
  CHECK(balanced.rows.size() > 0);
  CHECK(balanced.rows.size() % 4 == 0);  // four buckets, equal counts

  const fs::path down = temp_dir("cmd_down") / "lc_small.grv";
  cmd_downsample(kFixture / "landcover.grv", down, kToyH, kToyW,
                 DownsampleKernel::mode);
  const LabelGrid from_cmd = std::get<LabelGrid>(read_raster(down));
  const LabelGrid in_memory = downsample(
      std::get<LabelGrid>(read_raster(kFixture / "landcover.grv")), kToyH, kToyW,
      DownsampleKernel::mode);
  REQUIRE(from_cmd.height() == in_memory.height());
  for (size_t q = 0; q < size_t(kToyH) * kToyW; ++q) {
    REQUIRE(from_cmd.at(q) == in_memory.at(q));
  }

  CHECK(code_of([&] {
          cmd_downsample(kFixture / "density.grv", down, kToyH, kToyW,
                         DownsampleKernel::mode);
        }) == Errc::data);  // float rasters have no mode
}

TEST_CASE("densify exports the per-image probability map as float32") {
  const fs::path prepared = temp_dir("dens_prepared");
  cmd_prepare(toy_prepare(prepared));
  EvalConfig config = toy_eval(prepared, temp_dir("dens_unused"));
  const fs::path out_grv = temp_dir("dens_out") / "img00.grv";
  cmd_densify(config, "img_00", 1.0, out_grv);

  const FloatGrid exported = std::get<FloatGrid>(read_raster(out_grv));
  CHECK(exported.height() == kToyH);

  // The export is the narrowed dense reference map, value for value.
  OracleSide oracle(prepared);
  const DenseMap dense = oracle.dense_for("img_00");
  for (size_t q = 0; q < dense.size(); ++q) {
    REQUIRE(exported.values()[q] == float(dense.values()[q]));
  }

  // The non-trivial scale multiplies before narrowing.
  const fs::path scaled_grv = temp_dir("dens_scaled") / "img00x2.grv";
  cmd_densify(config, "img_00", 2.0, scaled_grv);
  const FloatGrid scaled = std::get<FloatGrid>(read_raster(scaled_grv));
  for (size_t q = 0; q < dense.size(); ++q) {
    REQUIRE(scaled.values()[q] == float(dense.values()[q] * 2.0));
  }

  CHECK(code_of([&] { cmd_densify(config, "img_19", 1.0, out_grv); }) == Errc::data);
  CHECK(code_of([&] { cmd_densify(config, "ghost", 1.0, out_grv); }) == Errc::data);
}

TEST_CASE("info renders headers, float statistics, and label areas") {
  const std::string density_info = cmd_info(kFixture / "density.grv", kEarthRadiusKm);
  CHECK(density_info.find("height=72 width=144 dtype=f32") == 0);
  CHECK(density_info.find("finite=") != std::string::npos);
  CHECK(density_info.find("min=-1 ") != std::string::npos);

  const std::string lc_info = cmd_info(kFixture / "landcover.grv", kEarthRadiusKm);
  CHECK(lc_info.find("height=72 width=144 dtype=u8") == 0);
  CHECK(lc_info.find("class 10:") != std::string::npos);
  CHECK(lc_info.find("class 220:") != std::string::npos);
  CHECK(lc_info.find("unlabeled:") == std::string::npos);  // 0 is a real code here

  CHECK(code_of([] { cmd_info("/nope.grv", kEarthRadiusKm); }) == Errc::io);
}

TEST_CASE("the command-line binary maps error classes onto exit codes") {
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("") == 1);               // a subcommand is required
  CHECK(run_cli("info") == 1);           // missing positional
  CHECK(run_cli("info /missing.grv") == 1);
  CHECK(run_cli("frobnicate") == 1);

  const fs::path fixture_info = kFixture / "density.grv";
  CHECK(run_cli("info " + fixture_info.string()) == 0);

  // A corrupt raster is a format problem: exit 2.
  const fs::path bad = temp_dir("cli") / "bad.grv";
  std::ofstream(bad, std::ios::binary) << "XXXX garbage";
  CHECK(run_cli("info " + bad.string()) == 2);

  // Inconsistent data (bucket grid shaped unlike the manifest grid): exit 3.
  const fs::path down_out = temp_dir("cli_down") / "out.grv";
  CHECK(run_cli("downsample --in " + (kFixture / "density.grv").string() + " --out " +
                down_out.string() + " --height 36 --width 72") == 3);

  // A full evaluation drives the same pipeline through flags and JSON config.
  const fs::path prepared = temp_dir("cli_prepared");
  CHECK(run_cli("prepare --density " + (kFixture / "density.grv").string() +
                " --landcover " + (kFixture / "landcover.grv").string() +
                " --grid-height 36 --grid-width 72 --out " + prepared.string()) == 0);
  const fs::path cli_out = temp_dir("cli_eval");
  const fs::path cfg_path = temp_dir("cli_cfg") / "eval.json";
  {
    std::ofstream cfg(cfg_path);
    cfg << "{\n"
        << "  \"grid_height\": 36, \"grid_width\": 72,\n"
        << "  \"manifest\": \"" << (kFixture / "manifest.csv").string() << "\",\n"
        << "  \"out_dir\": \"" << cli_out.string() << "\",\n"
        << "  \"buckets\": \"" << (prepared / "ls_buckets.grv").string() << "\",\n"
        << "  \"run_name\": \"cli\",\n"
        << "  \"members\": [\n"
        << "    {\"name\": \"base_a\", \"scores\": \""
        << (kFixture / "scores_a.csv").string() << "\", \"cells\": \""
        << (kFixture / "cells.csv").string() << "\"},\n"
        << "    {\"name\": \"ls\", \"scores\": \""
        << (kFixture / "ls_scores.csv").string() << "\", \"labels\": \""
        << (prepared / "ls_buckets.grv").string() << "\"}\n"
        << "  ]\n"
        << "}\n";
  }
  CHECK(run_cli("eval --config " + cfg_path.string()) == 0);
  CHECK(slurp(cli_out / "table.csv").find("\ncli,") != std::string::npos);

  // Flags override the file: a bogus manifest path makes the run fail.
  CHECK(run_cli("eval --config " + cfg_path.string() + " --manifest /missing.csv") == 1);
  // Malformed JSON is a format problem.
  const fs::path bad_cfg = temp_dir("cli_badcfg") / "broken.json";
  std::ofstream(bad_cfg) << "{ not json";
  CHECK(run_cli("eval --config " + bad_cfg.string()) == 2);
}
