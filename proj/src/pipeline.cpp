#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "ensemble.hpp"

namespace georva {

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

/** Text-file writer that only reports success after an explicit flush, so
    partially written outputs always surface as errors. */
class TextOut {
 public:
  explicit TextOut(const std::filesystem::path& p) : out_(p, std::ios::trunc), path_(p) {
    if (!out_) fail(Errc::io, "cannot create " + p.string());
  }
  TextOut& operator<<(const std::string& s) {
    out_ << s;
    return *this;
  }
  void line(const std::string& s) { out_ << s << '\n'; }
  void close() {
    out_.flush();
    if (!out_) fail(Errc::io, "write failed for " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

const char* dtype_name(RasterType t) {
  switch (t) {
    case RasterType::f32: return "f32";
    case RasterType::u8: return "u8";
    case RasterType::u16: return "u16";
  }
  return "?";
}

void check_block_factors(const RasterInfo& src, uint32_t th, uint32_t tw) {
  if (th < 1 || tw < 1 || src.height % th != 0 || src.width % tw != 0) {
    fail(Errc::dimension, "source " + std::to_string(src.height) + "x" +
                              std::to_string(src.width) +
                              " is not an integer multiple of target " +
                              std::to_string(th) + "x" + std::to_string(tw));
  }
}

void write_class_areas(const std::filesystem::path& path,
                       std::span<const double> areas_by_class, double nodata_area) {
  TextOut out(path);
  out.line("class_id,area_km2");
  for (size_t c = 0; c < areas_by_class.size(); ++c) {
    out.line(std::to_string(c) + "," + fmt("%.6f", areas_by_class[c]));
  }
  out.line("-1," + fmt("%.6f", nodata_area));  // unlabeled remainder
  out.close();
}

/** Shared streaming skeleton for prepare: classify a native-resolution row
    block, block-downsample it, write one common-grid row, and accumulate
    per-class areas. Classify turns raw source values into u8 labels. */
template <typename Src, typename Classify>
std::vector<double> stream_classified(RasterRowReader& reader, Classify&& classify,
                                      uint32_t grid_h, uint32_t grid_w,
                                      const PixelAreaMap& areas, DownsampleKernel kernel,
                                      const std::filesystem::path& out_grv,
                                      double& nodata_area) {
  const uint32_t sw = reader.info().width;
  const uint32_t bh = reader.info().height / grid_h;
  const uint32_t bw = sw / grid_w;
  RasterRowWriter writer(out_grv, {grid_h, grid_w, RasterType::u8});
  std::vector<Src> block(size_t(bh) * sw);
  std::vector<uint8_t> labels(block.size());
  std::vector<uint8_t> out_row(grid_w);
  ModeFilter filter;
  std::vector<double> acc(0x100, 0.0);
  for (uint32_t r = 0; r < grid_h; ++r) {
    reader.read_rows(block.data(), bh);
    for (size_t q = 0; q < block.size(); ++q) labels[q] = classify(block[q]);
    if (kernel == DownsampleKernel::mode) {
      filter.block_rows(labels.data(), sw, bh, bw, out_row.data(), grid_w);
    } else {
      const uint8_t* mid = labels.data() + size_t(bh / 2) * sw;
      for (uint32_t j = 0; j < grid_w; ++j) out_row[j] = mid[size_t(j) * bw + bw / 2];
    }
    writer.write_rows(out_row.data(), 1);
    const double a = areas.row_area(r);
    for (uint32_t j = 0; j < grid_w; ++j) acc[out_row[j]] += a;
  }
  writer.finish();
  nodata_area = acc[LabelGrid::kNoLabel8];
  acc.resize(LabelGrid::kNoLabel8);  // drop the sentinel slot
  return acc;
}

void prepare_density(const PrepareConfig& c, const PixelAreaMap& areas) {
  {
    RasterRowReader probe(c.density_raster);
    if (probe.info().type != RasterType::f32) {
      fail(Errc::data, c.density_raster.string() + ": density raster must be f32");
    }
    check_block_factors(probe.info(), c.grid_height, c.grid_width);
  }
  // Pass 1: fit bucket edges over the full native raster.
  BucketRangeScan scan;
  BucketSpec spec;
  {
    RasterRowReader reader(c.density_raster);
    std::vector<float> row(reader.info().width);
    for (uint32_t r = 0; r < reader.info().height; ++r) {
      reader.read_rows(row.data(), 1);
      scan.feed(row, c.density_nodata);
    }
    spec = scan.finish(c.n_buckets, c.density_nodata);
  }
  // Pass 2: bucketize at native resolution, then downsample the labels.
  RasterRowReader reader(c.density_raster);
  double nodata_area = 0.0;
  std::vector<double> acc = stream_classified<float>(
      reader,
      [&](float v) -> uint8_t {
        const auto b = bucket_of(spec, v);
        return b ? uint8_t(*b) : uint8_t(LabelGrid::kNoLabel8);
      },
      c.grid_height, c.grid_width, areas, c.kernel, c.out_dir / "ls_buckets.grv",
      nodata_area);
  acc.resize(c.n_buckets);
  write_class_areas(c.out_dir / "ls_areas.csv", acc, nodata_area);
  TextOut edges(c.out_dir / "ls_edges.csv");
  edges.line("edge_index,log10_density");
  for (size_t i = 0; i < spec.edges.size(); ++i) {
    edges.line(std::to_string(i) + "," + fmt("%.17g", spec.edges[i]));
  }
  edges.close();
}

void prepare_landcover(const PrepareConfig& c, const PixelAreaMap& areas) {
  RasterRowReader reader(c.landcover_raster);
  if (reader.info().type == RasterType::f32) {
    fail(Errc::data, c.landcover_raster.string() + ": land-cover raster must hold class codes");
  }
  check_block_factors(reader.info(), c.grid_height, c.grid_width);
  const MergeMap merge =
      c.merge_csv.empty() ? MergeMap::land_cover_default() : MergeMap::read(c.merge_csv);
  // Merged classes must fit the streamed u8 label rows.
  const uint32_t span = reader.info().type == RasterType::u8 ? 0x100u : 0x10000u;
  const uint32_t src_sentinel = span - 1;
  std::vector<int64_t> table(span, -2);
  for (uint32_t code = 0; code + 1 < span; ++code) {
    if (const auto entry = merge.lookup(code)) {
      if (*entry >= int64_t(LabelGrid::kNoLabel8)) {
        fail(Errc::data, "merged class " + std::to_string(*entry) + " does not fit u8 labels");
      }
      table[code] = *entry;
    }
  }
  table[src_sentinel] = MergeMap::kDropped;  // source no-label stays unlabeled
  const auto classify = [&](uint32_t v) -> uint8_t {
    const int64_t dst = table[v];
    if (dst == -2) fail(Errc::data, "unmapped class code " + std::to_string(v));
    return dst == MergeMap::kDropped ? uint8_t(LabelGrid::kNoLabel8) : uint8_t(dst);
  };
  double nodata_area = 0.0;
  std::vector<double> acc;
  if (reader.info().type == RasterType::u8) {
    acc = stream_classified<uint8_t>(reader, classify, c.grid_height, c.grid_width, areas,
                                     c.kernel, c.out_dir / "lc_classes.grv", nodata_area);
  } else {
    acc = stream_classified<uint16_t>(reader, classify, c.grid_height, c.grid_width, areas,
                                      c.kernel, c.out_dir / "lc_classes.grv", nodata_area);
  }
  acc.resize(merge.class_count());
  write_class_areas(c.out_dir / "lc_areas.csv", acc, nodata_area);
}

}  // namespace

void cmd_prepare(const PrepareConfig& config) {
  if (config.density_raster.empty() && config.landcover_raster.empty()) {
    fail(Errc::invalid_argument, "nothing to prepare: no density or land-cover raster given");
  }
  if (config.out_dir.empty()) fail(Errc::invalid_argument, "output directory required");
  std::filesystem::create_directories(config.out_dir);
  const GlobalGrid grid(config.grid_height, config.grid_width, config.earth_radius_km);
  const PixelAreaMap areas(grid);
  if (!config.density_raster.empty()) prepare_density(config, areas);
  if (!config.landcover_raster.empty()) prepare_landcover(config, areas);
}

namespace {

struct LoadedMember {
  std::string name;
  bool is_indicator = false;
  ClassMaskSet masks;
  std::optional<ScoreTable> scores;
  std::optional<Factor> fixed;
};

ClassMaskSet load_mask_source(const MemberConfig& m, const PixelAreaMap& areas) {
  const int sources = int(!m.labels_grv.empty()) + int(!m.cells_csv.empty()) +
                      int(!m.polygons_txt.empty());
  if (sources != 1) {
    fail(Errc::invalid_argument, "member '" + m.name +
                                     "' needs exactly one mask source "
                                     "(labels, cells, or polygons)");
  }
  if (!m.labels_grv.empty()) {
    AnyRaster r = read_raster(m.labels_grv);
    LabelGrid* g = std::get_if<LabelGrid>(&r);
    if (!g) {
      fail(Errc::data, m.labels_grv.string() + ": mask raster is f32; expected labels");
    }
    return ClassMaskSet::from_labels(std::move(*g), areas);
  }
  if (!m.cells_csv.empty()) {
    return ClassMaskSet::rasterize_cells(read_cells(m.cells_csv), areas);
  }
  return ClassMaskSet::rasterize_polygons(read_polygons(m.polygons_txt), areas);
}

std::vector<int64_t> top2_classes(const ClassMaskSet& masks) {
  std::vector<int64_t> ids = masks.class_ids;
  std::sort(ids.begin(), ids.end());
  if (ids.size() > 2) ids.erase(ids.begin(), ids.end() - 2);
  return ids;
}

std::vector<LoadedMember> load_members(const EvalConfig& config, const PixelAreaMap& areas) {
  if (config.members.empty()) fail(Errc::invalid_argument, "ensemble member list is empty");
  std::vector<MemberConfig> specs = config.members;
  if (!config.urban_prior_member.empty()) {
    bool found = false;
    for (MemberConfig& m : specs) {
      if (m.name == config.urban_prior_member && !m.is_indicator) {
        m.is_indicator = true;
        m.indicator_classes.clear();  // empty = top-2 classes
        found = true;
      }
    }
    if (!found) {
      fail(Errc::invalid_argument, "no scores member named '" + config.urban_prior_member +
                                       "' to replace with the urban prior");
    }
  }
  std::vector<LoadedMember> members;
  members.reserve(specs.size());
  for (const MemberConfig& m : specs) {
    LoadedMember lm;
    lm.name = m.name.empty() ? ("member" + std::to_string(members.size())) : m.name;
    lm.is_indicator = m.is_indicator;
    lm.masks = load_mask_source(m, areas);
    if (m.is_indicator) {
      const std::vector<int64_t> classes =
          m.indicator_classes.empty() ? top2_classes(lm.masks) : m.indicator_classes;
      lm.fixed = indicator(lm.masks, classes);
    } else {
      if (m.scores_csv.empty()) {
        fail(Errc::invalid_argument, "member '" + lm.name + "' needs a scores file");
      }
      lm.scores = ScoreTable::read(m.scores_csv);
    }
    members.push_back(std::move(lm));
  }
  return members;
}

FactorizedMap build_image_map(const std::vector<LoadedMember>& members,
                              const std::string& image_id, uint32_t h, uint32_t w) {
  FactorizedMap map(h, w);
  for (const LoadedMember& m : members) {
    if (m.is_indicator) {
      map.push(*m.fixed);
    } else {
      const ScoreVector* sv = m.scores->find(image_id);
      if (!sv) {
        fail(Errc::data, "image '" + image_id + "' has no scores in member '" + m.name + "'");
      }
      map.push(assemble(*sv, m.masks));
    }
  }
  return map;
}

void write_records_csv(const std::filesystem::path& path,
                       std::span<const EvalRecord> records) {
  TextOut out(path);
  out.line("image_id,min_area_km2,p_star,top1_lat,top1_lon,gcd_km,bucket");
  for (const EvalRecord& r : records) {
    std::string row = r.image_id + "," + fmt("%.6f", r.min_area_km2) + "," +
                      fmt("%.9g", r.p_star) + ",";
    if (r.has_top1) {
      row += fmt("%.6f", r.top1.lat) + "," + fmt("%.6f", r.top1.lon) + "," +
             fmt("%.3f", r.gcd_km);
    } else {
      row += ",,";
    }
    row += ",";
    if (r.bucket >= 0) row += std::to_string(r.bucket);
    out.line(row);
  }
  out.close();
}

void write_curve_csv(const std::filesystem::path& path, const RvACurve& curve) {
  TextOut out(path);
  out.line("area_km2,recall");
  for (size_t i = 0; i < curve.area_km2.size(); ++i) {
    out.line(fmt("%.6f", curve.area_km2[i]) + "," + fmt("%.6f", curve.recall[i]));
  }
  out.close();
}

void write_threshold_table(const std::filesystem::path& path, const std::string& method,
                           std::span<const EvalRecord> records, double earth_radius_km) {
  std::vector<double> min_areas, errors;
  min_areas.reserve(records.size());
  errors.reserve(records.size());
  for (const EvalRecord& r : records) {
    min_areas.push_back(r.min_area_km2);
    errors.push_back(r.gcd_km);
  }
  const std::array<double, 5> gcd = gcd_recall(errors);
  TextOut out(path);
  out.line(
      "method,rva_1km,rva_25km,rva_200km,rva_750km,rva_2500km,"
      "gcd_1km,gcd_25km,gcd_200km,gcd_750km,gcd_2500km");
  std::string row = method;
  for (double radius : kGcdThresholdsKm) {
    row += "," + fmt("%.6f", recall_at(min_areas, spherical_cap_area_km2(radius, earth_radius_km)));
  }
  for (double v : gcd) row += "," + fmt("%.6f", v);
  out.line(row);
  out.close();
}

// Per-bucket curve files for every bucket that has records.
void write_bucket_curves(const std::filesystem::path& dir, const std::string& stem,
                         std::span<const EvalRecord> records, uint32_t n_buckets) {
  for (uint32_t b = 0; b < n_buckets; ++b) {
    std::vector<double> areas;
    for (const EvalRecord& r : records) {
      if (r.bucket == int32_t(b)) areas.push_back(r.min_area_km2);
    }
    if (areas.empty()) continue;
    write_curve_csv(dir / (stem + std::to_string(b) + ".csv"), rva_curve(areas));
  }
}

}  // namespace

EvalOutputs cmd_eval(const EvalConfig& config) {
  if (config.out_dir.empty()) fail(Errc::invalid_argument, "output directory required");
  const GlobalGrid grid(config.grid_height, config.grid_width, config.earth_radius_km);
  const PixelAreaMap areas(grid);
  const ImageManifest manifest = read_manifest(config.manifest_csv);
  if (manifest.rows.empty()) fail(Errc::data, config.manifest_csv.string() + ": no images");
  const std::vector<LoadedMember> members = load_members(config, areas);

  // Optional bucket assignment from a label grid at each ground-truth pixel.
  std::vector<int32_t> buckets;
  uint32_t n_buckets = 0;
  if (!config.bucket_labels_grv.empty()) {
    AnyRaster r = read_raster(config.bucket_labels_grv);
    LabelGrid* g = std::get_if<LabelGrid>(&r);
    if (!g) {
      fail(Errc::data, config.bucket_labels_grv.string() + ": bucket raster must hold labels");
    }
    const LabelJoin join = label_images(manifest, *g, grid);
    buckets = join.labels;
    for (int32_t b : buckets) n_buckets = std::max(n_buckets, uint32_t(b + 1));
    if (n_buckets == 0) {
      fail(Errc::data, "no image falls on a labeled bucket pixel");
    }
  } else if (config.balanced) {
    fail(Errc::invalid_argument, "balanced evaluation needs bucket labels");
  }

  const size_t n = manifest.rows.size();
  std::vector<EvalRecord> results(n);
  std::vector<uint8_t> evaluated(n, 0);
  EvalOutputs out;

  // Images any member cannot score are skipped up front, warn-and-continue.
  std::vector<uint8_t> runnable(n, 1);
  for (size_t i = 0; i < n; ++i) {
    for (const LoadedMember& m : members) {
      if (!m.is_indicator && !m.scores->find(manifest.rows[i].id)) {
        runnable[i] = 0;
        out.skipped.emplace_back(manifest.rows[i].id,
                                 "no scores in member '" + m.name + "'");
        break;
      }
    }
  }

  const auto eval_one = [&](size_t i) {
    const ImageRow& row = manifest.rows[i];
    const FactorizedMap map =
        build_image_map(members, row.id, config.grid_height, config.grid_width);
    EvalRecord rec = min_containing_area(map, row.point, areas);
    rec.image_id = row.id;
    rec.bucket = buckets.empty() ? -1 : buckets[i];
    results[i] = std::move(rec);
    evaluated[i] = 1;
  };

  uint32_t n_threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  n_threads = std::clamp<uint32_t>(n_threads, 1, uint32_t(std::min<size_t>(n, 0xFFFF)));
  if (n_threads <= 1) {
    for (size_t i = 0; i < n; ++i) {
      if (runnable[i]) eval_one(i);
    }
  } else {
    std::atomic<size_t> cursor{0};
    std::atomic<bool> stop{false};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (uint32_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        try {
          while (!stop.load(std::memory_order_relaxed)) {
            const size_t i = cursor.fetch_add(1);
            if (i >= n) break;
            if (runnable[i]) eval_one(i);
          }
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          stop.store(true);
        }
      });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  out.records.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    if (evaluated[i]) out.records.push_back(std::move(results[i]));
  }
  if (out.records.empty()) {
    fail(Errc::data, "every image was skipped; no member set could be evaluated");
  }

  std::filesystem::create_directories(config.out_dir);
  write_records_csv(config.out_dir / "eval.csv", out.records);
  {
    TextOut sk(config.out_dir / "skipped.csv");
    sk.line("image_id,reason");
    for (const auto& [id, reason] : out.skipped) sk.line(id + "," + reason);
    sk.close();
  }
  std::vector<double> min_areas;
  min_areas.reserve(out.records.size());
  for (const EvalRecord& r : out.records) min_areas.push_back(r.min_area_km2);
  write_curve_csv(config.out_dir / "curve.csv", rva_curve(min_areas));
  write_threshold_table(config.out_dir / "table.csv", config.run_name, out.records,
                        config.earth_radius_km);
  if (n_buckets > 0) {
    write_bucket_curves(config.out_dir, "curve_bucket", out.records, n_buckets);
  }

  if (config.balanced) {
    std::vector<int32_t> eval_buckets;
    eval_buckets.reserve(out.records.size());
    for (const EvalRecord& r : out.records) eval_buckets.push_back(r.bucket);
    const std::vector<size_t> pick =
        rebalance_indices(eval_buckets, n_buckets, config.seed);
    std::vector<EvalRecord> balanced;
    ImageManifest balanced_manifest;
    balanced.reserve(pick.size());
    for (size_t i : pick) {
      balanced.push_back(out.records[i]);
      const EvalRecord& r = out.records[i];
      // Recover the manifest row by id join (records preserve manifest order,
      // but skipped images shift indices).
      balanced_manifest.rows.push_back({r.image_id, {0, 0}});
    }
    {
      // Fill coordinates from the manifest in one pass.
      std::unordered_map<std::string, const ImageRow*> by_id;
      for (const ImageRow& row : manifest.rows) by_id.emplace(row.id, &row);
      for (ImageRow& row : balanced_manifest.rows) row.point = by_id.at(row.id)->point;
    }
    write_manifest(balanced_manifest, config.out_dir / "balanced_manifest.csv");
    write_records_csv(config.out_dir / "eval_balanced.csv", balanced);
    std::vector<double> bal_areas;
    bal_areas.reserve(balanced.size());
    for (const EvalRecord& r : balanced) bal_areas.push_back(r.min_area_km2);
    write_curve_csv(config.out_dir / "curve_balanced.csv", rva_curve(bal_areas));
    write_threshold_table(config.out_dir / "table_balanced.csv", config.run_name, balanced,
                          config.earth_radius_km);
    write_bucket_curves(config.out_dir, "curve_balanced_bucket", balanced, n_buckets);
  }
  return out;
}

std::string cmd_info(const std::filesystem::path& path, double earth_radius_km) {
  RasterRowReader reader(path);
  const RasterInfo& info = reader.info();
  std::ostringstream os;
  os << "height=" << info.height << " width=" << info.width << " dtype="
     << dtype_name(info.type) << "\n";
  const GlobalGrid grid(info.height, info.width, earth_radius_km);
  const PixelAreaMap areas(grid);

  if (info.type == RasterType::f32) {
    std::vector<float> row(info.width);
    double lo = 0, hi = 0, sum = 0;
    uint64_t finite = 0, non_finite = 0;
    for (uint32_t r = 0; r < info.height; ++r) {
      reader.read_rows(row.data(), 1);
      for (float v : row) {
        if (!std::isfinite(v)) {
          ++non_finite;
          continue;
        }
        if (finite == 0) {
          lo = hi = v;
        } else {
          lo = std::min(lo, double(v));
          hi = std::max(hi, double(v));
        }
        ++finite;
        sum += v;
      }
    }
    os << "finite=" << finite << " non_finite=" << non_finite << "\n";
    if (finite > 0) {
      os << "min=" << fmt("%.9g", lo) << " max=" << fmt("%.9g", hi) << " mean="
         << fmt("%.9g", sum / double(finite)) << "\n";
    }
    return os.str();
  }

  const bool wide = info.type == RasterType::u16;
  const uint32_t span = wide ? 0x10000u : 0x100u;
  const uint32_t sentinel = span - 1;
  std::vector<uint64_t> counts(span, 0);
  std::vector<double> acc(span, 0.0);
  std::vector<uint8_t> row8(wide ? 0 : info.width);
  std::vector<uint16_t> row16(wide ? info.width : 0);
  for (uint32_t r = 0; r < info.height; ++r) {
    const double a = areas.row_area(r);
    if (wide) {
      reader.read_rows(row16.data(), 1);
      for (uint16_t v : row16) {
        ++counts[v];
        acc[v] += a;
      }
    } else {
      reader.read_rows(row8.data(), 1);
      for (uint8_t v : row8) {
        ++counts[v];
        acc[v] += a;
      }
    }
  }
  for (uint32_t v = 0; v < span; ++v) {
    if (v == sentinel || counts[v] == 0) continue;
    os << "class " << v << ": pixels=" << counts[v] << " area_km2="
       << fmt("%.6f", acc[v]) << "\n";
  }
  // Rasters that use every value as a real label have nothing unlabeled;
  // printing a zero row would misread the sentinel as a class.
  if (counts[sentinel] > 0) {
    os << "unlabeled: pixels=" << counts[sentinel] << " area_km2="
       << fmt("%.6f", acc[sentinel]) << "\n";
  }
  return os.str();
}

void cmd_rebalance(const RebalanceConfig& config) {
  const ImageManifest manifest = read_manifest(config.manifest_csv);
  AnyRaster r = read_raster(config.bucket_labels_grv);
  LabelGrid* labels = std::get_if<LabelGrid>(&r);
  if (!labels) {
    fail(Errc::data, config.bucket_labels_grv.string() + ": bucket raster must hold labels");
  }
  const GlobalGrid grid(labels->height(), labels->width(), config.earth_radius_km);
  const LabelJoin join = label_images(manifest, *labels, grid);
  uint32_t n_buckets = config.n_buckets;
  if (n_buckets == 0) {
    for (int32_t b : join.labels) n_buckets = std::max(n_buckets, uint32_t(b + 1));
    if (n_buckets == 0) fail(Errc::data, "no image falls on a labeled bucket pixel");
  }
  const ImageManifest balanced = rebalance(manifest, join.labels, n_buckets, config.seed);
  write_manifest(balanced, config.out_csv);
}

void cmd_rasterize_cells(const RasterizeConfig& config) {
  if (config.cells_csv.empty() == config.polygons_txt.empty()) {
    fail(Errc::invalid_argument, "exactly one of cells or polygons input required");
  }
  if (config.out_grv.empty()) fail(Errc::invalid_argument, "output raster path required");
  const GlobalGrid grid(config.grid_height, config.grid_width, config.earth_radius_km);
  const PixelAreaMap areas(grid);
  const ClassMaskSet set =
      config.cells_csv.empty()
          ? ClassMaskSet::rasterize_polygons(read_polygons(config.polygons_txt), areas)
          : ClassMaskSet::rasterize_cells(read_cells(config.cells_csv), areas);
  write_raster(*set.labels, config.out_grv);
  std::filesystem::path areas_path = config.out_areas_csv;
  if (areas_path.empty()) {
    areas_path = config.out_grv;
    areas_path.replace_extension("csv");
  }
  TextOut out(areas_path);
  out.line("cell_id,grid_value,area_km2");
  for (size_t i = 0; i < set.class_ids.size(); ++i) {
    out.line(std::to_string(set.class_ids[i]) + "," + std::to_string(set.grid_values[i]) +
             "," + fmt("%.6f", set.class_areas[i]));
  }
  out.close();
}

void cmd_downsample(const std::filesystem::path& in, const std::filesystem::path& out,
                    uint32_t target_h, uint32_t target_w, DownsampleKernel kernel) {
  RasterRowReader reader(in);
  const RasterInfo& info = reader.info();
  if (info.type == RasterType::f32) {
    fail(Errc::data, in.string() + ": block downsampling works on label rasters only");
  }
  check_block_factors(info, target_h, target_w);
  const uint32_t bh = info.height / target_h;
  const uint32_t bw = info.width / target_w;
  RasterRowWriter writer(out, {target_h, target_w, info.type});
  const bool wide = info.type == RasterType::u16;
  std::vector<uint8_t> block8(wide ? 0 : size_t(bh) * info.width);
  std::vector<uint16_t> block16(wide ? size_t(bh) * info.width : 0);
  std::vector<uint8_t> out8(wide ? 0 : target_w);
  std::vector<uint16_t> out16(wide ? target_w : 0);
  ModeFilter filter;
  for (uint32_t r = 0; r < target_h; ++r) {
    if (wide) {
      reader.read_rows(block16.data(), bh);
      if (kernel == DownsampleKernel::mode) {
        filter.block_rows(block16.data(), info.width, bh, bw, out16.data(), target_w);
      } else {
        const uint16_t* mid = block16.data() + size_t(bh / 2) * info.width;
        for (uint32_t j = 0; j < target_w; ++j) out16[j] = mid[size_t(j) * bw + bw / 2];
      }
      writer.write_rows(out16.data(), 1);
    } else {
      reader.read_rows(block8.data(), bh);
      if (kernel == DownsampleKernel::mode) {
        filter.block_rows(block8.data(), info.width, bh, bw, out8.data(), target_w);
      } else {
        const uint8_t* mid = block8.data() + size_t(bh / 2) * info.width;
        for (uint32_t j = 0; j < target_w; ++j) out8[j] = mid[size_t(j) * bw + bw / 2];
      }
      writer.write_rows(out8.data(), 1);
    }
  }
  writer.finish();
}

void cmd_densify(const EvalConfig& config, const std::string& image_id, double scale,
                 const std::filesystem::path& out_grv) {
  if (out_grv.empty()) fail(Errc::invalid_argument, "output raster path required");
  const GlobalGrid grid(config.grid_height, config.grid_width, config.earth_radius_km);
  const PixelAreaMap areas(grid);
  const std::vector<LoadedMember> members = load_members(config, areas);
  const FactorizedMap map =
      build_image_map(members, image_id, config.grid_height, config.grid_width);
  RasterRowWriter writer(out_grv, {config.grid_height, config.grid_width, RasterType::f32});
  std::vector<float> row(config.grid_width);
  size_t q = 0;
  for (uint32_t r = 0; r < config.grid_height; ++r) {
    for (uint32_t c = 0; c < config.grid_width; ++c, ++q) {
      row[c] = float(map.value_at(q) * scale);
    }
    writer.write_rows(row.data(), 1);
  }
  writer.finish();
}

}  // namespace georva
