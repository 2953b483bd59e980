#include "masks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_set>

#include "csvio.hpp"

namespace georva {

void BucketRangeScan::feed(std::span<const float> values, float nodata) {
  for (float v : values) {
    if (!std::isfinite(v) || v == nodata) continue;
    ++land_;
    if (v > 0.0f) {
      const double x = std::log10(double(v));
      if (positive_ == 0) {
        lo_ = hi_ = x;
      } else {
        lo_ = std::min(lo_, x);
        hi_ = std::max(hi_, x);
      }
      ++positive_;
    }
  }
}

BucketSpec BucketRangeScan::finish(uint32_t n, float nodata) const {
  if (n < 2 || n > 255) {
    fail(Errc::invalid_argument, "bucket count must be in [2, 255], got " + std::to_string(n));
  }
  if (land_ == 0) fail(Errc::data, "density raster has no land pixels");
  if (positive_ == 0) fail(Errc::data, "density raster has no positive densities");
  if (lo_ == hi_) {
    fail(Errc::data, "degenerate density range: every positive density is 10^" +
                         std::to_string(lo_));
  }
  BucketSpec spec;
  spec.n_buckets = n;
  spec.nodata_value = nodata;
  spec.edges.resize(size_t(n) + 1);
  for (uint32_t i = 0; i <= n; ++i) {
    spec.edges[i] = (i == n) ? hi_ : lo_ + (hi_ - lo_) * double(i) / double(n);
  }
  for (uint32_t i = 0; i < n; ++i) {
    if (!(spec.edges[i] < spec.edges[i + 1])) {
      fail(Errc::data, "density range too narrow for " + std::to_string(n) + " buckets");
    }
  }
  return spec;
}

BucketSpec build_buckets(const FloatGrid& density, uint32_t n, float nodata) {
  BucketRangeScan scan;
  scan.feed(density.values(), nodata);
  return scan.finish(n, nodata);
}

std::optional<uint32_t> bucket_of(const BucketSpec& spec, float density) {
  if (!std::isfinite(density) || density == spec.nodata_value) return std::nullopt;
  if (density <= 0.0f) return 0;  // zero-count land sits in the lowest bucket
  const double x = std::log10(double(density));
  const auto it = std::upper_bound(spec.edges.begin(), spec.edges.end(), x);
  const int64_t b = (it - spec.edges.begin()) - 1;
  return uint32_t(std::clamp<int64_t>(b, 0, int64_t(spec.n_buckets) - 1));
}

LabelGrid bucketize(const FloatGrid& density, const BucketSpec& spec) {
  LabelGrid out = LabelGrid::filled(density.height(), density.width(),
                                    LabelGrid::kNoLabel8, /*wide=*/false);
  const auto src = density.values();
  for (size_t q = 0; q < src.size(); ++q) {
    if (const auto b = bucket_of(spec, src[q])) out.set(q, *b);
  }
  return out;
}

MergeMap::MergeMap(std::vector<std::pair<uint32_t, int64_t>> pairs) {
  if (pairs.empty()) fail(Errc::invalid_argument, "empty merge table");
  int64_t max_dst = -1;
  for (const auto& [src, dst] : pairs) {
    if (src > 0xFFFEu) {
      fail(Errc::data, "source code " + std::to_string(src) + " out of label range");
    }
    if (dst != kDropped && (dst < 0 || dst > 0xFFFE)) {
      fail(Errc::data, "merged class " + std::to_string(dst) + " out of label range");
    }
    if (!map_.emplace(src, dst).second) {
      fail(Errc::data, "duplicate source code " + std::to_string(src) + " in merge table");
    }
    max_dst = std::max(max_dst, dst);
  }
  class_count_ = uint32_t(max_dst + 1);
}

MergeMap MergeMap::land_cover_default() {
  std::vector<std::pair<uint32_t, int64_t>> pairs = {{0, kDropped}};
  const auto add = [&](uint32_t from, uint32_t to, int64_t cls) {
    for (uint32_t code = from; code <= to; code += 10) pairs.emplace_back(code, cls);
  };
  add(10, 40, 0);    // cropland
  add(50, 60, 1);    // broadleaf tree cover
  add(70, 100, 2);   // other tree cover
  add(110, 150, 3);  // short vegetation
  add(160, 180, 4);  // flooded vegetation
  add(190, 190, 5);  // urban
  add(200, 220, 6);  // bare / water / ice
  return MergeMap(std::move(pairs));
}

MergeMap MergeMap::read(const std::filesystem::path& path) {
  CsvReader r(path, {"src_code", "dst_class"});
  std::vector<std::pair<uint32_t, int64_t>> pairs;
  while (r.next()) {
    const int64_t src = r.integer(0);
    const int64_t dst = r.integer(1);
    if (src < 0 || src > 0xFFFE) r.fail_row(Errc::data, "source code out of label range");
    if (dst < kDropped) r.fail_row(Errc::data, "merged class below -1");
    pairs.emplace_back(uint32_t(src), dst);
  }
  if (pairs.empty()) fail(Errc::data, path.string() + ": no merge rows");
  return MergeMap(std::move(pairs));
}

std::optional<int64_t> MergeMap::lookup(uint32_t src_code) const noexcept {
  const auto it = map_.find(src_code);
  return it == map_.end() ? std::nullopt : std::optional<int64_t>(it->second);
}

std::optional<uint32_t> MergeMap::merged(uint32_t src_code) const {
  const auto entry = lookup(src_code);
  if (!entry) fail(Errc::data, "unmapped class code " + std::to_string(src_code));
  return *entry == kDropped ? std::nullopt : std::optional<uint32_t>(uint32_t(*entry));
}

LabelGrid apply_merge(const LabelGrid& labels, const MergeMap& m) {
  // Dense transfer table over the source label span; -2 marks unmapped codes,
  // which only error if the grid actually contains them.
  const uint32_t span = labels.table_span();
  const uint32_t src_nolabel = labels.no_label();
  std::vector<int64_t> table(span, -2);
  int64_t max_dst = -1;
  for (uint32_t code = 0; code < span; ++code) {
    if (const auto entry = m.lookup(code)) {
      table[code] = *entry;
      max_dst = std::max(max_dst, *entry);
    }
  }
  const bool wide = max_dst > int64_t(LabelGrid::kNoLabel8) - 1;
  LabelGrid out = LabelGrid::filled(labels.height(), labels.width(),
                                    wide ? LabelGrid::kNoLabel16 : LabelGrid::kNoLabel8, wide);
  for (size_t q = 0; q < labels.size(); ++q) {
    const uint32_t v = labels.at(q);
    if (v == src_nolabel) continue;
    const int64_t dst = table[v];
    if (dst == -2) fail(Errc::data, "unmapped class code " + std::to_string(v));
    if (dst != MergeMap::kDropped) out.set(q, uint32_t(dst));
  }
  return out;
}

std::vector<CellRect> read_cells(const std::filesystem::path& path) {
  CsvReader r(path, {"cell_id", "lat_min", "lat_max", "lon_min", "lon_max"});
  std::vector<CellRect> cells;
  std::unordered_set<int64_t> seen;
  while (r.next()) {
    CellRect c;
    c.id = r.integer(0);
    c.lat_min = r.number(1);
    c.lat_max = r.number(2);
    c.lon_min = r.number(3);
    c.lon_max = r.number(4);
    if (!seen.insert(c.id).second) {
      r.fail_row(Errc::data, "duplicate cell_id " + std::to_string(c.id));
    }
    if (c.lat_min < -90.0 || c.lat_max > 90.0 || !(c.lat_min < c.lat_max)) {
      r.fail_row(Errc::data, "invalid latitude range");
    }
    if (c.lon_min < -180.0 || c.lon_min > 180.0 || c.lon_max < -180.0 ||
        c.lon_max > 180.0 || c.lon_min == c.lon_max) {
      r.fail_row(Errc::data, "invalid longitude range");
    }
    cells.push_back(c);
  }
  return cells;
}

std::vector<CellPolygon> read_polygons(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  std::vector<CellPolygon> polys;
  std::string line;
  size_t line_no = 0;
  const auto fail_row = [&](Errc code, const std::string& msg) {
    fail(code, path.string() + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t semi = line.find(';');
    if (semi == std::string::npos) fail_row(Errc::format, "missing ';' after cell_id");
    CellPolygon p;
    {
      const auto [end, ec] = std::from_chars(line.data(), line.data() + semi, p.id);
      if (ec != std::errc{} || end != line.data() + semi) {
        fail_row(Errc::format, "bad cell_id '" + line.substr(0, semi) + "'");
      }
    }
    size_t start = semi + 1;
    while (start <= line.size()) {
      size_t comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      const std::string pair = line.substr(start, comma - start);
      double lon = 0, lat = 0;
      const char* s = pair.data();
      const char* e = s + pair.size();
      while (s < e && *s == ' ') ++s;
      auto r1 = std::from_chars(s, e, lon);
      if (r1.ec != std::errc{} || r1.ptr == e || *r1.ptr != ' ') {
        fail_row(Errc::format, "bad vertex '" + pair + "' (want 'lon lat')");
      }
      s = r1.ptr;
      while (s < e && *s == ' ') ++s;
      auto r2 = std::from_chars(s, e, lat);
      if (r2.ec != std::errc{} || r2.ptr != e) {
        fail_row(Errc::format, "bad vertex '" + pair + "' (want 'lon lat')");
      }
      if (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0) {
        fail_row(Errc::data, "vertex out of range in '" + pair + "'");
      }
      p.vertices.push_back({lat, lon});
      start = comma + 1;
    }
    if (p.vertices.size() < 3) fail_row(Errc::data, "polygon needs at least 3 vertices");
    polys.push_back(std::move(p));
  }
  return polys;
}

namespace {

// Per-label-value area sums over the whole grid; the no-label slot collects
// the unlabeled remainder.
std::vector<double> area_by_value(const LabelGrid& g, const PixelAreaMap& areas) {
  const GlobalGrid& grid = areas.grid();
  if (g.height() != grid.height() || g.width() != grid.width()) {
    fail(Errc::dimension, "label grid does not match the area map's grid");
  }
  std::vector<double> acc(g.table_span(), 0.0);
  for (uint32_t r = 0; r < g.height(); ++r) {
    const double a = areas.row_area(r);
    const size_t base = size_t(r) * g.width();
    if (g.wide()) {
      const uint16_t* row = g.data16() + base;
      for (uint32_t c = 0; c < g.width(); ++c) acc[row[c]] += a;
    } else {
      const uint8_t* row = g.data8() + base;
      for (uint32_t c = 0; c < g.width(); ++c) acc[row[c]] += a;
    }
  }
  return acc;
}

// Storage for dense cell indices 0..count-1 alongside the no-label sentinel.
bool needs_wide(size_t count) {
  if (count > 0xFFFF) fail(Errc::resource, "too many classes for u16 labels");
  return count > 0xFF;
}

}  // namespace

double ClassMaskSet::area_of(int64_t class_id) const {
  const auto it = index_of.find(class_id);
  if (it == index_of.end()) {
    fail(Errc::invalid_argument, "unknown class id " + std::to_string(class_id));
  }
  return class_areas[it->second];
}

ClassMaskSet ClassMaskSet::from_labels(LabelGrid labels, const PixelAreaMap& areas) {
  const std::vector<double> acc = area_by_value(labels, areas);
  ClassMaskSet set;
  for (uint32_t v = 0; v < labels.table_span(); ++v) {
    if (v == labels.no_label() || acc[v] == 0.0) continue;
    set.index_of.emplace(int64_t(v), uint32_t(set.class_ids.size()));
    set.class_ids.push_back(int64_t(v));
    set.grid_values.push_back(v);
    set.class_areas.push_back(acc[v]);
  }
  set.nodata_area = acc[labels.no_label()];
  set.labels = std::make_shared<const LabelGrid>(std::move(labels));
  return set;
}

namespace {

struct CellIndexer {
  const GlobalGrid& grid;

  // First row whose pixel-center latitude is below lat (rows run north to south).
  uint32_t first_row_below(double lat) const {
    uint32_t lo = 0, hi = grid.height();
    while (lo < hi) {
      const uint32_t mid = lo + (hi - lo) / 2;
      if (grid.pixel_center(mid, 0).lat < lat) hi = mid; else lo = mid + 1;
    }
    return lo;
  }
  // First column whose pixel-center longitude is >= lon.
  uint32_t first_col_at(double lon) const {
    uint32_t lo = 0, hi = grid.width();
    while (lo < hi) {
      const uint32_t mid = lo + (hi - lo) / 2;
      if (grid.pixel_center(0, mid).lon < lon) lo = mid + 1; else hi = mid;
    }
    return lo;
  }
};

void claim(LabelGrid& out, const ClassMaskSet& set, uint32_t r, uint32_t c,
           uint32_t index, int64_t id) {
  const uint32_t prev = out.at(r, c);
  if (prev != out.no_label()) {
    fail(Errc::data, "pixel (" + std::to_string(r) + "," + std::to_string(c) +
                         ") claimed by cells " + std::to_string(set.class_ids[prev]) +
                         " and " + std::to_string(id));
  }
  out.set(r, c, index);
}

void finish_set(ClassMaskSet& set, LabelGrid out, const PixelAreaMap& areas) {
  const std::vector<double> acc = area_by_value(out, areas);
  for (uint32_t i = 0; i < set.class_ids.size(); ++i) {
    set.class_areas.push_back(acc[i]);
  }
  set.nodata_area = acc[out.no_label()];
  set.labels = std::make_shared<const LabelGrid>(std::move(out));
}

}  // namespace

ClassMaskSet ClassMaskSet::rasterize_cells(const std::vector<CellRect>& cells,
                                           const PixelAreaMap& areas) {
  if (cells.empty()) fail(Errc::invalid_argument, "no cells to rasterize");
  const GlobalGrid& grid = areas.grid();
  const bool wide = needs_wide(cells.size());
  LabelGrid out = LabelGrid::filled(grid.height(), grid.width(),
                                    wide ? LabelGrid::kNoLabel16 : LabelGrid::kNoLabel8, wide);
  ClassMaskSet set;
  for (const CellRect& cell : cells) {
    if (!set.index_of.emplace(cell.id, uint32_t(set.class_ids.size())).second) {
      fail(Errc::data, "duplicate cell id " + std::to_string(cell.id));
    }
    set.class_ids.push_back(cell.id);
    set.grid_values.push_back(uint32_t(set.class_ids.size() - 1));
  }
  const CellIndexer ix{grid};
  for (uint32_t i = 0; i < cells.size(); ++i) {
    const CellRect& cell = cells[i];
    const uint32_t r0 = ix.first_row_below(cell.lat_max);
    const uint32_t r1 = ix.first_row_below(cell.lat_min);
    // One column range normally, two when the cell spans the antimeridian.
    std::pair<uint32_t, uint32_t> spans[2];
    size_t n_spans = 0;
    if (cell.lon_min < cell.lon_max) {
      spans[n_spans++] = {ix.first_col_at(cell.lon_min), ix.first_col_at(cell.lon_max)};
    } else {
      spans[n_spans++] = {ix.first_col_at(cell.lon_min), grid.width()};
      spans[n_spans++] = {0, ix.first_col_at(cell.lon_max)};
    }
    for (uint32_t r = r0; r < r1; ++r) {
      for (size_t s = 0; s < n_spans; ++s) {
        for (uint32_t c = spans[s].first; c < spans[s].second; ++c) {
          claim(out, set, r, c, i, cell.id);
        }
      }
    }
  }
  finish_set(set, std::move(out), areas);
  return set;
}

namespace {

// Even-odd rule with straight edges in (lon, lat) space.
bool point_in_polygon(const std::vector<GeoPoint>& v, double lat, double lon) {
  bool inside = false;
  for (size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if ((v[i].lat > lat) != (v[j].lat > lat)) {
      const double cross = v[i].lon + (lat - v[i].lat) * (v[j].lon - v[i].lon) /
                                          (v[j].lat - v[i].lat);
      if (lon < cross) inside = !inside;
    }
  }
  return inside;
}

}  // namespace

ClassMaskSet ClassMaskSet::rasterize_polygons(const std::vector<CellPolygon>& polys,
                                              const PixelAreaMap& areas) {
  if (polys.empty()) fail(Errc::invalid_argument, "no polygons to rasterize");
  const GlobalGrid& grid = areas.grid();
  const bool wide = needs_wide(polys.size());
  LabelGrid out = LabelGrid::filled(grid.height(), grid.width(),
                                    wide ? LabelGrid::kNoLabel16 : LabelGrid::kNoLabel8, wide);
  ClassMaskSet set;
  for (const CellPolygon& p : polys) {
    if (p.vertices.size() < 3) {
      fail(Errc::invalid_argument,
           "polygon " + std::to_string(p.id) + " needs at least 3 vertices");
    }
    if (!set.index_of.emplace(p.id, uint32_t(set.class_ids.size())).second) {
      fail(Errc::data, "duplicate cell id " + std::to_string(p.id));
    }
    set.class_ids.push_back(p.id);
    set.grid_values.push_back(uint32_t(set.class_ids.size() - 1));
  }
  const CellIndexer ix{grid};
  for (uint32_t i = 0; i < polys.size(); ++i) {
    const CellPolygon& p = polys[i];
    double lat_lo = 90, lat_hi = -90, lon_lo = 180, lon_hi = -180;
    for (const GeoPoint& v : p.vertices) {
      lat_lo = std::min(lat_lo, v.lat);
      lat_hi = std::max(lat_hi, v.lat);
      lon_lo = std::min(lon_lo, v.lon);
      lon_hi = std::max(lon_hi, v.lon);
    }
    const uint32_t r0 = ix.first_row_below(lat_hi);
    const uint32_t r1 = ix.first_row_below(lat_lo);
    const uint32_t c0 = ix.first_col_at(lon_lo);
    const uint32_t c1 = ix.first_col_at(lon_hi);
    for (uint32_t r = r0; r < r1; ++r) {
      const double lat = grid.pixel_center(r, 0).lat;
      for (uint32_t c = c0; c < c1; ++c) {
        if (point_in_polygon(p.vertices, lat, grid.pixel_center(r, c).lon)) {
          claim(out, set, r, c, i, p.id);
        }
      }
    }
  }
  finish_set(set, std::move(out), areas);
  return set;
}

}  // namespace georva
