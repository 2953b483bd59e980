#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

namespace georva {

namespace {

/** Flat view of one factor for the hot loop: exactly one of n8/n16 is set,
    and the table is the factor's float32 table widened (exactly) to double so
    the product runs entirely in 64-bit. */
struct FactorView {
  const uint8_t* n8 = nullptr;
  const uint16_t* n16 = nullptr;
  const double* table = nullptr;
};

struct KernelData {
  std::vector<std::vector<double>> wide_tables;
  std::vector<FactorView> views;
};

KernelData prepare_views(const FactorizedMap& map) {
  KernelData kd;
  kd.wide_tables.reserve(map.factors().size());
  kd.views.reserve(map.factors().size());
  for (const Factor& f : map.factors()) {
    kd.wide_tables.emplace_back(f.table.begin(), f.table.end());
    FactorView v;
    v.n8 = f.labels->data8();
    v.n16 = f.labels->data16();
    v.table = kd.wide_tables.back().data();
    kd.views.push_back(v);
  }
  return kd;
}

// Product of table lookups at pixel q, multiplied in factor-list order.
// K < 0 is the runtime-count fallback for maps with many factors.
template <int K>
inline double pixel_value(const FactorView* fv, size_t q, int nk) {
  double v = 1.0;
  const int n = K >= 0 ? K : nk;
  for (int k = 0; k < n; ++k) {
    const uint32_t lbl = fv[k].n8 ? uint32_t(fv[k].n8[q]) : uint32_t(fv[k].n16[q]);
    v *= fv[k].table[lbl];
  }
  return v;
}

struct ScanResult {
  double area = 0.0;      // total area of pixels with value >= p_star
  uint64_t covered = 0;   // how many pixels passed the threshold
  double max = -1.0;      // global maximum value
  uint32_t max_row = 0;   // first row attaining it
};

// Single fused pass: per-row threshold count (converted to area with the
// shared per-row pixel area) plus a running row maximum for the argmax.
template <int K>
ScanResult scan(const FactorView* fv, int nk, uint32_t h, uint32_t w, double p_star,
                std::span<const double> row_areas) {
  ScanResult res;
  size_t q = 0;
  for (uint32_t r = 0; r < h; ++r) {
    uint64_t cnt = 0;
    double rmax = -1.0;
    for (uint32_t c = 0; c < w; ++c, ++q) {
      const double v = pixel_value<K>(fv, q, nk);
      cnt += v >= p_star ? 1 : 0;
      rmax = v > rmax ? v : rmax;
    }
    res.area += double(cnt) * row_areas[r];
    res.covered += cnt;
    if (rmax > res.max) {
      res.max = rmax;
      res.max_row = r;
    }
  }
  return res;
}

template <int K>
uint32_t find_max_col(const FactorView* fv, int nk, uint32_t row, uint32_t w,
                      double target) {
  const size_t base = size_t(row) * w;
  for (uint32_t c = 0; c < w; ++c) {
    if (pixel_value<K>(fv, base + c, nk) == target) return c;
  }
  fail(Errc::data, "internal error: row maximum vanished on rescan");
}

template <typename F>
void dispatch_k(size_t k, F&& f) {
  switch (k) {
    case 0: f(std::integral_constant<int, 0>{}); break;
    case 1: f(std::integral_constant<int, 1>{}); break;
    case 2: f(std::integral_constant<int, 2>{}); break;
    case 3: f(std::integral_constant<int, 3>{}); break;
    case 4: f(std::integral_constant<int, 4>{}); break;
    default: f(std::integral_constant<int, -1>{}); break;
  }
}

}  // namespace

EvalRecord min_containing_area(const FactorizedMap& map, const GeoPoint& gt,
                               const PixelAreaMap& areas) {
  const GlobalGrid& grid = areas.grid();
  if (grid.height() != map.height() || grid.width() != map.width()) {
    fail(Errc::dimension, "probability map does not match the evaluation grid");
  }
  const GeoPoint g = normalize_point(gt.lat, gt.lon);
  const size_t qg = grid.pixel_offset(grid.locate(g));

  const KernelData kd = prepare_views(map);
  const FactorView* fv = kd.views.data();
  const int nk = int(kd.views.size());

  EvalRecord rec;
  dispatch_k(kd.views.size(), [&](auto kc) {
    constexpr int K = std::decay_t<decltype(kc)>::value;
    rec.p_star = pixel_value<K>(fv, qg, nk);
    const ScanResult s =
        scan<K>(fv, nk, grid.height(), grid.width(), rec.p_star, areas.row_areas());
    // Full coverage is the sphere by definition; partial sums can round an
    // ulp past the analytic total, which is therefore a hard ceiling. The
    // reference implementation applies the identical rule.
    rec.min_area_km2 = s.covered == grid.pixel_count()
                           ? grid.total_area_km2()
                           : std::min(s.area, grid.total_area_km2());
    if (s.max > 0.0) {
      rec.has_top1 = true;
      const uint32_t col = find_max_col<K>(fv, nk, s.max_row, grid.width(), s.max);
      rec.top1 = grid.pixel_center(s.max_row, col);
      rec.gcd_km = great_circle_km(rec.top1, g, grid.earth_radius_km());
    }
  });
  return rec;
}

std::pair<GeoPoint, double> gcd_top1(const FactorizedMap& map, const GeoPoint& gt,
                                     const PixelAreaMap& areas) {
  const EvalRecord rec = min_containing_area(map, gt, areas);
  if (!rec.has_top1) {
    fail(Errc::data, "map is zero everywhere; no top-1 prediction exists");
  }
  return {rec.top1, rec.gcd_km};
}

RvACurve rva_curve(std::span<const double> min_areas_km2,
                   std::span<const double> thresholds_km2) {
  if (min_areas_km2.empty()) fail(Errc::invalid_argument, "no evaluation records");
  std::vector<double> sorted(min_areas_km2.begin(), min_areas_km2.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = double(sorted.size());

  RvACurve curve;
  if (thresholds_km2.empty()) {
    curve.area_km2.assign(sorted.begin(), sorted.end());
    curve.area_km2.erase(std::unique(curve.area_km2.begin(), curve.area_km2.end()),
                         curve.area_km2.end());
  } else {
    curve.area_km2.assign(thresholds_km2.begin(), thresholds_km2.end());
    std::sort(curve.area_km2.begin(), curve.area_km2.end());
  }
  curve.recall.reserve(curve.area_km2.size());
  for (double t : curve.area_km2) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
    curve.recall.push_back(double(it - sorted.begin()) / n);
  }
  return curve;
}

double curve_recall_at(const RvACurve& curve, double area_km2) {
  const auto it =
      std::upper_bound(curve.area_km2.begin(), curve.area_km2.end(), area_km2);
  if (it == curve.area_km2.begin()) return 0.0;
  return curve.recall[size_t(it - curve.area_km2.begin()) - 1];
}

double recall_at(std::span<const double> min_areas_km2, double area_km2) {
  if (min_areas_km2.empty()) fail(Errc::invalid_argument, "no evaluation records");
  size_t hits = 0;
  for (double a : min_areas_km2) hits += a <= area_km2 ? 1 : 0;
  return double(hits) / double(min_areas_km2.size());
}

std::array<double, 5> gcd_recall(std::span<const double> errors_km) {
  if (errors_km.empty()) fail(Errc::invalid_argument, "no distance errors");
  std::array<double, 5> out{};
  for (size_t t = 0; t < kGcdThresholdsKm.size(); ++t) {
    size_t hits = 0;
    for (double e : errors_km) hits += e <= kGcdThresholdsKm[t] ? 1 : 0;
    out[t] = double(hits) / double(errors_km.size());
  }
  return out;
}

std::vector<size_t> rebalance_indices(std::span<const int32_t> buckets,
                                      uint32_t n_buckets, uint64_t seed) {
  if (n_buckets == 0) fail(Errc::invalid_argument, "bucket count must be >= 1");
  std::vector<std::vector<size_t>> pools(n_buckets);
  for (size_t i = 0; i < buckets.size(); ++i) {
    const int32_t b = buckets[i];
    if (b < 0) continue;
    if (uint32_t(b) >= n_buckets) {
      fail(Errc::data, "image " + std::to_string(i) + " has bucket " +
                           std::to_string(b) + " outside [0, " +
                           std::to_string(n_buckets) + ")");
    }
    pools[b].push_back(i);
  }
  size_t n_min = SIZE_MAX;
  for (uint32_t b = 0; b < n_buckets; ++b) {
    if (pools[b].empty()) {
      fail(Errc::data, "bucket " + std::to_string(b) + " has no images to sample");
    }
    n_min = std::min(n_min, pools[b].size());
  }
  std::vector<size_t> out;
  out.reserve(size_t(n_buckets) * n_min);
  for (uint32_t b = 0; b < n_buckets; ++b) {
    std::vector<size_t>& pool = pools[b];
    // Partial Fisher-Yates over the bucket's images in manifest order; one
    // independent stream per bucket keeps draws stable if buckets grow.
    SplitMix64 rng(seed + (uint64_t(b) + 1) * 0x9E3779B97F4A7C15ull);
    for (size_t i = 0; i < n_min; ++i) {
      const size_t j = i + size_t(rng.next() % uint64_t(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    std::sort(pool.begin(), pool.begin() + ptrdiff_t(n_min));
    out.insert(out.end(), pool.begin(), pool.begin() + ptrdiff_t(n_min));
  }
  return out;
}

ImageManifest rebalance(const ImageManifest& manifest, std::span<const int32_t> buckets,
                        uint32_t n_buckets, uint64_t seed) {
  if (buckets.size() != manifest.rows.size()) {
    fail(Errc::dimension, "bucket list does not match the manifest length");
  }
  ImageManifest out;
  for (size_t i : rebalance_indices(buckets, n_buckets, seed)) {
    out.rows.push_back(manifest.rows[i]);
  }
  return out;
}

LabelJoin label_images(const ImageManifest& manifest, const LabelGrid& labels,
                       const GlobalGrid& grid) {
  if (labels.height() != grid.height() || labels.width() != grid.width()) {
    fail(Errc::dimension, "label grid does not match the evaluation grid");
  }
  LabelJoin join;
  join.labels.assign(manifest.rows.size(), -1);
  for (size_t i = 0; i < manifest.rows.size(); ++i) {
    const ImageRow& row = manifest.rows[i];
    try {
      const GeoPoint p = normalize_point(row.point.lat, row.point.lon);
      const PixelIndex px = grid.locate(p);
      const uint32_t v = labels.at(px.row, px.col);
      if (v != labels.no_label()) join.labels[i] = int32_t(v);
    } catch (const Error& e) {
      join.errors.emplace_back(i, e.what());
    }
  }
  return join;
}

std::vector<RvACurve> per_bucket_curves(std::span<const EvalRecord> records,
                                        uint32_t n_buckets) {
  std::vector<std::vector<double>> areas(n_buckets);
  for (const EvalRecord& rec : records) {
    if (rec.bucket < 0 || uint32_t(rec.bucket) >= n_buckets) {
      fail(Errc::data, "record '" + rec.image_id + "' has no bucket in [0, " +
                           std::to_string(n_buckets) + ")");
    }
    areas[size_t(rec.bucket)].push_back(rec.min_area_km2);
  }
  std::vector<RvACurve> curves;
  curves.reserve(n_buckets);
  for (uint32_t b = 0; b < n_buckets; ++b) {
    if (areas[b].empty()) {
      fail(Errc::data, "bucket " + std::to_string(b) + " has no records");
    }
    curves.push_back(rva_curve(areas[b]));
  }
  return curves;
}

RvACurve rva_improvement(const RvACurve& a, const RvACurve& b) {
  RvACurve delta;
  delta.area_km2.reserve(a.area_km2.size() + b.area_km2.size());
  delta.area_km2.insert(delta.area_km2.end(), a.area_km2.begin(), a.area_km2.end());
  delta.area_km2.insert(delta.area_km2.end(), b.area_km2.begin(), b.area_km2.end());
  std::sort(delta.area_km2.begin(), delta.area_km2.end());
  delta.area_km2.erase(std::unique(delta.area_km2.begin(), delta.area_km2.end()),
                       delta.area_km2.end());
  delta.recall.reserve(delta.area_km2.size());
  for (double t : delta.area_km2) {
    delta.recall.push_back(curve_recall_at(b, t) - curve_recall_at(a, t));
  }
  return delta;
}

BucketBreakdown per_bucket_breakdown(std::span<const EvalRecord> a,
                                     std::span<const EvalRecord> b, uint32_t n_buckets) {
  const auto ids = [](std::span<const EvalRecord> recs) {
    std::vector<std::string> v;
    v.reserve(recs.size());
    for (const EvalRecord& r : recs) v.push_back(r.image_id);
    std::sort(v.begin(), v.end());
    return v;
  };
  if (ids(a) != ids(b)) {
    fail(Errc::data, "record sets do not cover the same images");
  }
  BucketBreakdown out;
  out.curves_a = per_bucket_curves(a, n_buckets);
  out.curves_b = per_bucket_curves(b, n_buckets);
  out.deltas.reserve(n_buckets);
  for (uint32_t bkt = 0; bkt < n_buckets; ++bkt) {
    out.deltas.push_back(rva_improvement(out.curves_a[bkt], out.curves_b[bkt]));
  }
  return out;
}

}  // namespace georva
