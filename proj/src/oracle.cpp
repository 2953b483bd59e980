#include "oracle.hpp"

#include <algorithm>
#include <numeric>

namespace georva {

namespace {

void check_size(size_t pixels) {
  if (pixels > kOracleMaxPixels) {
    fail(Errc::resource, "oracle limited to " + std::to_string(kOracleMaxPixels) +
                             " pixels, got " + std::to_string(pixels));
  }
}

void check_grid(uint32_t h, uint32_t w, const GlobalGrid& grid) {
  if (h != grid.height() || w != grid.width()) {
    fail(Errc::dimension, "dense map does not match the evaluation grid");
  }
}

}  // namespace

double oracle_min_area(const DenseMap& dense, const GeoPoint& gt,
                       const PixelAreaMap& areas) {
  check_size(dense.size());
  const GlobalGrid& grid = areas.grid();
  check_grid(dense.height(), dense.width(), grid);
  const GeoPoint g = normalize_point(gt.lat, gt.lon);
  const size_t qg = grid.pixel_offset(grid.locate(g));
  const auto vals = dense.values();

  std::vector<size_t> order(vals.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return vals[a] > vals[b]; });

  std::vector<uint8_t> selected(vals.size(), 0);
  bool reached = false;
  for (size_t i = 0; i < order.size() && !reached;) {
    const double v = vals[order[i]];  // take one whole tie group
    size_t j = i;
    for (; j < order.size() && vals[order[j]] == v; ++j) {
      selected[order[j]] = 1;
      if (order[j] == qg) reached = true;
    }
    i = j;
  }
  if (!reached) fail(Errc::data, "internal error: ground-truth pixel never ranked");

  double area = 0.0;
  uint64_t covered = 0;
  for (uint32_t r = 0; r < grid.height(); ++r) {
    uint64_t cnt = 0;
    const size_t base = size_t(r) * grid.width();
    for (uint32_t c = 0; c < grid.width(); ++c) cnt += selected[base + c];
    covered += cnt;
    area += double(cnt) * areas.row_area(r);
  }
  // Full coverage is the sphere by definition; partial sums can round an ulp
  // past it, so the analytic total is also a hard ceiling. Mirrors the
  // streaming evaluator exactly.
  if (covered == vals.size()) return grid.total_area_km2();
  return std::min(area, grid.total_area_km2());
}

std::pair<GeoPoint, double> oracle_top1(const DenseMap& dense, const GeoPoint& gt,
                                        const PixelAreaMap& areas) {
  check_size(dense.size());
  const GlobalGrid& grid = areas.grid();
  check_grid(dense.height(), dense.width(), grid);
  const GeoPoint g = normalize_point(gt.lat, gt.lon);
  const auto vals = dense.values();

  double best = -1.0;
  size_t best_q = 0;
  for (size_t q = 0; q < vals.size(); ++q) {
    if (vals[q] > best) {
      best = vals[q];
      best_q = q;
    }
  }
  if (!(best > 0.0)) {
    fail(Errc::data, "map is zero everywhere; no top-1 prediction exists");
  }
  const GeoPoint center =
      grid.pixel_center(uint32_t(best_q / grid.width()), uint32_t(best_q % grid.width()));
  return {center, great_circle_km(center, g, grid.earth_radius_km())};
}

DenseMap oracle_dense_ensemble(const std::vector<ScoreVector>& member_scores,
                               const std::vector<const ClassMaskSet*>& member_masks,
                               uint32_t height, uint32_t width) {
  check_size(size_t(height) * width);
  if (member_scores.size() != member_masks.size()) {
    fail(Errc::invalid_argument, "one score vector per mask set required");
  }
  DenseMap out(height, width, 1.0);
  auto acc = out.values();
  for (size_t m = 0; m < member_scores.size(); ++m) {
    const ClassMaskSet& masks = *member_masks[m];
    const LabelGrid& labels = *masks.labels;
    if (labels.height() != height || labels.width() != width) {
      fail(Errc::dimension, "mask set grid does not match the requested dimensions");
    }
    // Per-class float32 values addressed by the label the grid stores.
    std::vector<float> by_value(labels.table_span(), 0.0f);
    for (const auto& [id, p] : member_scores[m]) {
      if (!(p >= 0.0)) {
        fail(Errc::data, "negative or non-finite score for class " + std::to_string(id));
      }
      const auto it = masks.index_of.find(id);
      if (it == masks.index_of.end()) {
        fail(Errc::data, "scored class id " + std::to_string(id) + " is not in the mask set");
      }
      if (p == 0.0) continue;
      const double area = masks.class_areas[it->second];
      if (area <= 0.0) {
        fail(Errc::data, "class " + std::to_string(id) +
                             " has zero area but a positive score");
      }
      by_value[masks.grid_values[it->second]] = float(p / area);
    }
    FloatGrid member(height, width);
    auto mv = member.values();
    for (size_t q = 0; q < mv.size(); ++q) mv[q] = by_value[labels.at(q)];
    for (size_t q = 0; q < acc.size(); ++q) acc[q] *= double(mv[q]);
  }
  return out;
}

}  // namespace georva
