#include "ensemble.hpp"

namespace georva {

FactorizedMap::FactorizedMap(uint32_t height, uint32_t width)
    : height_(height), width_(width) {
  if (height < 1 || width < 1) fail(Errc::invalid_argument, "map dimensions must be >= 1");
}

void FactorizedMap::push(Factor f) {
  if (!f.labels) fail(Errc::invalid_argument, "factor has no label grid");
  if (f.labels->height() != height_ || f.labels->width() != width_) {
    fail(Errc::dimension, "factor grid " + std::to_string(f.labels->height()) + "x" +
                              std::to_string(f.labels->width()) + " does not match map " +
                              std::to_string(height_) + "x" + std::to_string(width_));
  }
  if (f.table.size() != f.labels->table_span()) {
    fail(Errc::dimension, "factor table does not cover the label span");
  }
  for (float v : f.table) {
    if (!(v >= 0.0f)) fail(Errc::data, "factor table entries must be >= 0 and finite");
  }
  factors_.push_back(std::move(f));
}

double FactorizedMap::value_at(size_t q) const {
  double v = 1.0;
  for (const Factor& f : factors_) v *= f.value_at(q);
  return v;
}

FactorizedMap product(const std::vector<FactorizedMap>& maps) {
  if (maps.empty()) fail(Errc::invalid_argument, "product of no maps");
  FactorizedMap out(maps.front().height(), maps.front().width());
  for (const FactorizedMap& m : maps) {
    if (m.height() != out.height() || m.width() != out.width()) {
      fail(Errc::dimension, "ensemble members use different grid dimensions");
    }
    for (const Factor& f : m.factors()) out.push(f);
  }
  return out;
}

Factor assemble(const ScoreVector& scores, const ClassMaskSet& masks) {
  Factor f;
  f.labels = masks.labels;
  f.table.assign(masks.labels->table_span(), 0.0f);
  for (const auto& [id, p] : scores) {
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
    f.table[masks.grid_values[it->second]] = float(p / area);
  }
  return f;
}

Factor indicator(const ClassMaskSet& masks, const std::vector<int64_t>& class_ids) {
  if (class_ids.empty()) fail(Errc::invalid_argument, "indicator over an empty class set");
  Factor f;
  f.labels = masks.labels;
  f.table.assign(masks.labels->table_span(), 0.0f);
  for (int64_t id : class_ids) {
    const auto it = masks.index_of.find(id);
    if (it == masks.index_of.end()) {
      fail(Errc::invalid_argument, "unknown class id " + std::to_string(id));
    }
    f.table[masks.grid_values[it->second]] = 1.0f;
  }
  return f;
}

Factor ones_factor(uint32_t height, uint32_t width) {
  Factor f;
  f.labels = std::make_shared<const LabelGrid>(
      LabelGrid::filled(height, width, 0, /*wide=*/false));
  f.table.assign(f.labels->table_span(), 1.0f);
  return f;
}

namespace {

void check_budget(const FactorizedMap& map, size_t max_pixels) {
  if (map.pixel_count() > max_pixels) {
    fail(Errc::resource, "densify over " + std::to_string(map.pixel_count()) +
                             " pixels exceeds the " + std::to_string(max_pixels) +
                             "-pixel budget");
  }
}

}  // namespace

DenseMap densify(const FactorizedMap& map, size_t max_pixels) {
  check_budget(map, max_pixels);
  DenseMap out(map.height(), map.width(), 1.0);
  auto values = out.values();
  for (const Factor& f : map.factors()) {
    for (size_t q = 0; q < values.size(); ++q) values[q] *= f.value_at(q);
  }
  return out;
}

FloatGrid densify_f32(const FactorizedMap& map, double scale, size_t max_pixels) {
  check_budget(map, max_pixels);
  FloatGrid out(map.height(), map.width());
  auto values = out.values();
  for (size_t q = 0; q < values.size(); ++q) {
    values[q] = float(map.value_at(q) * scale);
  }
  return out;
}

}  // namespace georva
