#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "csvio.hpp"
#include "masks.hpp"
#include "raster.hpp"

namespace georva {

/** One multiplicative factor of a probability map: the value at pixel q is
    table[labels(q)]. Tables are stored float32; evaluation widens to double.
    Unlabeled pixels read the no-label slot, which assemble leaves at 0. */
struct Factor {
  std::shared_ptr<const LabelGrid> labels;
  std::vector<float> table;  // table_span() entries

  double value_at(size_t q) const { return double(table[labels->at(q)]); }
};

/** Product-form probability map over a fixed grid: value(q) is the product of
    every factor's lookup, multiplied in list order with a double accumulator.
    An empty factor list is the constant 1. */
class FactorizedMap {
 public:
  FactorizedMap(uint32_t height, uint32_t width);

  void push(Factor f);  // factor grids must match this map's dimensions
  const std::vector<Factor>& factors() const { return factors_; }
  uint32_t height() const { return height_; }
  uint32_t width() const { return width_; }
  size_t pixel_count() const { return size_t(height_) * width_; }

  // Reference evaluation path; the streaming evaluator lives in eval.
  double value_at(size_t q) const;

 private:
  uint32_t height_;
  uint32_t width_;
  std::vector<Factor> factors_;
};

// Pointwise product: concatenates factor lists; all maps must share a grid.
FactorizedMap product(const std::vector<FactorizedMap>& maps);

// Spreads each class score uniformly over its mask: table[class] = p / area.
// Scoring a zero-area class, an unknown class id, or a negative probability
// is an error; unscored classes and unlabeled pixels read 0.
Factor assemble(const ScoreVector& scores, const ClassMaskSet& masks);

// Indicator over the chosen classes: 1 on their pixels, 0 elsewhere
// (unnormalized; only the ordering of map values matters downstream).
Factor indicator(const ClassMaskSet& masks, const std::vector<int64_t>& class_ids);

// The constant-1 factor on its own single-label grid: the multiplicative
// identity at every pixel, including pixels other factors leave unlabeled.
Factor ones_factor(uint32_t height, uint32_t width);

/** Explicit per-pixel map, used by tests, oracles, and raster export. */
using DenseMap = Raster<double>;

inline constexpr size_t kDensifyMaxPixels = 64'000'000;

DenseMap densify(const FactorizedMap& map, size_t max_pixels = kDensifyMaxPixels);
// Same product narrowed to float32 at the end, for GRV1 export.
FloatGrid densify_f32(const FactorizedMap& map, double scale = 1.0,
                      size_t max_pixels = kDensifyMaxPixels);

}  // namespace georva
