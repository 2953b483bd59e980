#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "csvio.hpp"
#include "ensemble.hpp"
#include "geogrid.hpp"
#include "masks.hpp"

namespace georva {

// Reference implementations: deliberately literal, single-threaded, and
// guarded to small grids. They exist so any disputed production result can be
// re-derived independently on an extracted sub-region.
inline constexpr size_t kOracleMaxPixels = 1'000'000;

// Sort-descending / accumulate-until-ground-truth reference for the minimum
// containing area. Pixel selection follows the literal sorted-tie-group rule;
// the selected set's area is then summed in the same canonical row-major
// order as the streaming evaluator, so agreement is exact rather than
// ulp-close while any selection bug still shows up.
double oracle_min_area(const DenseMap& dense, const GeoPoint& gt,
                       const PixelAreaMap& areas);

// Exhaustive argmax over every pixel; ties go to the smallest (row, col).
// All-zero maps error.
std::pair<GeoPoint, double> oracle_top1(const DenseMap& dense, const GeoPoint& gt,
                                        const PixelAreaMap& areas);

// Literal ensemble materialization: each member's per-class value p/area is
// rounded to float32 (the stored table precision), expanded to an explicit
// grid, and the grids multiplied elementwise in member order with a double
// accumulator. Mirrors the factorized path's guards (unknown ids, positive
// score on a zero-area class).
DenseMap oracle_dense_ensemble(const std::vector<ScoreVector>& member_scores,
                               const std::vector<const ClassMaskSet*>& member_masks,
                               uint32_t height, uint32_t width);

}  // namespace georva
