#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csvio.hpp"
#include "ensemble.hpp"
#include "geogrid.hpp"

namespace georva {

/** Outcome of evaluating one image against a probability map.
    min_area_km2 is the spherical area of every pixel scoring at least the
    ground-truth pixel's value (ties included); a ground-truth value of 0
    therefore yields the full Earth area. The top-1 prediction exists only
    when the map is positive somewhere; without it, gcd_km stays infinite so
    the image counts as a miss at every distance threshold. */
struct EvalRecord {
  std::string image_id;
  double min_area_km2 = 0.0;
  double p_star = 0.0;
  bool has_top1 = false;
  GeoPoint top1;
  double gcd_km = std::numeric_limits<double>::infinity();
  int32_t bucket = -1;  // -1 = no bucket assigned
};

// Streaming single-pass evaluation: threshold count, running row maxima, and
// the ground-truth lookup share one traversal; no sort, no materialized map.
EvalRecord min_containing_area(const FactorizedMap& map, const GeoPoint& gt,
                               const PixelAreaMap& areas);

// Center of the highest-valued pixel (ties: smallest row, then column) and
// its great-circle distance to the ground truth. All-zero maps error.
std::pair<GeoPoint, double> gcd_top1(const FactorizedMap& map, const GeoPoint& gt,
                                     const PixelAreaMap& areas);

/** Empirical recall-vs-area curve: recall(a) = fraction of images whose
    min_area_km2 is <= a. Thresholds ascend; recall is non-decreasing. */
struct RvACurve {
  std::vector<double> area_km2;
  std::vector<double> recall;
};

// Curve at the given thresholds, or at every distinct min_area (the exact
// empirical CDF) when thresholds is empty. Records must be non-empty.
RvACurve rva_curve(std::span<const double> min_areas_km2,
                   std::span<const double> thresholds_km2 = {});
// Step-function evaluation of a curve at one area budget.
double curve_recall_at(const RvACurve& curve, double area_km2);
// Fraction of min_areas <= area (closed threshold).
double recall_at(std::span<const double> min_areas_km2, double area_km2);

inline constexpr std::array<double, 5> kGcdThresholdsKm{1.0, 25.0, 200.0, 750.0, 2500.0};

// Fraction of errors <= each distance threshold; infinite errors never hit.
std::array<double, 5> gcd_recall(std::span<const double> errors_km);

/** Counter-based generator (SplitMix64) driving every sampling decision, so
    balanced subsets reproduce bit-for-bit from the seed alone. */
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}
  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  uint64_t state_;
};

// Equal-size stratified subsample: draws min-bucket-count images from every
// bucket without replacement. buckets[i] is image i's stratum, -1 = skip the
// image entirely. Returns selected indices ordered by (bucket, index). An
// empty stratum in [0, n_buckets) is an error naming the bucket.
std::vector<size_t> rebalance_indices(std::span<const int32_t> buckets,
                                      uint32_t n_buckets, uint64_t seed);
ImageManifest rebalance(const ImageManifest& manifest, std::span<const int32_t> buckets,
                        uint32_t n_buckets, uint64_t seed);

// Ground-truth grid label per image; -1 where the pixel is unlabeled or the
// coordinates are invalid. Invalid rows are reported, not fatal.
struct LabelJoin {
  std::vector<int32_t> labels;
  std::vector<std::pair<size_t, std::string>> errors;  // (row index, reason)
};
LabelJoin label_images(const ImageManifest& manifest, const LabelGrid& labels,
                       const GlobalGrid& grid);

/** Per-bucket curve comparison between two runs over the same images. */
struct BucketBreakdown {
  std::vector<RvACurve> curves_a;
  std::vector<RvACurve> curves_b;
  // recall_b - recall_a at the union of both curves' thresholds.
  std::vector<RvACurve> deltas;
};

std::vector<RvACurve> per_bucket_curves(std::span<const EvalRecord> records,
                                        uint32_t n_buckets);
RvACurve rva_improvement(const RvACurve& a, const RvACurve& b);
BucketBreakdown per_bucket_breakdown(std::span<const EvalRecord> a,
                                     std::span<const EvalRecord> b, uint32_t n_buckets);

}  // namespace georva
