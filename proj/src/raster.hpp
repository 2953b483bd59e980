#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <variant>
#include <vector>

#include "error.hpp"

namespace georva {

// GRV1 on-disk layout: 4-byte magic "GRV1", u32 LE height, u32 LE width,
// u8 dtype (0 = float32, 1 = uint8, 2 = uint16), 3 reserved zero bytes,
// then height*width row-major little-endian values, row 0 northmost.
// Geographic registration is implicit: full globe, edges at +/-90 / +/-180.
enum class RasterType : uint8_t { f32 = 0, u8 = 1, u16 = 2 };

inline constexpr size_t kGrv1HeaderSize = 16;

size_t raster_value_size(RasterType t);

template <typename T>
class Raster {
 public:
  Raster(uint32_t height, uint32_t width, T fill = T{})
      : height_(height), width_(width), data_(size_t(height) * width, fill) {
    if (height < 1 || width < 1) fail(Errc::invalid_argument, "raster dimensions must be >= 1");
  }
  Raster(uint32_t height, uint32_t width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != size_t(height) * width) {
      fail(Errc::dimension, "raster payload size does not match dimensions");
    }
  }

  uint32_t height() const { return height_; }
  uint32_t width() const { return width_; }
  size_t size() const { return data_.size(); }

  T operator()(uint32_t r, uint32_t c) const { return data_[size_t(r) * width_ + c]; }
  T& operator()(uint32_t r, uint32_t c) { return data_[size_t(r) * width_ + c]; }

  std::span<const T> values() const { return data_; }
  std::span<T> values() { return data_; }
  std::span<const T> row(uint32_t r) const {
    return std::span<const T>(data_).subspan(size_t(r) * width_, width_);
  }

 private:
  uint32_t height_;
  uint32_t width_;
  std::vector<T> data_;
};

using FloatGrid = Raster<float>;

/** Grid of small-integer class labels with u8 or u16 storage. The all-ones
    value of the storage width (255 / 65535) is reserved as the no-label
    sentinel. */
class LabelGrid {
 public:
  static constexpr uint32_t kNoLabel8 = 0xFFu;
  static constexpr uint32_t kNoLabel16 = 0xFFFFu;

  explicit LabelGrid(Raster<uint8_t> narrow);
  explicit LabelGrid(Raster<uint16_t> wide);
  // Grid filled with a constant label; wide selects u16 storage.
  static LabelGrid filled(uint32_t height, uint32_t width, uint32_t value, bool wide);

  bool wide() const { return wide_; }
  uint32_t height() const { return height_; }
  uint32_t width() const { return width_; }
  size_t size() const { return size_t(height_) * width_; }

  uint32_t no_label() const { return wide_ ? kNoLabel16 : kNoLabel8; }
  // Size of a lookup table covering every storable label value.
  uint32_t table_span() const { return wide_ ? 0x10000u : 0x100u; }
  uint32_t max_label() const { return no_label() - 1; }

  uint32_t at(size_t q) const { return wide_ ? d16_[q] : d8_[q]; }
  uint32_t at(uint32_t r, uint32_t c) const { return at(size_t(r) * width_ + c); }
  void set(size_t q, uint32_t v);
  void set(uint32_t r, uint32_t c, uint32_t v) { set(size_t(r) * width_ + c, v); }

  const uint8_t* data8() const { return wide_ ? nullptr : d8_.data(); }
  const uint16_t* data16() const { return wide_ ? d16_.data() : nullptr; }
  std::span<const uint8_t> values8() const { return d8_; }
  std::span<const uint16_t> values16() const { return d16_; }

 private:
  LabelGrid() = default;
  bool wide_ = false;
  uint32_t height_ = 0;
  uint32_t width_ = 0;
  std::vector<uint8_t> d8_;
  std::vector<uint16_t> d16_;
};

using AnyRaster = std::variant<FloatGrid, LabelGrid>;

struct RasterInfo {
  uint32_t height = 0;
  uint32_t width = 0;
  RasterType type = RasterType::f32;
};

RasterInfo raster_info(const AnyRaster& r);

AnyRaster read_raster(const std::filesystem::path& path);
RasterInfo peek_raster(const std::filesystem::path& path);  // header only
void write_raster(const AnyRaster& r, const std::filesystem::path& path);
void write_raster(const FloatGrid& r, const std::filesystem::path& path);
void write_raster(const LabelGrid& r, const std::filesystem::path& path);

// Row-streaming access for rasters too large to hold in memory.
class RasterRowReader {
 public:
  explicit RasterRowReader(const std::filesystem::path& path);
  const RasterInfo& info() const { return info_; }
  size_t value_size() const { return raster_value_size(info_.type); }
  // Reads n full rows into dst (n * width * value_size bytes). Short files
  // raise a format error with the failing byte offset.
  void read_rows(void* dst, uint32_t n);

 private:
  std::ifstream in_;
  std::filesystem::path path_;
  RasterInfo info_;
  uint32_t rows_read_ = 0;
};

class RasterRowWriter {
 public:
  RasterRowWriter(const std::filesystem::path& path, const RasterInfo& info);
  void write_rows(const void* src, uint32_t n);
  void finish();  // validates the full payload was written

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  RasterInfo info_;
  uint32_t rows_written_ = 0;
  bool finished_ = false;
};

enum class DownsampleKernel { mode, nearest };

/** Reusable modal filter over label blocks. Ties go to the smallest label. */
class ModeFilter {
 public:
  // One output row from block_h input rows; src_w must equal dst_w * block_w.
  template <typename T>
  void block_rows(const T* src, uint32_t src_w, uint32_t block_h, uint32_t block_w,
                  T* dst, uint32_t dst_w);

 private:
  void ensure(size_t span);
  std::vector<uint32_t> count_;
  std::vector<uint64_t> stamp_;
  uint64_t epoch_ = 0;
};

// Block downsampling of a label grid. Source dimensions must be integer
// multiples of the target dimensions.
LabelGrid downsample(const LabelGrid& src, uint32_t target_h, uint32_t target_w,
                     DownsampleKernel kernel = DownsampleKernel::mode);

// Per-value counts (table_span entries) for info dumps and class areas.
std::vector<uint64_t> label_histogram(const LabelGrid& g);

struct FloatStats {
  double min = 0, max = 0, mean = 0;
  uint64_t finite = 0, non_finite = 0;
};
FloatStats float_stats(const FloatGrid& g);

}  // namespace georva
