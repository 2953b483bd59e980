#include "raster.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

static_assert(std::endian::native == std::endian::little,
              "GRV1 I/O assumes a little-endian host");

namespace georva {

size_t raster_value_size(RasterType t) {
  switch (t) {
    case RasterType::f32: return 4;
    case RasterType::u8: return 1;
    case RasterType::u16: return 2;
  }
  fail(Errc::invalid_argument, "unknown raster type");
}

LabelGrid::LabelGrid(Raster<uint8_t> narrow)
    : wide_(false), height_(narrow.height()), width_(narrow.width()) {
  auto v = narrow.values();
  d8_.assign(v.begin(), v.end());
}

LabelGrid::LabelGrid(Raster<uint16_t> wide)
    : wide_(true), height_(wide.height()), width_(wide.width()) {
  auto v = wide.values();
  d16_.assign(v.begin(), v.end());
}

LabelGrid LabelGrid::filled(uint32_t height, uint32_t width, uint32_t value, bool wide) {
  if (wide) return LabelGrid(Raster<uint16_t>(height, width, uint16_t(value)));
  if (value > kNoLabel8) fail(Errc::invalid_argument, "label does not fit u8 storage");
  return LabelGrid(Raster<uint8_t>(height, width, uint8_t(value)));
}

void LabelGrid::set(size_t q, uint32_t v) {
  if (v > (wide_ ? kNoLabel16 : kNoLabel8)) {
    fail(Errc::invalid_argument, "label " + std::to_string(v) + " does not fit storage width");
  }
  if (wide_) {
    d16_[q] = uint16_t(v);
  } else {
    d8_[q] = uint8_t(v);
  }
}

RasterInfo raster_info(const AnyRaster& r) {
  if (const auto* f = std::get_if<FloatGrid>(&r)) {
    return {f->height(), f->width(), RasterType::f32};
  }
  const auto& g = std::get<LabelGrid>(r);
  return {g.height(), g.width(), g.wide() ? RasterType::u16 : RasterType::u8};
}

namespace {

constexpr char kMagic[4] = {'G', 'R', 'V', '1'};

RasterInfo parse_header(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char hdr[kGrv1HeaderSize];
  in.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  if (in.gcount() != std::streamsize(sizeof(hdr))) {
    fail(Errc::format, path.string() + ": truncated header at offset " +
                           std::to_string(in.gcount()) + " (need 16 bytes)");
  }
  if (std::memcmp(hdr, kMagic, 4) != 0) {
    fail(Errc::format, path.string() + ": bad magic at offset 0");
  }
  RasterInfo info;
  std::memcpy(&info.height, hdr + 4, 4);
  std::memcpy(&info.width, hdr + 8, 4);
  const uint8_t dtype = hdr[12];
  if (dtype > 2) {
    fail(Errc::format, path.string() + ": unknown dtype " + std::to_string(dtype) +
                           " at offset 12");
  }
  info.type = RasterType(dtype);
  if (hdr[13] != 0 || hdr[14] != 0 || hdr[15] != 0) {
    fail(Errc::format, path.string() + ": nonzero reserved bytes at offset 13");
  }
  if (info.height < 1 || info.width < 1) {
    fail(Errc::format, path.string() + ": zero dimension in header");
  }
  return info;
}

void write_header(std::ofstream& out, const RasterInfo& info) {
  unsigned char hdr[kGrv1HeaderSize] = {};
  std::memcpy(hdr, kMagic, 4);
  std::memcpy(hdr + 4, &info.height, 4);
  std::memcpy(hdr + 8, &info.width, 4);
  hdr[12] = uint8_t(info.type);
  out.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
}

template <typename T>
Raster<T> read_payload(std::ifstream& in, const std::filesystem::path& path,
                       const RasterInfo& info) {
  const size_t n = size_t(info.height) * info.width;
  std::vector<T> data;
  try {
    data.resize(n);
  } catch (const std::bad_alloc&) {
    fail(Errc::resource, path.string() + ": raster too large to load");
  }
  in.read(reinterpret_cast<char*>(data.data()), std::streamsize(n * sizeof(T)));
  if (in.gcount() != std::streamsize(n * sizeof(T))) {
    fail(Errc::format,
         path.string() + ": truncated payload at offset " +
             std::to_string(kGrv1HeaderSize + size_t(in.gcount())) + " (expected " +
             std::to_string(n * sizeof(T)) + " payload bytes)");
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    fail(Errc::format, path.string() + ": trailing bytes after offset " +
                           std::to_string(kGrv1HeaderSize + n * sizeof(T)));
  }
  return Raster<T>(info.height, info.width, std::move(data));
}

}  // namespace

AnyRaster read_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  const RasterInfo info = parse_header(in, path);
  switch (info.type) {
    case RasterType::f32: return read_payload<float>(in, path, info);
    case RasterType::u8: return LabelGrid(read_payload<uint8_t>(in, path, info));
    case RasterType::u16: return LabelGrid(read_payload<uint16_t>(in, path, info));
  }
  fail(Errc::format, "unreachable");
}

RasterInfo peek_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  return parse_header(in, path);
}

namespace {

void write_all(const std::filesystem::path& path, const RasterInfo& info,
               const void* payload, size_t bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot create " + path.string());
  write_header(out, info);
  out.write(static_cast<const char*>(payload), std::streamsize(bytes));
  out.flush();
  if (!out) fail(Errc::io, "write failed for " + path.string());
}

}  // namespace

void write_raster(const FloatGrid& r, const std::filesystem::path& path) {
  write_all(path, {r.height(), r.width(), RasterType::f32}, r.values().data(),
            r.size() * sizeof(float));
}

void write_raster(const LabelGrid& r, const std::filesystem::path& path) {
  if (r.wide()) {
    write_all(path, {r.height(), r.width(), RasterType::u16}, r.values16().data(),
              r.size() * sizeof(uint16_t));
  } else {
    write_all(path, {r.height(), r.width(), RasterType::u8}, r.values8().data(), r.size());
  }
}

void write_raster(const AnyRaster& r, const std::filesystem::path& path) {
  std::visit([&](const auto& g) { write_raster(g, path); }, r);
}

RasterRowReader::RasterRowReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary), path_(path) {
  if (!in_) fail(Errc::io, "cannot open " + path.string());
  info_ = parse_header(in_, path_);
}

void RasterRowReader::read_rows(void* dst, uint32_t n) {
  if (rows_read_ + n > info_.height) {
    fail(Errc::invalid_argument, path_.string() + ": reading past last row");
  }
  const size_t bytes = size_t(n) * info_.width * value_size();
  in_.read(static_cast<char*>(dst), std::streamsize(bytes));
  if (in_.gcount() != std::streamsize(bytes)) {
    const size_t row_bytes = size_t(info_.width) * value_size();
    fail(Errc::format,
         path_.string() + ": truncated payload at offset " +
             std::to_string(kGrv1HeaderSize + size_t(rows_read_) * row_bytes +
                            size_t(in_.gcount())));
  }
  rows_read_ += n;
  if (rows_read_ == info_.height && in_.peek() != std::ifstream::traits_type::eof()) {
    fail(Errc::format, path_.string() + ": trailing bytes after payload");
  }
}

RasterRowWriter::RasterRowWriter(const std::filesystem::path& path, const RasterInfo& info)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path), info_(info) {
  if (!out_) fail(Errc::io, "cannot create " + path.string());
  write_header(out_, info_);
}

void RasterRowWriter::write_rows(const void* src, uint32_t n) {
  if (rows_written_ + n > info_.height) {
    fail(Errc::invalid_argument, path_.string() + ": writing past last row");
  }
  const size_t bytes = size_t(n) * info_.width * raster_value_size(info_.type);
  out_.write(static_cast<const char*>(src), std::streamsize(bytes));
  if (!out_) fail(Errc::io, "write failed for " + path_.string());
  rows_written_ += n;
}

void RasterRowWriter::finish() {
  if (rows_written_ != info_.height) {
    fail(Errc::data, path_.string() + ": wrote " + std::to_string(rows_written_) +
                         " of " + std::to_string(info_.height) + " rows");
  }
  out_.flush();
  if (!out_) fail(Errc::io, "write failed for " + path_.string());
  finished_ = true;
}

void ModeFilter::ensure(size_t span) {
  if (count_.size() < span) {
    count_.assign(span, 0);
    stamp_.assign(span, 0);
    epoch_ = 0;
  }
}

template <typename T>
void ModeFilter::block_rows(const T* src, uint32_t src_w, uint32_t block_h,
                            uint32_t block_w, T* dst, uint32_t dst_w) {
  ensure(size_t(std::numeric_limits<T>::max()) + 1);
  for (uint32_t j = 0; j < dst_w; ++j) {
    ++epoch_;
    uint32_t best_count = 0;
    uint32_t best_label = 0;
    const T* block = src + size_t(j) * block_w;
    for (uint32_t r = 0; r < block_h; ++r) {
      const T* row = block + size_t(r) * src_w;
      for (uint32_t c = 0; c < block_w; ++c) {
        const uint32_t v = row[c];
        if (stamp_[v] != epoch_) {
          stamp_[v] = epoch_;
          count_[v] = 0;
        }
        const uint32_t n = ++count_[v];
        if (n > best_count || (n == best_count && v < best_label)) {
          best_count = n;
          best_label = v;
        }
      }
    }
    dst[j] = T(best_label);
  }
}

template void ModeFilter::block_rows<uint8_t>(const uint8_t*, uint32_t, uint32_t, uint32_t,
                                              uint8_t*, uint32_t);
template void ModeFilter::block_rows<uint16_t>(const uint16_t*, uint32_t, uint32_t, uint32_t,
                                               uint16_t*, uint32_t);

namespace {

template <typename T>
Raster<T> downsample_typed(std::span<const T> src, uint32_t src_h, uint32_t src_w,
                           uint32_t target_h, uint32_t target_w, DownsampleKernel kernel) {
  const uint32_t bh = src_h / target_h;
  const uint32_t bw = src_w / target_w;
  Raster<T> out(target_h, target_w);
  if (kernel == DownsampleKernel::mode) {
    ModeFilter filter;
    for (uint32_t i = 0; i < target_h; ++i) {
      filter.block_rows(src.data() + size_t(i) * bh * src_w, src_w, bh, bw,
                        &out(i, 0), target_w);
    }
  } else {
    // Nearest source pixel to the target pixel center; even block sizes land on
    // a shared edge, which belongs to the south/east pixel.
    for (uint32_t i = 0; i < target_h; ++i) {
      const T* row = src.data() + (size_t(i) * bh + bh / 2) * src_w;
      for (uint32_t j = 0; j < target_w; ++j) {
        out(i, j) = row[size_t(j) * bw + bw / 2];
      }
    }
  }
  return out;
}

}  // namespace

LabelGrid downsample(const LabelGrid& src, uint32_t target_h, uint32_t target_w,
                     DownsampleKernel kernel) {
  if (target_h < 1 || target_w < 1 || src.height() % target_h != 0 ||
      src.width() % target_w != 0) {
    fail(Errc::dimension, "source " + std::to_string(src.height()) + "x" +
                              std::to_string(src.width()) +
                              " is not an integer multiple of target " +
                              std::to_string(target_h) + "x" + std::to_string(target_w));
  }
  if (src.wide()) {
    return LabelGrid(downsample_typed<uint16_t>(src.values16(), src.height(), src.width(),
                                                target_h, target_w, kernel));
  }
  return LabelGrid(downsample_typed<uint8_t>(src.values8(), src.height(), src.width(),
                                             target_h, target_w, kernel));
}

std::vector<uint64_t> label_histogram(const LabelGrid& g) {
  std::vector<uint64_t> counts(g.table_span(), 0);
  if (g.wide()) {
    for (uint16_t v : g.values16()) ++counts[v];
  } else {
    for (uint8_t v : g.values8()) ++counts[v];
  }
  return counts;
}

FloatStats float_stats(const FloatGrid& g) {
  FloatStats s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (float v : g.values()) {
    if (!std::isfinite(v)) {
      ++s.non_finite;
      continue;
    }
    ++s.finite;
    sum += v;
    if (v < s.min) s.min = v;
    if (v > s.max) s.max = v;
  }
  if (s.finite == 0) {
    s.min = s.max = s.mean = 0.0;
  } else {
    s.mean = sum / double(s.finite);
  }
  return s;
}

}  // namespace georva
