#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "geogrid.hpp"

namespace georva {

/** Line-oriented CSV reader. Dialect: comma separators, '.' decimals, UTF-8,
    mandatory header row, no quoting. Columns are addressed by the position of
    their name in the `columns` list passed at construction; extra columns in
    the file are ignored, missing ones are a format error. */
class CsvReader {
 public:
  CsvReader(const std::filesystem::path& path, std::vector<std::string> columns);

  // Advances to the next data row; false at end of file. Blank lines skip.
  bool next();

  const std::string& field(size_t column) const { return fields_[map_[column]]; }
  double number(size_t column) const;    // finite double, else data error
  int64_t integer(size_t column) const;  // base-10 integer, else data error

  size_t line() const { return line_no_; }
  // Raises `code` with "path:line: msg" context.
  [[noreturn]] void fail_row(Errc code, const std::string& msg) const;

 private:
  std::ifstream in_;
  std::filesystem::path path_;
  std::vector<std::string> columns_;
  std::vector<size_t> map_;  // declared column -> index in the file's header
  std::vector<std::string> fields_;
  size_t header_cols_ = 0;
  size_t line_no_ = 0;
};

struct ImageRow {
  std::string id;
  GeoPoint point;
};

/** Ordered image list with ground-truth coordinates (manifest.csv:
    image_id,lat,lon). Ids are unique; coordinates validated on read. */
struct ImageManifest {
  std::vector<ImageRow> rows;
};

ImageManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const ImageManifest& m, const std::filesystem::path& path);

/** One image's sparse class scores: (class-or-cell id, probability). */
using ScoreVector = std::vector<std::pair<int64_t, double>>;

/** Per-image sparse score rows (scores.csv: image_id,id,prob). Probabilities
    are nonnegative, at most one row per (image, id), and each listed image's
    total is positive. Sparse top-k lists are fine; sums need not be 1. */
class ScoreTable {
 public:
  static ScoreTable read(const std::filesystem::path& path);

  // Scores for one image, or nullptr if the image has no rows.
  const ScoreVector* find(const std::string& image_id) const;
  size_t image_count() const { return by_image_.size(); }

 private:
  std::unordered_map<std::string, ScoreVector> by_image_;
};

}  // namespace georva
