#include "csvio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <unordered_set>

namespace georva {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

CsvReader::CsvReader(const std::filesystem::path& path, std::vector<std::string> columns)
    : in_(path), path_(path), columns_(std::move(columns)) {
  if (!in_) fail(Errc::io, "cannot open " + path.string());
  std::string header;
  if (!std::getline(in_, header)) {
    fail(Errc::format, path.string() + ": missing header row");
  }
  ++line_no_;
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const std::vector<std::string> names = split_line(header);
  header_cols_ = names.size();
  map_.reserve(columns_.size());
  for (const std::string& want : columns_) {
    const auto it = std::find(names.begin(), names.end(), want);
    if (it == names.end()) {
      fail(Errc::format, path.string() + ": header lacks column '" + want + "'");
    }
    map_.push_back(size_t(it - names.begin()));
  }
}

bool CsvReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fields_ = split_line(line);
    if (fields_.size() != header_cols_) {
      fail_row(Errc::format, "expected " + std::to_string(header_cols_) +
                                 " fields, found " + std::to_string(fields_.size()));
    }
    return true;
  }
  return false;
}

double CsvReader::number(size_t column) const {
  const std::string& s = field(column);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || !std::isfinite(v)) {
    fail_row(Errc::data,
             "bad number '" + s + "' in column '" + columns_[column] + "'");
  }
  return v;
}

int64_t CsvReader::integer(size_t column) const {
  const std::string& s = field(column);
  int64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    fail_row(Errc::data,
             "bad integer '" + s + "' in column '" + columns_[column] + "'");
  }
  return v;
}

void CsvReader::fail_row(Errc code, const std::string& msg) const {
  fail(code, path_.string() + ":" + std::to_string(line_no_) + ": " + msg);
}

ImageManifest read_manifest(const std::filesystem::path& path) {
  CsvReader r(path, {"image_id", "lat", "lon"});
  ImageManifest m;
  std::unordered_set<std::string> seen;
  while (r.next()) {
    ImageRow row;
    row.id = r.field(0);
    if (row.id.empty()) r.fail_row(Errc::data, "empty image_id");
    if (!seen.insert(row.id).second) {
      r.fail_row(Errc::data, "duplicate image_id '" + row.id + "'");
    }
    try {
      row.point = normalize_point(r.number(1), r.number(2));
    } catch (const Error& e) {
      r.fail_row(Errc::data, e.what());
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

void write_manifest(const ImageManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io, "cannot create " + path.string());
  out << "image_id,lat,lon\n";
  char buf[80];
  for (const ImageRow& row : m.rows) {
    std::snprintf(buf, sizeof(buf), ",%.9g,%.9g\n", row.point.lat, row.point.lon);
    out << row.id << buf;
  }
  out.flush();
  if (!out) fail(Errc::io, "write failed for " + path.string());
}

ScoreTable ScoreTable::read(const std::filesystem::path& path) {
  CsvReader r(path, {"image_id", "id", "prob"});
  ScoreTable t;
  while (r.next()) {
    const std::string& image = r.field(0);
    if (image.empty()) r.fail_row(Errc::data, "empty image_id");
    const int64_t id = r.integer(1);
    const double prob = r.number(2);
    if (prob < 0.0) {
      r.fail_row(Errc::data, "negative probability for image '" + image + "'");
    }
    t.by_image_[image].emplace_back(id, prob);
  }
  for (auto& [image, v] : t.by_image_) {
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i > 0 && v[i].first == v[i - 1].first) {
        fail(Errc::data, path.string() + ": duplicate id " +
                             std::to_string(v[i].first) + " for image '" + image + "'");
      }
      sum += v[i].second;
    }
    if (!(sum > 0.0)) {
      fail(Errc::data, path.string() + ": image '" + image +
                           "' has an all-zero score vector");
    }
  }
  return t;
}

const ScoreVector* ScoreTable::find(const std::string& image_id) const {
  const auto it = by_image_.find(image_id);
  return it == by_image_.end() ? nullptr : &it->second;
}

}  // namespace georva
