#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cptrack/appearance.hpp"
#include "cptrack/detection.hpp"
#include "cptrack/pipeline.hpp"

namespace cptrack {

namespace detail {

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_double(const std::string& s, int line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing garbage");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  }
}

inline long parse_int(const std::string& s, int line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing garbage");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  }
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

// Detections CSV: `frame,id,left,top,width,height,conf[,label]` with id = -1.
// Ten-column MOT-style rows are accepted, their world coordinates ignored.
inline std::vector<RawDetection> parse_detections(const std::string& path) {
  std::vector<RawDetection> out;
  int line_no = 0;
  for (const std::string& line : detail::read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 7 && fields.size() != 8 && fields.size() != 10)
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected 7, 8 or 10 comma-separated fields");
    RawDetection d;
    d.frame = static_cast<int>(detail::parse_int(fields[0], line_no, "frame"));
    if (d.frame < 1)
      throw std::runtime_error("line " + std::to_string(line_no) + ": frames are 1-based");
    const long id = detail::parse_int(fields[1], line_no, "id");
    if (id != -1)
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": detection rows must carry id -1");
    d.box.left = detail::parse_double(fields[2], line_no, "left");
    d.box.top = detail::parse_double(fields[3], line_no, "top");
    d.box.width = detail::parse_double(fields[4], line_no, "width");
    d.box.height = detail::parse_double(fields[5], line_no, "height");
    if (d.box.width <= 0 || d.box.height <= 0)
      throw std::runtime_error("line " + std::to_string(line_no) + ": nonpositive box size");
    d.confidence = detail::parse_double(fields[6], line_no, "confidence");
    if (fields.size() == 8) {
      const long label = detail::parse_int(fields[7], line_no, "label");
      if (label >= 1) d.label = static_cast<int>(label);
      else if (label != -1)
        throw std::runtime_error("line " + std::to_string(line_no) + ": bad label");
    }
    d.provenance = Provenance::kDetector;
    out.push_back(d);
  }
  return out;
}

// Track CSV: `frame,track_id,left,top,width,height,1,provenance_flag` where
// the flag is 0 detector, 1 predicted, 2 interpolated. A 7-column file reads
// as all-detector.
inline TrackSet parse_tracks(const std::string& path) {
  TrackSet ts;
  int line_no = 0;
  for (const std::string& line : detail::read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 7 && fields.size() != 8)
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected 7 or 8 comma-separated fields");
    const int frame = static_cast<int>(detail::parse_int(fields[0], line_no, "frame"));
    const int id = static_cast<int>(detail::parse_int(fields[1], line_no, "track id"));
    if (frame < 1 || id < 1)
      throw std::runtime_error("line " + std::to_string(line_no) + ": bad frame or track id");
    TrackEntry e;
    e.frame = frame;
    e.box.left = detail::parse_double(fields[2], line_no, "left");
    e.box.top = detail::parse_double(fields[3], line_no, "top");
    e.box.width = detail::parse_double(fields[4], line_no, "width");
    e.box.height = detail::parse_double(fields[5], line_no, "height");
    if (e.box.width <= 0 || e.box.height <= 0)
      throw std::runtime_error("line " + std::to_string(line_no) + ": nonpositive box size");
    if (fields.size() == 8) {
      const long flag = detail::parse_int(fields[7], line_no, "provenance");
      if (flag < 0 || flag > 2)
        throw std::runtime_error("line " + std::to_string(line_no) + ": provenance must be 0..2");
      e.provenance = static_cast<Provenance>(flag);
    }
    ts.tracks[id].push_back(e);
  }
  for (auto& [id, entries] : ts.tracks) {
    std::sort(entries.begin(), entries.end(),
              [](const TrackEntry& a, const TrackEntry& b) { return a.frame < b.frame; });
    for (std::size_t i = 1; i < entries.size(); ++i)
      if (entries[i].frame == entries[i - 1].frame)
        throw std::runtime_error("track " + std::to_string(id) + ": duplicate frame " +
                                 std::to_string(entries[i].frame));
  }
  return ts;
}

inline void write_tracks(const TrackSet& ts, const std::string& path) {
  struct Row {
    int frame, id;
    const TrackEntry* e;
  };
  std::vector<Row> rows;
  for (const auto& [id, entries] : ts.tracks)
    for (const auto& e : entries) rows.push_back({e.frame, id, &e});
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.id < b.id;
  });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const Row& r : rows) {
    out << r.frame << ',' << r.id << ',' << detail::fmt_num(r.e->box.left) << ','
        << detail::fmt_num(r.e->box.top) << ',' << detail::fmt_num(r.e->box.width) << ','
        << detail::fmt_num(r.e->box.height) << ",1," << static_cast<int>(r.e->provenance)
        << "\n";
  }
}

inline void write_detections(const std::vector<RawDetection>& dets, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& d : dets) {
    out << d.frame << ",-1," << detail::fmt_num(d.box.left) << ',' << detail::fmt_num(d.box.top)
        << ',' << detail::fmt_num(d.box.width) << ',' << detail::fmt_num(d.box.height) << ','
        << detail::fmt_num(d.confidence);
    if (d.label >= 1) out << ',' << d.label;
    out << "\n";
  }
}

// Histogram sidecar: `frame,det_index,b_1,...,b_B` with 1-based per-frame
// detection indexes. Bins are renormalized on read.
inline std::map<std::pair<int, int>, ColorHistogram> parse_histograms(const std::string& path) {
  std::map<std::pair<int, int>, ColorHistogram> out;
  int line_no = 0;
  std::size_t bins = 0;
  for (const std::string& line : detail::read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() < 3)
      throw std::runtime_error("line " + std::to_string(line_no) + ": too few fields");
    if (bins == 0) bins = fields.size() - 2;
    if (fields.size() - 2 != bins)
      throw std::runtime_error("line " + std::to_string(line_no) + ": inconsistent bin count");
    const int frame = static_cast<int>(detail::parse_int(fields[0], line_no, "frame"));
    const int index = static_cast<int>(detail::parse_int(fields[1], line_no, "det index"));
    ColorHistogram h;
    h.reserve(bins);
    for (std::size_t b = 2; b < fields.size(); ++b)
      h.push_back(detail::parse_double(fields[b], line_no, "bin"));
    normalize_histogram(h);
    out[{frame, index}] = std::move(h);
  }
  return out;
}

inline void write_histograms(const std::map<std::pair<int, int>, ColorHistogram>& hists,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [key, h] : hists) {
    out << key.first << ',' << key.second;
    char buf[32];
    for (double b : h) {
      std::snprintf(buf, sizeof buf, "%.9g", b);
      out << ',' << buf;
    }
    out << "\n";
  }
}

// Color class model: one line per center, space-separated bins.
inline ColorClassModel parse_color_model(const std::string& path) {
  ColorClassModel model;
  int line_no = 0;
  for (const std::string& line : detail::read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream in(line);
    ColorHistogram center;
    double v;
    while (in >> v) center.push_back(v);
    if (center.empty())
      throw std::runtime_error("line " + std::to_string(line_no) + ": empty center");
    normalize_histogram(center);
    if (!model.centers.empty() && model.centers[0].size() != center.size())
      throw std::runtime_error("line " + std::to_string(line_no) + ": inconsistent bin count");
    model.centers.push_back(std::move(center));
  }
  if (model.centers.empty()) throw std::runtime_error("color model file is empty: " + path);
  return model;
}

inline void write_color_model(const ColorClassModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[32];
  for (const auto& center : model.centers) {
    for (std::size_t b = 0; b < center.size(); ++b) {
      std::snprintf(buf, sizeof buf, "%.9g", center[b]);
      out << (b ? " " : "") << buf;
    }
    out << "\n";
  }
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace cptrack
