#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cptrack/appearance.hpp"
#include "cptrack/geometry.hpp"

namespace cptrack {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  std::uint8_t at(int x, int y, int channel) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + channel];
  }
};

// Binary P6 PPM with 8-bit samples.
inline Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image: " + path);
  auto next_token = [&in, &path]() {
    std::string token;
    int c = in.get();
    while (c != EOF) {
      if (c == '#') {  // comment to end of line
        while (c != EOF && c != '\n') c = in.get();
      } else if (std::isspace(c)) {
        c = in.get();
      } else {
        break;
      }
    }
    while (c != EOF && !std::isspace(c)) {
      token.push_back(static_cast<char>(c));
      c = in.get();
    }
    if (token.empty()) throw std::runtime_error("malformed ppm: " + path);
    return token;
  };
  if (next_token() != "P6") throw std::runtime_error("not a binary P6 ppm: " + path);
  Image img;
  img.width = std::stoi(next_token());
  img.height = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (img.width <= 0 || img.height <= 0 || maxval != 255)
    throw std::runtime_error("unsupported ppm header: " + path);
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.rgb.size()))
    throw std::runtime_error("truncated ppm: " + path);
  return img;
}

inline void write_ppm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image: " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size()));
}

constexpr int kHistogramBinsPerChannel = 8;
constexpr int kJointHistogramBins =
    kHistogramBinsPerChannel * kHistogramBinsPerChannel * kHistogramBinsPerChannel;

// Joint RGB histogram (8x8x8 = 512 bins) over the pixels of `box` clipped to
// the image, normalized to unit mass.
inline ColorHistogram extract_histogram(const Image& img, const Box& box) {
  if (img.width <= 0 || img.height <= 0 || img.rgb.size() !=
      static_cast<std::size_t>(img.width) * img.height * 3)
    throw std::invalid_argument("extract_histogram: malformed image");
  const int x0 = std::max(0, static_cast<int>(std::floor(box.left)));
  const int y0 = std::max(0, static_cast<int>(std::floor(box.top)));
  const int x1 = std::min(img.width, static_cast<int>(std::ceil(box.left + box.width)));
  const int y1 = std::min(img.height, static_cast<int>(std::ceil(box.top + box.height)));
  if (x0 >= x1 || y0 >= y1)
    throw std::invalid_argument("extract_histogram: box does not intersect the image");

  ColorHistogram hist(kJointHistogramBins, 0.0);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const int r = img.at(x, y, 0) >> 5;
      const int g = img.at(x, y, 1) >> 5;
      const int b = img.at(x, y, 2) >> 5;
      hist[(r * kHistogramBinsPerChannel + g) * kHistogramBinsPerChannel + b] += 1.0;
    }
  }
  normalize_histogram(hist);
  return hist;
}

}  // namespace cptrack
