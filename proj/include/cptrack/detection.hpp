#pragma once

#include <map>
#include <vector>

#include "cptrack/geometry.hpp"

namespace cptrack {

enum class Provenance { kDetector = 0, kPredicted = 1, kInterpolated = 2 };

struct RawDetection {
  int frame = 0;  // 1-based
  Box box;
  double confidence = 1.0;
  Provenance provenance = Provenance::kDetector;
  int label = 0;  // color class, 1-based; 0 = unlabeled
};

// Detections grouped by frame, insertion order preserved within a frame.
using FrameMap = std::map<int, std::vector<RawDetection>>;

inline FrameMap group_by_frame(const std::vector<RawDetection>& dets) {
  FrameMap frames;
  for (const auto& d : dets) frames[d.frame].push_back(d);
  return frames;
}

}  // namespace cptrack
