#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "cptrack/detection.hpp"
#include "cptrack/geometry.hpp"

namespace cptrack {

// Keeps detections with confidence >= min_conf; order is preserved.
inline std::vector<RawDetection> filter_confidence(const std::vector<RawDetection>& dets,
                                                   double min_conf) {
  std::vector<RawDetection> out;
  out.reserve(dets.size());
  for (const auto& d : dets)
    if (d.confidence >= min_conf) out.push_back(d);
  return out;
}

// Drops predictions that overlap a same-frame detector detection with
// IoU >= iou_min (inclusive); those detections already cover the object.
inline std::vector<RawDetection> redundancy_filter(const std::vector<RawDetection>& predictions,
                                                   const std::vector<RawDetection>& detections,
                                                   double iou_min) {
  std::vector<RawDetection> kept;
  for (const auto& p : predictions) {
    bool redundant = false;
    for (const auto& d : detections) {
      if (iou(p.box, d.box) >= iou_min) {
        redundant = true;
        break;
      }
    }
    if (!redundant) kept.push_back(p);
  }
  return kept;
}

namespace detail {

// One constant-velocity predictor following the spawn / predict / re-anchor /
// expire lifecycle. Predictions accumulate as pending boxes and are committed
// only when a later detector box matches within the lifespan; an expired or
// trailing pending list is dropped wholesale.
struct Predictor {
  Box anchor;
  int anchor_frame = 0;
  int anchor_label = 0;
  double vx = 0, vy = 0;
  int steps_left = 0;
  std::vector<RawDetection> pending;

  Box predict(int frame) const {
    const double dt = frame - anchor_frame;
    return Box{anchor.left + vx * dt, anchor.top + vy * dt, anchor.width, anchor.height};
  }
};

}  // namespace detail

// Runs the prediction lifecycle over the whole frame range and returns the
// detector detections plus every committed predicted box. Matching between a
// prediction and a detector box uses IoU >= iou_min; matches re-anchor the
// predictor (velocity from the last two anchors) and commit its pending gap
// boxes with linearly interpolated sizes.
inline FrameMap augment_detections(const FrameMap& frames, int lifespan, double iou_min) {
  FrameMap out = frames;
  if (frames.empty() || lifespan <= 0) return out;
  const int first = frames.begin()->first;
  const int last = frames.rbegin()->first;

  std::vector<detail::Predictor> predictors;
  for (int frame = first; frame <= last; ++frame) {
    static const std::vector<RawDetection> kNone;
    const auto it = frames.find(frame);
    const std::vector<RawDetection>& dets = it == frames.end() ? kNone : it->second;

    if (frame > first) {
      // Emit predictions for this frame.
      std::vector<int> live;
      std::vector<Box> predicted;
      for (std::size_t p = 0; p < predictors.size(); ++p) {
        if (predictors[p].steps_left <= 0) continue;
        live.push_back(static_cast<int>(p));
        predicted.push_back(predictors[p].predict(frame));
      }

      // Greedy best-IoU pairing between live predictions and detector boxes.
      struct Pair {
        double overlap;
        int pred, det;
      };
      std::vector<Pair> pairs;
      for (std::size_t i = 0; i < live.size(); ++i)
        for (std::size_t j = 0; j < dets.size(); ++j) {
          const double o = iou(predicted[i], dets[j].box);
          if (o >= iou_min) pairs.push_back({o, static_cast<int>(i), static_cast<int>(j)});
        }
      std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        if (a.pred != b.pred) return a.pred < b.pred;
        return a.det < b.det;
      });
      std::vector<bool> pred_taken(live.size(), false), det_taken(dets.size(), false);
      std::vector<int> match_of_pred(live.size(), -1);
      for (const Pair& pr : pairs) {
        if (pred_taken[pr.pred] || det_taken[pr.det]) continue;
        pred_taken[pr.pred] = true;
        det_taken[pr.det] = true;
        match_of_pred[pr.pred] = pr.det;
      }

      for (std::size_t i = 0; i < live.size(); ++i) {
        detail::Predictor& p = predictors[live[i]];
        const int det_idx = match_of_pred[i];
        if (det_idx >= 0) {
          // Commit the gap boxes, sizes interpolated anchor -> match; boxes
          // redundant with a detector box of their frame are dropped.
          const RawDetection& matched = dets[det_idx];
          const int gap = frame - p.anchor_frame;
          for (RawDetection pending : p.pending) {
            const double t = static_cast<double>(pending.frame - p.anchor_frame) / gap;
            const double w = p.anchor.width + (matched.box.width - p.anchor.width) * t;
            const double h = p.anchor.height + (matched.box.height - p.anchor.height) * t;
            pending.box.left = pending.box.cx() - w / 2;
            pending.box.top = pending.box.cy() - h / 2;
            pending.box.width = w;
            pending.box.height = h;
            const auto fit = frames.find(pending.frame);
            const bool redundant =
                fit != frames.end() &&
                redundancy_filter({pending}, fit->second, iou_min).empty();
            if (!redundant) out[pending.frame].push_back(pending);
          }
          p.pending.clear();
          p.vx = (matched.box.left - p.anchor.left) / gap;
          p.vy = (matched.box.top - p.anchor.top) / gap;
          p.anchor = matched.box;
          p.anchor_frame = frame;
          p.anchor_label = matched.label;
          p.steps_left = lifespan;
        } else {
          RawDetection pred;
          pred.frame = frame;
          pred.box = predicted[i];
          pred.confidence = 1.0;
          pred.provenance = Provenance::kPredicted;
          pred.label = p.anchor_label;
          p.pending.push_back(pred);
          --p.steps_left;
        }
      }
      // Expired predictors drop out together with their pending boxes.
      std::erase_if(predictors, [](const detail::Predictor& p) { return p.steps_left <= 0; });

      // Unmatched detector boxes spawn fresh predictors.
      for (std::size_t j = 0; j < dets.size(); ++j) {
        if (det_taken[j]) continue;
        detail::Predictor p;
        p.anchor = dets[j].box;
        p.anchor_frame = frame;
        p.anchor_label = dets[j].label;
        p.steps_left = lifespan;
        predictors.push_back(p);
      }
    } else {
      for (const auto& d : dets) {
        detail::Predictor p;
        p.anchor = d.box;
        p.anchor_frame = frame;
        p.anchor_label = d.label;
        p.steps_left = lifespan;
        predictors.push_back(p);
      }
    }
  }
  // Pending predictions trailing past the last match are discarded with the
  // predictors themselves.
  return out;
}

}  // namespace cptrack
