#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cptrack/appearance.hpp"
#include "cptrack/assoc.hpp"
#include "cptrack/config.hpp"
#include "cptrack/detection.hpp"
#include "cptrack/presolve.hpp"

namespace cptrack {

struct TrackEntry {
  int frame = 0;
  Box box;
  Provenance provenance = Provenance::kDetector;

  bool operator==(const TrackEntry&) const = default;
};

// Global trajectories: track id -> entries with strictly increasing frames.
struct TrackSet {
  std::map<int, std::vector<TrackEntry>> tracks;

  bool operator==(const TrackSet&) const = default;
};

// Splits the non-empty frames into solver windows of `kappa` frames that
// share their first `beta` frames with the previous window. An empty-frame
// run longer than `independence_gap` forces the next window to start fresh.
inline std::vector<BatchInstance> make_batches(const FrameMap& frames, int kappa, int beta,
                                               int independence_gap) {
  if (beta < 0 || beta >= kappa) throw std::invalid_argument("make_batches: need 0 <= beta < kappa");
  std::vector<std::pair<int, const std::vector<RawDetection>*>> non_empty;
  for (const auto& [frame, dets] : frames)
    if (!dets.empty()) non_empty.emplace_back(frame, &dets);

  std::vector<std::vector<int>> segments;  // indexes into non_empty
  for (std::size_t i = 0; i < non_empty.size(); ++i) {
    const bool fresh = segments.empty() ||
                       non_empty[i].first - non_empty[segments.back().back()].first - 1 >
                           independence_gap;
    if (fresh) segments.emplace_back();
    segments.back().push_back(static_cast<int>(i));
  }

  std::vector<BatchInstance> batches;
  for (const auto& segment : segments) {
    const int len = static_cast<int>(segment.size());
    int start = 0;
    bool first_of_segment = true;
    while (true) {
      const int end = std::min(start + kappa, len);
      BatchInstance batch;
      batch.independent = first_of_segment;
      for (int p = start; p < end; ++p) {
        const auto& [frame, dets] = non_empty[segment[p]];
        batch.frames.push_back(frame);
        std::vector<BatchDetection> row;
        for (std::size_t j = 0; j < dets->size(); ++j) {
          BatchDetection bd;
          bd.box = (*dets)[j].box;
          bd.label = std::max(1, (*dets)[j].label);
          bd.provenance = (*dets)[j].provenance;
          bd.source_frame = frame;
          bd.source_index = static_cast<int>(j) + 1;
          row.push_back(bd);
        }
        batch.detections.push_back(std::move(row));
      }
      batches.push_back(std::move(batch));
      if (end == len) break;
      start += kappa - beta;
      first_of_segment = false;
    }
  }
  return batches;
}

// Carries global track identities across one batch boundary: a current track
// inherits the global id it shares the most overlap-frame detections with;
// contested ids go to the track with the higher vote count (ties to the
// lower track index), the rest open fresh ids.
inline std::vector<int> stitch(const BatchInstance& batch, const AssociationSolution& sol,
                               const std::map<std::pair<int, int>, int>& previous_assignment,
                               int overlap_frames, int* next_global_id) {
  const int tau = sol.tau;
  std::vector<std::map<int, int>> votes(tau + 1);  // track -> {global id -> count}
  for (int i = 0; i < overlap_frames && i < batch.m(); ++i) {
    for (int j = 1; j <= batch.n(i); ++j) {
      const auto& det = batch.detections[i][j - 1];
      const auto it = previous_assignment.find({det.source_frame, det.source_index});
      if (it == previous_assignment.end()) continue;
      votes[sol.track_of[i][j - 1]][it->second] += 1;
    }
  }

  struct Claim {
    int count;
    int track;
    int global_id;
  };
  std::vector<Claim> claims;
  for (int k = 1; k <= tau; ++k)
    for (const auto& [gid, count] : votes[k]) claims.push_back({count, k, gid});
  std::sort(claims.begin(), claims.end(), [](const Claim& a, const Claim& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.track != b.track) return a.track < b.track;
    return a.global_id < b.global_id;
  });

  std::vector<int> global_of(tau + 1, 0);
  std::map<int, bool> taken;
  for (const Claim& claim : claims) {
    if (global_of[claim.track] != 0 || taken[claim.global_id]) continue;
    global_of[claim.track] = claim.global_id;
    taken[claim.global_id] = true;
  }
  for (int k = 1; k <= tau; ++k)
    if (global_of[k] == 0) global_of[k] = (*next_global_id)++;
  return global_of;
}

// Removes tracks backed by fewer than beta_d detector boxes.
inline TrackSet prune_tracks(const TrackSet& tracks, int beta_d) {
  TrackSet out;
  for (const auto& [id, entries] : tracks.tracks) {
    int detector_boxes = 0;
    for (const auto& e : entries)
      if (e.provenance == Provenance::kDetector) ++detector_boxes;
    if (detector_boxes >= beta_d) out.tracks.emplace(id, entries);
  }
  return out;
}

// Fills intra-track gaps of at most gamma_d missing frames by linear
// interpolation of centers and sizes.
inline TrackSet fill_gaps(const TrackSet& tracks, int gamma_d) {
  TrackSet out;
  for (const auto& [id, entries] : tracks.tracks) {
    std::vector<TrackEntry> filled;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i > 0) {
        const TrackEntry& prev = entries[i - 1];
        const int gap = entries[i].frame - prev.frame - 1;
        if (gap >= 1 && gap <= gamma_d) {
          for (int g = 1; g <= gap; ++g) {
            const double t = static_cast<double>(g) / (gap + 1);
            filled.push_back(TrackEntry{prev.frame + g, interpolate(prev.box, entries[i].box, t),
                                        Provenance::kInterpolated});
          }
        }
      }
      filled.push_back(entries[i]);
    }
    out.tracks.emplace(id, std::move(filled));
  }
  return out;
}

// Renumbers tracks 1..T in a content-derived order so that identical
// trajectory sets compare and serialize identically regardless of how the
// solver happened to number them.
inline TrackSet canonical_renumber(const TrackSet& tracks) {
  std::vector<const std::vector<TrackEntry>*> rows;
  for (const auto& [id, entries] : tracks.tracks)
    if (!entries.empty()) rows.push_back(&entries);
  std::sort(rows.begin(), rows.end(),
            [](const std::vector<TrackEntry>* a, const std::vector<TrackEntry>* b) {
              const std::size_t n = std::min(a->size(), b->size());
              for (std::size_t i = 0; i < n; ++i) {
                const TrackEntry& x = (*a)[i];
                const TrackEntry& y = (*b)[i];
                if (x.frame != y.frame) return x.frame < y.frame;
                if (x.box.left != y.box.left) return x.box.left < y.box.left;
                if (x.box.top != y.box.top) return x.box.top < y.box.top;
                if (x.box.width != y.box.width) return x.box.width < y.box.width;
                if (x.box.height != y.box.height) return x.box.height < y.box.height;
              }
              return a->size() < b->size();
            });
  TrackSet out;
  int id = 1;
  for (const auto* row : rows) out.tracks.emplace(id++, *row);
  return out;
}

struct TrackInputs {
  std::vector<RawDetection> detections;
  // Histogram per (frame, 1-based index within the frame's detection list).
  std::map<std::pair<int, int>, ColorHistogram> histograms;
  std::optional<ColorClassModel> color_model;
};

struct TrackOptions {
  bool presolve = true;
};

namespace detail {

// Orthogonal stand-in centers when no clustered model is supplied: pairwise
// distance 1, so class changes sit above any cap below the full scale.
inline ColorClassModel synthetic_centers(int k) {
  ColorClassModel model;
  for (int c = 0; c < k; ++c) {
    ColorHistogram h(k, 0.0);
    h[c] = 1.0;
    model.centers.push_back(h);
  }
  return model;
}

}  // namespace detail

// The end-to-end tracker: confidence filtering, color labeling, prediction
// augmentation, windowed batch solving with stitching, dummy-track pruning
// and optional gap interpolation.
inline TrackSet track_video(const TrackInputs& inputs, const Config& config,
                            const TrackOptions& options = {}) {
  // Group and label detector boxes. Explicit labels win; otherwise histogram
  // plus model; otherwise the single default class.
  FrameMap frames = group_by_frame(inputs.detections);
  int max_label = 1;
  for (auto& [frame, dets] : frames) {
    for (std::size_t j = 0; j < dets.size(); ++j) {
      RawDetection& d = dets[j];
      if (d.label < 1 && inputs.color_model) {
        const auto it = inputs.histograms.find({frame, static_cast<int>(j) + 1});
        if (it != inputs.histograms.end())
          d.label = assign_color_class(it->second, *inputs.color_model);
      }
      if (d.label < 1) d.label = 1;
      max_label = std::max(max_label, d.label);
    }
  }

  ColorClassModel model =
      inputs.color_model ? *inputs.color_model : detail::synthetic_centers(max_label);
  if (max_label > model.k())
    throw std::runtime_error("track_video: label exceeds the color model's class count");

  AppearanceCostParams cost_params;
  cost_params.occlusion_cost = config.c_occ;
  cost_params.occluded_stay_cost = config.c_stay;
  cost_params.cost_scale = config.cost_scale;
  cost_params.cross_class_cap = config.cross_class_cap;
  const AppearanceAutomaton automaton = build_cost_automaton(model, cost_params);

  // Confidence filter, then prediction-based augmentation.
  FrameMap filtered;
  for (const auto& [frame, dets] : frames) {
    const std::vector<RawDetection> kept = filter_confidence(dets, config.min_conf);
    if (!kept.empty()) filtered[frame] = kept;
  }
  const FrameMap augmented =
      options.presolve ? augment_detections(filtered, config.lifespan, config.iou_min)
                       : filtered;

  ModelParams params;
  params.lambda_x = config.lambda_x;
  params.lambda_y = config.lambda_y;
  params.tau_extra = config.tau_extra;
  params.time_limit_ms = config.batch_time_limit_ms;
  params.mode = config.mode;

  TrackSet tracks;
  std::map<std::pair<int, int>, int> assignment;  // (frame, index) -> global id
  int next_global_id = 1;
  for (const BatchInstance& batch :
       make_batches(augmented, config.kappa, config.beta, config.independence_gap)) {
    const AssociationSolution sol = solve_batch(batch, params, automaton);
    const int overlap = batch.independent ? 0 : config.beta;
    const std::vector<int> global_of = stitch(batch, sol, assignment, overlap, &next_global_id);
    for (int i = overlap; i < batch.m(); ++i) {
      for (int j = 1; j <= batch.n(i); ++j) {
        const BatchDetection& det = batch.detections[i][j - 1];
        const int gid = global_of[sol.track_of[i][j - 1]];
        assignment[{det.source_frame, det.source_index}] = gid;
        tracks.tracks[gid].push_back(TrackEntry{det.source_frame, det.box, det.provenance});
      }
    }
  }

  tracks = prune_tracks(tracks, config.beta_d);
  if (config.fill_gaps) tracks = fill_gaps(tracks, config.gamma_d);
  return canonical_renumber(tracks);
}

}  // namespace cptrack
