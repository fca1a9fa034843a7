#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "cptrack/geometry.hpp"
#include "cptrack/pipeline.hpp"

namespace cptrack {

struct MetricsReport {
  double mota = 0;
  long long ids = 0;
  long long fp = 0;
  long long fn = 0;
  long long frag = 0;
  double idf1 = 0;
  double mt = 0;
  double ml = 0;
  long long n = 0;  // total ground-truth boxes

  // Raw counts kept for aggregation across runs.
  long long idtp = 0;
  long long gt_boxes = 0;
  long long hyp_boxes = 0;
  long long gt_tracks = 0;
  long long mt_count = 0;
  long long ml_count = 0;
};

// Minimum-cost assignment (Jonkers-style shortest augmenting paths) for a
// rectangular matrix given as rows of equal length. Returns one column per
// row (-1 when rows exceed columns and the row stays unassigned).
inline std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int rows = static_cast<int>(cost.size());
  if (rows == 0) return {};
  const int cols = static_cast<int>(cost[0].size());
  for (const auto& row : cost)
    if (static_cast<int>(row.size()) != cols)
      throw std::invalid_argument("hungarian: ragged matrix");
  if (cols == 0) return std::vector<int>(rows, -1);

  if (rows > cols) {  // transpose, solve, invert
    std::vector<std::vector<double>> t(cols, std::vector<double>(rows));
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) t[c][r] = cost[r][c];
    const std::vector<int> inv = hungarian(t);
    std::vector<int> out(rows, -1);
    for (int c = 0; c < cols; ++c)
      if (inv[c] >= 0) out[inv[c]] = c;
    return out;
  }

  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0), v(cols + 1, 0);
  std::vector<int> p(cols + 1, 0), way(cols + 1, 0);
  for (int i = 1; i <= rows; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(cols + 1, kInf);
    std::vector<bool> used(cols + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> out(rows, -1);
  for (int j = 1; j <= cols; ++j)
    if (p[j] > 0) out[p[j] - 1] = j - 1;
  return out;
}

namespace detail {

struct FrameBoxes {
  std::vector<int> ids;
  std::vector<Box> boxes;
};

inline std::map<int, FrameBoxes> by_frame(const TrackSet& ts) {
  std::map<int, FrameBoxes> out;
  for (const auto& [id, entries] : ts.tracks) {
    for (const auto& e : entries) {
      out[e.frame].ids.push_back(id);
      out[e.frame].boxes.push_back(e.box);
    }
  }
  return out;
}

struct ClearTrace {
  long long fp = 0, fn = 0, ids = 0, frag = 0, n = 0;
  std::map<int, long long> gt_present;  // gt id -> frames present
  std::map<int, long long> gt_matched;  // gt id -> frames matched
};

// One pass of the CLEAR protocol: carry valid pairings over, complete them
// greedily by best IoU, then count misses, false positives, switches and
// interruptions.
inline ClearTrace run_clear(const TrackSet& gt, const TrackSet& hyp, double iou_thresh) {
  const auto gt_frames = by_frame(gt);
  const auto hyp_frames = by_frame(hyp);
  if (gt_frames.empty()) throw std::invalid_argument("clear_mot: empty ground truth");
  const int gt_lo = gt_frames.begin()->first, gt_hi = gt_frames.rbegin()->first;
  if (!hyp_frames.empty() &&
      (hyp_frames.begin()->first < gt_lo || hyp_frames.rbegin()->first > gt_hi))
    throw std::invalid_argument("clear_mot: hypothesis frames outside the ground-truth range");

  ClearTrace trace;
  std::map<int, int> pairing;          // gt id -> hyp id, persists across frames
  std::map<int, bool> was_matched;     // gt id -> matched at its previous present frame
  static const FrameBoxes kEmpty;
  for (int frame = gt_lo; frame <= gt_hi; ++frame) {
    const auto git = gt_frames.find(frame);
    const auto hit = hyp_frames.find(frame);
    const FrameBoxes& g = git == gt_frames.end() ? kEmpty : git->second;
    const FrameBoxes& h = hit == hyp_frames.end() ? kEmpty : hit->second;
    trace.n += static_cast<long long>(g.ids.size());

    std::vector<bool> g_done(g.ids.size(), false), h_done(h.ids.size(), false);
    std::vector<std::pair<int, int>> matches;  // (gt index, hyp index)

    // Keep previous pairings that still overlap.
    for (std::size_t gi = 0; gi < g.ids.size(); ++gi) {
      const auto prev = pairing.find(g.ids[gi]);
      if (prev == pairing.end()) continue;
      for (std::size_t hj = 0; hj < h.ids.size(); ++hj) {
        if (h_done[hj] || h.ids[hj] != prev->second) continue;
        if (iou(g.boxes[gi], h.boxes[hj]) >= iou_thresh) {
          g_done[gi] = true;
          h_done[hj] = true;
          matches.emplace_back(static_cast<int>(gi), static_cast<int>(hj));
        }
        break;
      }
    }
    // Greedy best-IoU completion.
    struct Cand {
      double overlap;
      int gi, hj;
    };
    std::vector<Cand> cands;
    for (std::size_t gi = 0; gi < g.ids.size(); ++gi) {
      if (g_done[gi]) continue;
      for (std::size_t hj = 0; hj < h.ids.size(); ++hj) {
        if (h_done[hj]) continue;
        const double o = iou(g.boxes[gi], h.boxes[hj]);
        if (o >= iou_thresh) cands.push_back({o, static_cast<int>(gi), static_cast<int>(hj)});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.overlap != b.overlap) return a.overlap > b.overlap;
      if (a.gi != b.gi) return a.gi < b.gi;
      return a.hj < b.hj;
    });
    for (const Cand& c : cands) {
      if (g_done[c.gi] || h_done[c.hj]) continue;
      g_done[c.gi] = true;
      h_done[c.hj] = true;
      matches.emplace_back(c.gi, c.hj);
    }

    for (const auto& [gi, hj] : matches) {
      const int gid = g.ids[gi];
      const int hid = h.ids[hj];
      const auto prev = pairing.find(gid);
      if (prev != pairing.end() && prev->second != hid) ++trace.ids;
      pairing[gid] = hid;
    }
    for (std::size_t gi = 0; gi < g.ids.size(); ++gi) {
      const int gid = g.ids[gi];
      trace.gt_present[gid] += 1;
      if (g_done[gi]) trace.gt_matched[gid] += 1;
      const auto wm = was_matched.find(gid);
      if (wm != was_matched.end() && wm->second && !g_done[gi]) ++trace.frag;
      was_matched[gid] = g_done[gi];
      if (!g_done[gi]) ++trace.fn;
    }
    for (std::size_t hj = 0; hj < h.ids.size(); ++hj)
      if (!h_done[hj]) ++trace.fp;
  }
  return trace;
}

}  // namespace detail

struct ClearResult {
  double mota = 0;
  long long fp = 0, fn = 0, ids = 0, frag = 0, n = 0;
};

inline ClearResult clear_mot(const TrackSet& gt, const TrackSet& hyp, double iou_thresh) {
  const detail::ClearTrace t = detail::run_clear(gt, hyp, iou_thresh);
  ClearResult r;
  r.fp = t.fp;
  r.fn = t.fn;
  r.ids = t.ids;
  r.frag = t.frag;
  r.n = t.n;
  r.mota = 1.0 - static_cast<double>(t.fp + t.fn + t.ids) / static_cast<double>(t.n);
  return r;
}

// Identity-F1: a single global bipartite matching between gt and hypothesis
// trajectories by unmatched-detection cost, then 2*IDTP over total boxes.
inline double idf1(const TrackSet& gt, const TrackSet& hyp, double iou_thresh,
                   long long* idtp_out = nullptr, long long* gt_total_out = nullptr,
                   long long* hyp_total_out = nullptr) {
  std::vector<const std::vector<TrackEntry>*> g, h;
  std::vector<long long> g_len, h_len;
  for (const auto& [id, entries] : gt.tracks) {
    g.push_back(&entries);
    g_len.push_back(static_cast<long long>(entries.size()));
  }
  for (const auto& [id, entries] : hyp.tracks) {
    h.push_back(&entries);
    h_len.push_back(static_cast<long long>(entries.size()));
  }
  long long gt_total = 0, hyp_total = 0;
  for (long long x : g_len) gt_total += x;
  for (long long x : h_len) hyp_total += x;
  if (idtp_out) *idtp_out = 0;
  if (gt_total_out) *gt_total_out = gt_total;
  if (hyp_total_out) *hyp_total_out = hyp_total;
  if (g.empty() || h.empty() || gt_total + hyp_total == 0) return 0.0;

  const int ng = static_cast<int>(g.size());
  const int nh = static_cast<int>(h.size());
  // Per-pair overlap counts (frames where the pair matches at the threshold).
  std::vector<std::vector<long long>> overlap(ng, std::vector<long long>(nh, 0));
  for (int a = 0; a < ng; ++a) {
    std::map<int, const TrackEntry*> frames;
    for (const auto& e : *g[a]) frames[e.frame] = &e;
    for (int b = 0; b < nh; ++b)
      for (const auto& e : *h[b]) {
        const auto it = frames.find(e.frame);
        if (it != frames.end() && iou(it->second->box, e.box) >= iou_thresh) ++overlap[a][b];
      }
  }

  // Square cost matrix with unmatched-trajectory blocks on the diagonals.
  const int n = ng + nh;
  const double kBig = 1e15;
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (int a = 0; a < ng; ++a)
    for (int b = 0; b < nh; ++b)
      cost[a][b] = static_cast<double>(g_len[a] + h_len[b] - 2 * overlap[a][b]);
  for (int a = 0; a < ng; ++a)
    for (int b = 0; b < ng; ++b) cost[a][nh + b] = a == b ? static_cast<double>(g_len[a]) : kBig;
  for (int b = 0; b < nh; ++b)
    for (int a = 0; a < nh; ++a) cost[ng + a][b] = a == b ? static_cast<double>(h_len[b]) : kBig;

  const std::vector<int> assign = hungarian(cost);
  long long idtp = 0;
  for (int a = 0; a < ng; ++a)
    if (assign[a] >= 0 && assign[a] < nh) idtp += overlap[a][assign[a]];
  if (idtp_out) *idtp_out = idtp;
  return 2.0 * static_cast<double>(idtp) / static_cast<double>(gt_total + hyp_total);
}

// Fractions of ground-truth trajectories matched on at least 80% (MT) and
// under 20% (ML) of their present frames.
inline std::pair<double, double> mt_ml(const TrackSet& gt, const TrackSet& hyp,
                                       double iou_thresh, long long* mt_count = nullptr,
                                       long long* ml_count = nullptr,
                                       long long* gt_tracks = nullptr) {
  const detail::ClearTrace t = detail::run_clear(gt, hyp, iou_thresh);
  long long mt = 0, ml = 0, total = 0;
  for (const auto& [gid, present] : t.gt_present) {
    ++total;
    const auto it = t.gt_matched.find(gid);
    const double coverage =
        present > 0 ? static_cast<double>(it == t.gt_matched.end() ? 0 : it->second) / present : 0;
    if (coverage >= 0.8) ++mt;
    if (coverage < 0.2) ++ml;
  }
  if (mt_count) *mt_count = mt;
  if (ml_count) *ml_count = ml;
  if (gt_tracks) *gt_tracks = total;
  if (total == 0) return {0.0, 0.0};
  return {static_cast<double>(mt) / total, static_cast<double>(ml) / total};
}

inline MetricsReport evaluate(const TrackSet& gt, const TrackSet& hyp, double iou_thresh) {
  MetricsReport r;
  const ClearResult c = clear_mot(gt, hyp, iou_thresh);
  r.mota = c.mota;
  r.fp = c.fp;
  r.fn = c.fn;
  r.ids = c.ids;
  r.frag = c.frag;
  r.n = c.n;
  r.idf1 = idf1(gt, hyp, iou_thresh, &r.idtp, &r.gt_boxes, &r.hyp_boxes);
  const auto [mt, ml] = mt_ml(gt, hyp, iou_thresh, &r.mt_count, &r.ml_count, &r.gt_tracks);
  r.mt = mt;
  r.ml = ml;
  return r;
}

}  // namespace cptrack
