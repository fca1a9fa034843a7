#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "cptrack/appearance.hpp"
#include "cptrack/detection.hpp"
#include "cptrack/metrics.hpp"
#include "cptrack/pipeline.hpp"
#include "cptrack/rng.hpp"

namespace cptrack {

struct SceneObject {
  int entry = 1;
  int exit = 1;      // inclusive
  double x0 = 0;     // center at the entry frame
  double y0 = 0;
  double vx = 0;     // px/frame
  double vy = 0;
  double width = 24;
  double height = 24;
  int color_class = 1;
};

struct OcclusionWindow {
  int object = 1;  // 1-based object index
  int from = 1;
  int to = 1;  // inclusive
};

struct SceneSpec {
  std::uint64_t seed = 1;
  int frames = 60;
  int width = 640;
  int height = 480;
  int bins = 16;
  int k_classes = 4;
  double class_similarity = 0.5;  // shared histogram mass between classes
  double miss_prob = 0;
  double fp_rate = 0;       // expected false positives per frame (<= 1)
  double jitter_sigma = 0;  // center jitter, px
  double hist_noise = 0.05;
  std::vector<SceneObject> objects;
  std::vector<OcclusionWindow> occlusions;
};

struct Scene {
  TrackSet ground_truth;
  std::vector<RawDetection> detections;
  std::map<std::pair<int, int>, ColorHistogram> histograms;
  ColorClassModel model;  // the true class centers
};

namespace detail {

inline double gaussian(SplitMix64& rng) {
  double u1 = rng.uniform();
  while (u1 <= 1e-12) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline ColorClassModel scene_centers(int k, int bins, double similarity) {
  ColorClassModel model;
  for (int c = 0; c < k; ++c) {
    ColorHistogram h(bins, similarity / bins);
    h[c % bins] += 1.0 - similarity;
    model.centers.push_back(h);
  }
  return model;
}

inline ColorHistogram noisy_histogram(const ColorHistogram& center, double noise,
                                      SplitMix64& rng) {
  ColorHistogram h = center;
  for (double& b : h) b = std::max(0.0, b + rng.uniform(-noise, noise));
  normalize_histogram(h);
  return h;
}

inline void validate_scene(const SceneSpec& spec) {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("scene: " + msg); };
  if (spec.frames < 1 || spec.width < 16 || spec.height < 16) bad("bad dimensions");
  if (spec.k_classes < 1 || spec.k_classes > spec.bins) bad("need 1 <= classes <= bins");
  if (spec.miss_prob < 0 || spec.miss_prob > 1 || spec.fp_rate < 0 || spec.fp_rate > 1)
    bad("noise rates must be in [0,1]");
  if (spec.objects.empty()) bad("no objects");
  for (std::size_t o = 0; o < spec.objects.size(); ++o) {
    const SceneObject& obj = spec.objects[o];
    if (obj.entry < 1 || obj.exit > spec.frames || obj.entry > obj.exit) bad("bad lifespan");
    if (obj.color_class < 1 || obj.color_class > spec.k_classes) bad("bad color class");
    if (obj.width <= 0 || obj.height <= 0) bad("bad object size");
    for (int f = obj.entry; f <= obj.exit; ++f) {
      const double cx = obj.x0 + obj.vx * (f - obj.entry);
      const double cy = obj.y0 + obj.vy * (f - obj.entry);
      if (cx - obj.width / 2 < 0 || cx + obj.width / 2 > spec.width ||
          cy - obj.height / 2 < 0 || cy + obj.height / 2 > spec.height)
        bad("object leaves the image during its lifespan");
    }
  }
  for (const OcclusionWindow& w : spec.occlusions) {
    if (w.object < 1 || w.object > static_cast<int>(spec.objects.size()))
      bad("occlusion references unknown object");
    const SceneObject& obj = spec.objects[w.object - 1];
    if (w.from > w.to || w.from < obj.entry || w.to > obj.exit)
      bad("occlusion window outside the object lifespan");
  }
}

}  // namespace detail

// Deterministic scene synthesis: linear ground-truth motion, detections with
// misses, occlusion windows, jitter and false positives, and per-detection
// histograms drawn near the class centers. Every random draw comes from a
// stream derived from (seed, element, purpose), so outputs are reproducible.
inline Scene generate_scene(const SceneSpec& spec) {
  detail::validate_scene(spec);
  Scene scene;
  scene.model = detail::scene_centers(spec.k_classes, spec.bins, spec.class_similarity);

  const int n_objects = static_cast<int>(spec.objects.size());
  std::vector<SplitMix64> miss_rng, jitter_rng, hist_rng, conf_rng;
  for (int o = 0; o < n_objects; ++o) {
    miss_rng.emplace_back(derive_stream(spec.seed, 1000 + o));
    jitter_rng.emplace_back(derive_stream(spec.seed, 2000 + o));
    hist_rng.emplace_back(derive_stream(spec.seed, 3000 + o));
    conf_rng.emplace_back(derive_stream(spec.seed, 4000 + o));
  }
  SplitMix64 fp_rng(derive_stream(spec.seed, 1));

  std::map<int, std::vector<std::pair<RawDetection, ColorHistogram>>> per_frame;
  for (int o = 0; o < n_objects; ++o) {
    const SceneObject& obj = spec.objects[o];
    for (int f = obj.entry; f <= obj.exit; ++f) {
      const double cx = obj.x0 + obj.vx * (f - obj.entry);
      const double cy = obj.y0 + obj.vy * (f - obj.entry);
      const Box box{cx - obj.width / 2, cy - obj.height / 2, obj.width, obj.height};
      scene.ground_truth.tracks[o + 1].push_back(
          TrackEntry{f, box, Provenance::kDetector});

      bool occluded = false;
      for (const OcclusionWindow& w : spec.occlusions)
        if (w.object == o + 1 && f >= w.from && f <= w.to) occluded = true;
      const bool missed = spec.miss_prob > 0 && miss_rng[o].uniform() < spec.miss_prob;
      if (occluded || missed) continue;

      RawDetection d;
      d.frame = f;
      d.box = box;
      if (spec.jitter_sigma > 0) {
        d.box.left += spec.jitter_sigma * detail::gaussian(jitter_rng[o]);
        d.box.top += spec.jitter_sigma * detail::gaussian(jitter_rng[o]);
      }
      d.confidence = 0.55 + 0.45 * conf_rng[o].uniform();
      d.label = obj.color_class;
      per_frame[f].emplace_back(
          d, detail::noisy_histogram(scene.model.centers[obj.color_class - 1], spec.hist_noise,
                                     hist_rng[o]));
    }
  }

  if (spec.fp_rate > 0) {
    for (int f = 1; f <= spec.frames; ++f) {
      if (fp_rng.uniform() >= spec.fp_rate) continue;
      RawDetection d;
      d.frame = f;
      const double w = fp_rng.uniform(16, 32);
      const double h = fp_rng.uniform(16, 32);
      d.box = Box{fp_rng.uniform(0, spec.width - w), fp_rng.uniform(0, spec.height - h), w, h};
      d.confidence = 0.5 + 0.5 * fp_rng.uniform();
      d.label = 1 + static_cast<int>(fp_rng.below(spec.k_classes));
      per_frame[f].emplace_back(
          d, detail::noisy_histogram(scene.model.centers[d.label - 1], spec.hist_noise, fp_rng));
    }
  }

  for (const auto& [frame, dets] : per_frame) {
    for (std::size_t j = 0; j < dets.size(); ++j) {
      scene.detections.push_back(dets[j].first);
      scene.histograms[{frame, static_cast<int>(j) + 1}] = dets[j].second;
    }
  }
  return scene;
}

// Greedy frame-to-frame baseline: every active track claims the unclaimed
// detection with the highest overlap above the threshold; leftovers open new
// tracks, unmatched tracks close.
inline TrackSet iou_baseline_track(const std::vector<RawDetection>& detections, double iou_min) {
  const FrameMap frame_map = group_by_frame(detections);
  struct Active {
    int id;
    Box last;
  };
  std::vector<Active> active;
  TrackSet out;
  int next_id = 1;
  if (frame_map.empty()) return out;
  static const std::vector<RawDetection> kNone;
  const int first = frame_map.begin()->first;
  const int last = frame_map.rbegin()->first;
  for (int frame = first; frame <= last; ++frame) {
    const auto fit = frame_map.find(frame);
    const std::vector<RawDetection>& dets = fit == frame_map.end() ? kNone : fit->second;
    struct Cand {
      double overlap;
      int a, j;
    };
    std::vector<Cand> cands;
    for (std::size_t a = 0; a < active.size(); ++a)
      for (std::size_t j = 0; j < dets.size(); ++j) {
        const double o = iou(active[a].last, dets[j].box);
        if (o >= iou_min) cands.push_back({o, static_cast<int>(a), static_cast<int>(j)});
      }
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
      if (x.overlap != y.overlap) return x.overlap > y.overlap;
      if (x.a != y.a) return x.a < y.a;
      return x.j < y.j;
    });
    std::vector<bool> track_used(active.size(), false), det_used(dets.size(), false);
    std::vector<Active> next_active;
    for (const Cand& c : cands) {
      if (track_used[c.a] || det_used[c.j]) continue;
      track_used[c.a] = true;
      det_used[c.j] = true;
      out.tracks[active[c.a].id].push_back(
          TrackEntry{frame, dets[c.j].box, dets[c.j].provenance});
      next_active.push_back({active[c.a].id, dets[c.j].box});
    }
    for (std::size_t j = 0; j < dets.size(); ++j) {
      if (det_used[j]) continue;
      out.tracks[next_id].push_back(TrackEntry{frame, dets[j].box, dets[j].provenance});
      next_active.push_back({next_id, dets[j].box});
      ++next_id;
    }
    active = std::move(next_active);
  }
  return canonical_renumber(out);
}

// ----- benchmark suites ------------------------------------------------------

struct SuiteConfig {
  std::uint64_t base_seed = 1;
  int runs = 20;
  int frames = 60;
  int n_objects = 3;
  int width = 640;
  int height = 480;
  double speed_min = 3;
  double speed_max = 6;
  double box_size = 24;
  int k_classes = 4;
  double class_similarity = 0.5;
  bool crossing_pair = true;   // objects 1 and 2 cross mid-scene
  int occlusion_len = 2;       // frames hidden per window; 0 disables
  int occlusions_per_object = 1;
  double jitter_sigma = 1.0;
  double miss_prob = 0;
  double fp_rate = 0;
};

// Builds the run_index-th scene of a suite. Objects ride horizontal lanes
// with per-run randomized speeds and directions; the optional crossing pair
// shares a lane and meets mid-scene; occlusion windows avoid the crossing
// region and the lifespan edges so gaps stay bridgeable.
inline SceneSpec make_scene_spec(const SuiteConfig& suite, int run_index) {
  SceneSpec spec;
  spec.seed = derive_stream(suite.base_seed, 77000 + run_index);
  spec.frames = suite.frames;
  spec.width = suite.width;
  spec.height = suite.height;
  spec.k_classes = std::max(2, suite.k_classes);
  spec.class_similarity = suite.class_similarity;
  spec.jitter_sigma = suite.jitter_sigma;
  spec.miss_prob = suite.miss_prob;
  spec.fp_rate = suite.fp_rate;

  SplitMix64 rng(derive_stream(spec.seed, 5));
  const double margin = suite.box_size;
  const double usable = suite.width - 2 * margin - suite.box_size;
  const int lanes = std::max(suite.n_objects, 2);
  const double lane_step =
      (suite.height - 2 * margin - suite.box_size) / std::max(1, lanes - 1);

  for (int o = 0; o < suite.n_objects; ++o) {
    SceneObject obj;
    obj.entry = 1;
    obj.exit = suite.frames;
    obj.width = suite.box_size;
    obj.height = suite.box_size;
    const double cap = usable / std::max(1, suite.frames - 1);
    const double speed = std::min(cap, rng.uniform(suite.speed_min, suite.speed_max));
    const double lane_y = margin + suite.box_size / 2 + lane_step * o;
    if (suite.crossing_pair && o < 2) {
      // A shared lane, opposite directions, meeting mid-scene.
      obj.y0 = margin + suite.box_size / 2 + lane_step * 0.5;
      if (o == 0) {
        obj.x0 = margin + suite.box_size / 2;
        obj.vx = speed;
      } else {
        obj.x0 = margin + suite.box_size / 2 + speed * (suite.frames - 1);
        obj.vx = -speed;
      }
      obj.color_class = o + 1;  // adjacent classes: a swap is possible but costed
    } else {
      obj.y0 = lane_y;
      const bool rightward = rng.below(2) == 0;
      obj.x0 = rightward ? margin + suite.box_size / 2
                         : margin + suite.box_size / 2 + speed * (suite.frames - 1);
      obj.vx = rightward ? speed : -speed;
      obj.color_class = 1 + (o % spec.k_classes);
    }
    spec.objects.push_back(obj);
  }

  if (suite.occlusion_len > 0) {
    const int mid = suite.frames / 2;
    for (int o = 0; o < suite.n_objects; ++o) {
      for (int w = 0; w < suite.occlusions_per_object; ++w) {
        // Stay away from the crossing region and the sequence edges.
        int from = 0;
        for (int tries = 0; tries < 32 && from == 0; ++tries) {
          const int candidate = rng.range(5, std::max(6, suite.frames - 5 - suite.occlusion_len));
          const bool near_crossing =
              suite.crossing_pair && o < 2 &&
              std::abs(candidate - mid) < suite.occlusion_len + 8;
          if (!near_crossing) from = candidate;
        }
        if (from == 0) continue;
        spec.occlusions.push_back({o + 1, from, from + suite.occlusion_len - 1});
      }
    }
  }
  return spec;
}

// Scene spec as a `key=value` text file. Repeated `object=` lines carry
// `entry,exit,x0,y0,vx,vy,width,height,class`; repeated `occlusion=` lines
// carry `object,from,to`.
inline SceneSpec parse_scene_spec_text(const std::string& text) {
  SceneSpec spec;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  auto numbers = [&line_no](const std::string& value, std::size_t want) {
    std::vector<double> out;
    std::istringstream fields(value);
    std::string field;
    while (std::getline(fields, field, ',')) out.push_back(std::stod(field));
    if (out.size() != want)
      throw std::invalid_argument("scene line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(want) + " comma-separated values");
    return out;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("scene line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "seed") spec.seed = std::stoull(value);
      else if (key == "frames") spec.frames = std::stoi(value);
      else if (key == "width") spec.width = std::stoi(value);
      else if (key == "height") spec.height = std::stoi(value);
      else if (key == "bins") spec.bins = std::stoi(value);
      else if (key == "classes") spec.k_classes = std::stoi(value);
      else if (key == "class_similarity") spec.class_similarity = std::stod(value);
      else if (key == "miss_prob") spec.miss_prob = std::stod(value);
      else if (key == "fp_rate") spec.fp_rate = std::stod(value);
      else if (key == "jitter_sigma") spec.jitter_sigma = std::stod(value);
      else if (key == "hist_noise") spec.hist_noise = std::stod(value);
      else if (key == "object") {
        const auto v = numbers(value, 9);
        SceneObject o;
        o.entry = static_cast<int>(v[0]);
        o.exit = static_cast<int>(v[1]);
        o.x0 = v[2];
        o.y0 = v[3];
        o.vx = v[4];
        o.vy = v[5];
        o.width = v[6];
        o.height = v[7];
        o.color_class = static_cast<int>(v[8]);
        spec.objects.push_back(o);
      } else if (key == "occlusion") {
        const auto v = numbers(value, 3);
        spec.occlusions.push_back(
            {static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])});
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("scene line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return spec;
}

// Suite config as a `key=value` text file.
inline SuiteConfig parse_suite_config_text(const std::string& text) {
  SuiteConfig suite;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("suite line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "base_seed") suite.base_seed = std::stoull(value);
      else if (key == "runs") suite.runs = std::stoi(value);
      else if (key == "frames") suite.frames = std::stoi(value);
      else if (key == "objects") suite.n_objects = std::stoi(value);
      else if (key == "width") suite.width = std::stoi(value);
      else if (key == "height") suite.height = std::stoi(value);
      else if (key == "speed_min") suite.speed_min = std::stod(value);
      else if (key == "speed_max") suite.speed_max = std::stod(value);
      else if (key == "box_size") suite.box_size = std::stod(value);
      else if (key == "classes") suite.k_classes = std::stoi(value);
      else if (key == "class_similarity") suite.class_similarity = std::stod(value);
      else if (key == "crossing") {
        if (value == "on") suite.crossing_pair = true;
        else if (value == "off") suite.crossing_pair = false;
        else throw std::invalid_argument("crossing must be on or off");
      } else if (key == "occlusion_len") suite.occlusion_len = std::stoi(value);
      else if (key == "occlusions_per_object") suite.occlusions_per_object = std::stoi(value);
      else if (key == "jitter_sigma") suite.jitter_sigma = std::stod(value);
      else if (key == "miss_prob") suite.miss_prob = std::stod(value);
      else if (key == "fp_rate") suite.fp_rate = std::stod(value);
      else throw std::invalid_argument("unknown key '" + key + "'");
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("suite line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (suite.runs < 1) throw std::invalid_argument("suite: runs must be >= 1");
  return suite;
}

struct BenchRun {
  std::uint64_t seed = 0;
  std::map<std::string, MetricsReport> by_method;
};

struct BenchResult {
  std::vector<BenchRun> runs;
  std::map<std::string, MetricsReport> aggregate;
};

namespace detail {

inline void accumulate(MetricsReport& agg, const MetricsReport& r) {
  agg.fp += r.fp;
  agg.fn += r.fn;
  agg.ids += r.ids;
  agg.frag += r.frag;
  agg.n += r.n;
  agg.idtp += r.idtp;
  agg.gt_boxes += r.gt_boxes;
  agg.hyp_boxes += r.hyp_boxes;
  agg.gt_tracks += r.gt_tracks;
  agg.mt_count += r.mt_count;
  agg.ml_count += r.ml_count;
}

inline void finalize(MetricsReport& agg) {
  agg.mota = agg.n > 0 ? 1.0 - static_cast<double>(agg.fp + agg.fn + agg.ids) / agg.n : 0.0;
  agg.idf1 = agg.gt_boxes + agg.hyp_boxes > 0
                 ? 2.0 * static_cast<double>(agg.idtp) / (agg.gt_boxes + agg.hyp_boxes)
                 : 0.0;
  agg.mt = agg.gt_tracks > 0 ? static_cast<double>(agg.mt_count) / agg.gt_tracks : 0.0;
  agg.ml = agg.gt_tracks > 0 ? static_cast<double>(agg.ml_count) / agg.gt_tracks : 0.0;
}

}  // namespace detail

// Runs the CP pipeline over every suite scene under the given configuration
// and returns the per-run reports plus summed-count aggregates.
inline std::vector<MetricsReport> run_suite(const SuiteConfig& suite, const Config& config,
                                            const TrackOptions& options,
                                            MetricsReport* aggregate = nullptr) {
  std::vector<MetricsReport> reports;
  MetricsReport agg;
  for (int i = 0; i < suite.runs; ++i) {
    const Scene scene = generate_scene(make_scene_spec(suite, i));
    TrackInputs inputs;
    inputs.detections = scene.detections;
    inputs.histograms = scene.histograms;
    inputs.color_model = scene.model;
    const TrackSet hyp = track_video(inputs, config, options);
    const MetricsReport r = evaluate(scene.ground_truth, hyp, config.iou_min);
    detail::accumulate(agg, r);
    reports.push_back(r);
  }
  detail::finalize(agg);
  if (aggregate) *aggregate = agg;
  return reports;
}

// CP pipeline versus the greedy-overlap baseline over one suite.
inline BenchResult run_benchmark(const SuiteConfig& suite, const Config& config) {
  BenchResult result;
  MetricsReport agg_cp, agg_iou;
  for (int i = 0; i < suite.runs; ++i) {
    const SceneSpec spec = make_scene_spec(suite, i);
    const Scene scene = generate_scene(spec);

    BenchRun run;
    run.seed = spec.seed;

    TrackInputs inputs;
    inputs.detections = scene.detections;
    inputs.histograms = scene.histograms;
    inputs.color_model = scene.model;
    const TrackSet cp_tracks = track_video(inputs, config, {});
    run.by_method["cp"] = evaluate(scene.ground_truth, cp_tracks, config.iou_min);
    detail::accumulate(agg_cp, run.by_method["cp"]);

    const std::vector<RawDetection> filtered =
        filter_confidence(scene.detections, config.min_conf);
    const TrackSet iou_tracks = iou_baseline_track(filtered, config.iou_min);
    run.by_method["iou"] = evaluate(scene.ground_truth, iou_tracks, config.iou_min);
    detail::accumulate(agg_iou, run.by_method["iou"]);

    result.runs.push_back(std::move(run));
  }
  detail::finalize(agg_cp);
  detail::finalize(agg_iou);
  result.aggregate["cp"] = agg_cp;
  result.aggregate["iou"] = agg_iou;
  return result;
}

}  // namespace cptrack
