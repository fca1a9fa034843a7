#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "cptrack/io.hpp"
#include "cptrack/rng.hpp"
#include "cptrack/metrics.hpp"
#include "cptrack/pipeline.hpp"

using namespace cptrack;

namespace {

RawDetection det(int frame, double cx, double cy, int label = 1, double w = 20, double h = 20) {
  RawDetection d;
  d.frame = frame;
  d.box = Box{cx - w / 2, cy - h / 2, w, h};
  d.confidence = 1.0;
  d.label = label;
  return d;
}

FrameMap lane_scene(int frames, int objects) {
  FrameMap out;
  for (int f = 1; f <= frames; ++f)
    for (int o = 0; o < objects; ++o)
      out[f].push_back(det(f, 50.0 + 4.0 * (f - 1), 100.0 + 100.0 * o, o + 1));
  return out;
}

}  // namespace

TEST_CASE("make_batches windows the non-empty frames") {
  SECTION("70 frames, kappa 30, beta 5") {
    const FrameMap frames = lane_scene(70, 1);
    const auto batches = make_batches(frames, 30, 5, 10);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].frames.front() == 1);
    CHECK(batches[0].frames.back() == 30);
    CHECK(batches[1].frames.front() == 26);
    CHECK(batches[1].frames.back() == 55);
    CHECK(batches[2].frames.front() == 51);
    CHECK(batches[2].frames.back() == 70);
    CHECK(batches[0].independent);
    CHECK_FALSE(batches[1].independent);
    CHECK_FALSE(batches[2].independent);
  }
  SECTION("exactly kappa frames make one batch") {
    const auto batches = make_batches(lane_scene(30, 1), 30, 5, 10);
    REQUIRE(batches.size() == 1);
    CHECK(batches[0].m() == 30);
  }
  SECTION("an empty run beyond the independence gap splits segments") {
    FrameMap frames;
    for (int f = 1; f <= 20; ++f) frames[f].push_back(det(f, 100, 100));
    for (int f = 35; f <= 44; ++f) frames[f].push_back(det(f, 100, 100));
    const auto batches = make_batches(frames, 30, 5, 10);
    REQUIRE(batches.size() == 2);
    CHECK(batches[0].frames.back() == 20);
    CHECK(batches[1].frames.front() == 35);
    CHECK(batches[1].independent);
  }
  SECTION("an empty run within the gap stays in one window") {
    FrameMap frames;
    for (int f = 1; f <= 10; ++f) frames[f].push_back(det(f, 100, 100));
    for (int f = 16; f <= 20; ++f) frames[f].push_back(det(f, 100, 100));
    const auto batches = make_batches(frames, 30, 5, 10);
    REQUIRE(batches.size() == 1);
    CHECK(batches[0].m() == 15);
  }
  SECTION("rejects beta >= kappa") {
    CHECK_THROWS_AS(make_batches(lane_scene(5, 1), 5, 5, 10), std::invalid_argument);
  }
}

TEST_CASE("batch decomposition covers frames once, overlaps twice") {
  // Random presence patterns: every non-empty frame appears in >= 1 batch;
  // frames in two batches are exactly the overlap regions.
  cptrack::SplitMix64 rng(606);
  for (int trial = 0; trial < 10; ++trial) {
    FrameMap frames;
    int f = 1;
    while (f < 120) {
      frames[f].push_back(det(f, 100, 100));
      f += 1 + static_cast<int>(rng.below(4));  // gaps of 0..3 empty frames
    }
    const auto batches = make_batches(frames, 20, 4, 10);
    std::map<int, int> covered;
    for (const auto& b : batches)
      for (int frame : b.frames) covered[frame] += 1;
    for (const auto& [frame, dets] : frames) {
      REQUIRE(covered.count(frame) == 1);
      CHECK(covered[frame] >= 1);
      CHECK(covered[frame] <= 2);
    }
    long long twice = 0;
    for (const auto& [frame, count] : covered)
      if (count == 2) ++twice;
    long long expected_overlap = 0;
    for (const auto& b : batches)
      if (!b.independent) expected_overlap += 4;
    CHECK(twice == expected_overlap);
  }
}

TEST_CASE("stitch carries identities by overlap majority") {
  // Current batch: frames 4..6, one detection per frame, overlap = 2 frames.
  BatchInstance batch;
  batch.independent = false;
  for (int f = 4; f <= 6; ++f) {
    batch.frames.push_back(f);
    BatchDetection bd;
    bd.box = Box{0, 0, 10, 10};
    bd.source_frame = f;
    bd.source_index = 1;
    batch.detections.push_back({bd});
  }
  AssociationSolution sol;
  sol.tau = 2;
  sol.track_of = {{2, 1}, {2, 1}, {2, 1}};  // the single detection rides track 2

  SECTION("all overlap detections agree: id inherited, none fresh") {
    std::map<std::pair<int, int>, int> prev = {{{4, 1}, 7}, {{5, 1}, 7}};
    int next_id = 9;
    const auto global_of = stitch(batch, sol, prev, 2, &next_id);
    CHECK(global_of[2] == 7);
    CHECK(global_of[1] == 9);  // unused track gets a fresh id
  }
  SECTION("independent batch: all fresh, allocated by track index") {
    std::map<std::pair<int, int>, int> prev;
    int next_id = 1;
    const auto global_of = stitch(batch, sol, prev, 0, &next_id);
    CHECK(global_of[1] == 1);
    CHECK(global_of[2] == 2);
    CHECK(next_id == 3);
  }
}

TEST_CASE("stitch majority vote prefers the larger overlap share") {
  BatchInstance batch;
  batch.independent = false;
  for (int f = 1; f <= 5; ++f) {
    batch.frames.push_back(f);
    BatchDetection bd;
    bd.box = Box{0, 0, 10, 10};
    bd.source_frame = f;
    bd.source_index = 1;
    batch.detections.push_back({bd});
  }
  AssociationSolution sol;
  sol.tau = 1;
  sol.track_of = {{1}, {1}, {1}, {1}, {1}};
  // Previous batch put 3 of the 5 overlap detections on global id 11, 2 on 12.
  std::map<std::pair<int, int>, int> prev = {
      {{1, 1}, 11}, {{2, 1}, 12}, {{3, 1}, 11}, {{4, 1}, 12}, {{5, 1}, 11}};
  int next_id = 20;
  const auto global_of = stitch(batch, sol, prev, 5, &next_id);
  CHECK(global_of[1] == 11);
}

TEST_CASE("prune_tracks counts only detector boxes") {
  TrackSet ts;
  for (int f = 1; f <= 3; ++f) ts.tracks[1].push_back({f, Box{0, 0, 5, 5}, Provenance::kDetector});
  for (int f = 1; f <= 4; ++f) ts.tracks[2].push_back({f, Box{0, 0, 5, 5}, Provenance::kDetector});
  for (int f = 5; f <= 14; ++f)
    ts.tracks[2].push_back({f, Box{0, 0, 5, 5}, Provenance::kPredicted});

  const TrackSet pruned = prune_tracks(ts, 4);
  CHECK(pruned.tracks.count(1) == 0);  // 3 detector boxes < 4
  CHECK(pruned.tracks.count(2) == 1);  // 4 detector boxes, predicted ones do not count

  CHECK(prune_tracks(ts, 0) == ts);
  CHECK(prune_tracks(pruned, 4) == pruned);  // idempotent
}

TEST_CASE("fill_gaps interpolates centers and sizes") {
  TrackSet ts;
  ts.tracks[1].push_back({1, Box{-5, -5, 10, 10}, Provenance::kDetector});   // center (0,0)
  ts.tracks[1].push_back({4, Box{1, 1, 10, 10}, Provenance::kDetector});     // center (6,6)

  SECTION("two-frame gap fills at (2,2) and (4,4)") {
    const TrackSet filled = fill_gaps(ts, 5);
    REQUIRE(filled.tracks.at(1).size() == 4);
    const auto& e2 = filled.tracks.at(1)[1];
    const auto& e3 = filled.tracks.at(1)[2];
    CHECK(e2.frame == 2);
    CHECK(e2.box.cx() == Catch::Approx(2.0));
    CHECK(e2.box.cy() == Catch::Approx(2.0));
    CHECK(e2.box.width == Catch::Approx(10.0));
    CHECK(e2.provenance == Provenance::kInterpolated);
    CHECK(e3.frame == 3);
    CHECK(e3.box.cx() == Catch::Approx(4.0));
    CHECK(e3.box.cy() == Catch::Approx(4.0));
    // Originals untouched.
    CHECK(filled.tracks.at(1)[0] == ts.tracks.at(1)[0]);
    CHECK(filled.tracks.at(1)[3] == ts.tracks.at(1)[1]);
  }
  SECTION("gaps above gamma_d stay open") {
    TrackSet wide;
    wide.tracks[1].push_back({1, Box{0, 0, 10, 10}, Provenance::kDetector});
    wide.tracks[1].push_back({8, Box{0, 0, 10, 10}, Provenance::kDetector});  // gap of 6
    CHECK(fill_gaps(wide, 5) == wide);
  }
  SECTION("no gaps is the identity and filling is idempotent") {
    const TrackSet filled = fill_gaps(ts, 5);
    CHECK(fill_gaps(filled, 5) == filled);
  }
}

TEST_CASE("track_video on a clean two-object scene reproduces the ground truth") {
  Config config;
  config.k_classes = 2;
  TrackInputs inputs;
  TrackSet gt;
  for (int f = 1; f <= 60; ++f) {
    for (int o = 0; o < 2; ++o) {
      const RawDetection d = det(f, 50.0 + 4.0 * (f - 1), 100.0 + 100.0 * o, o + 1);
      inputs.detections.push_back(d);
      gt.tracks[o + 1].push_back({f, d.box, Provenance::kDetector});
    }
  }
  const TrackSet hyp = track_video(inputs, config);
  REQUIRE(hyp.tracks.size() == 2);
  CHECK(hyp == canonical_renumber(gt));

  const MetricsReport r = evaluate(gt, hyp, 0.5);
  CHECK(r.mota == 1.0);
  CHECK(r.ids == 0);
  CHECK(r.frag == 0);
}

TEST_CASE("track_video on an empty detection set yields an empty track set") {
  Config config;
  const TrackSet hyp = track_video(TrackInputs{}, config);
  CHECK(hyp.tracks.empty());
}

TEST_CASE("track_video bridges a short occlusion with predicted boxes") {
  Config config;
  TrackInputs inputs;
  for (int f = 1; f <= 20; ++f) {
    if (f == 10 || f == 11) continue;  // two-frame occlusion
    inputs.detections.push_back(det(f, 50.0 + 4.0 * (f - 1), 100.0));
  }
  const TrackSet hyp = track_video(inputs, config);
  REQUIRE(hyp.tracks.size() == 1);
  const auto& entries = hyp.tracks.at(1);
  REQUIRE(entries.size() == 20);
  int predicted = 0;
  for (const auto& e : entries)
    if (e.provenance == Provenance::kPredicted) ++predicted;
  CHECK(predicted == 2);
  CHECK(entries[9].frame == 10);
  CHECK(entries[9].provenance == Provenance::kPredicted);
  CHECK(entries[9].box.cx() == Catch::Approx(50.0 + 4.0 * 9));
}

TEST_CASE("batched and single-batch runs produce identical track sets") {
  TrackInputs inputs;
  for (int f = 1; f <= 40; ++f)
    for (int o = 0; o < 2; ++o)
      inputs.detections.push_back(det(f, 60.0 + 3.0 * (f - 1), 120.0 + 90.0 * o, o + 1));

  Config batched;
  batched.kappa = 20;
  batched.beta = 5;
  Config single;
  single.kappa = 40;
  single.beta = 5;
  const TrackSet a = track_video(inputs, batched);
  const TrackSet b = track_video(inputs, single);
  CHECK(a == b);
}

TEST_CASE("end-to-end determinism") {
  TrackInputs inputs;
  for (int f = 1; f <= 25; ++f) {
    inputs.detections.push_back(det(f, 50.0 + 4.0 * f, 100, 1));
    if (f % 3) inputs.detections.push_back(det(f, 300.0 - 2.0 * f, 200, 2));
  }
  Config config;
  const TrackSet a = track_video(inputs, config);
  const TrackSet b = track_video(inputs, config);
  CHECK(a == b);
}
