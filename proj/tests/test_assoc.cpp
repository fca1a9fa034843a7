#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "cptrack/assoc.hpp"
#include "cptrack/rng.hpp"

using namespace cptrack;

namespace {

// K class centers over 16 bins; `similarity` controls how much mass the
// classes share, hence the scaled distance between adjacent classes.
AppearanceAutomaton make_automaton(int k, double similarity = 0.5) {
  ColorClassModel model;
  const int bins = 16;
  for (int c = 0; c < k; ++c) {
    ColorHistogram h(bins, similarity / bins);
    h[c] += 1.0 - similarity;
    model.centers.push_back(h);
  }
  return build_cost_automaton(model, {});
}

BatchDetection det(double x, double y, int label = 1, double w = 20, double h = 20) {
  BatchDetection d;
  d.box = Box{x - w / 2, y - h / 2, w, h};
  d.label = label;
  return d;
}

BatchInstance random_micro_instance(SplitMix64& rng, int k_classes) {
  BatchInstance batch;
  const int m = rng.range(1, 4);
  for (int i = 0; i < m; ++i) {
    batch.frames.push_back(i + 1);
    std::vector<BatchDetection> dets;
    const int n = rng.range(1, 3);
    for (int j = 0; j < n; ++j)
      dets.push_back(det(10.0 * rng.range(0, 9), 10.0 * rng.range(0, 9),
                         rng.range(1, k_classes), 8, 8));
    batch.detections.push_back(dets);
  }
  return batch;
}

}  // namespace

TEST_CASE("choose_tau adds slack above the busiest frame") {
  BatchInstance b;
  b.frames = {1, 2, 3};
  b.detections = {{det(0, 0), det(1, 1)},
                  {det(0, 0), det(1, 1), det(2, 2)},
                  {det(0, 0), det(1, 1)}};
  CHECK(choose_tau(b, 2) == 5);

  BatchInstance one;
  one.frames = {1};
  one.detections = {{det(0, 0)}};
  CHECK(choose_tau(one, 0) == 2);

  BatchInstance two;
  two.frames = {1, 2};
  two.detections = {{det(0, 0), det(1, 1), det(2, 2), det(3, 3)},
                    {det(0, 0), det(1, 1), det(2, 2), det(3, 3)}};
  CHECK(choose_tau(two, 1) == 5);
}

TEST_CASE("build_model creates the documented variable and constraint counts") {
  BatchInstance b;
  b.frames = {1, 2};
  b.detections = {{det(0, 0), det(30, 0)}, {det(0, 0), det(30, 0)}};
  const AppearanceAutomaton aut = make_automaton(2);
  ModelParams params;
  const AssocModel am = build_model(b, params, aut, 3);

  // 6 t, 6 d, 6 c variables plus 3 track costs and the objective.
  CHECK(am.model.n_vars() == 6 + 6 + 6 + 3 + 1);

  int inverse = 0, alldiff = 0, element = 0, binary = 0, costreg = 0, sum = 0;
  for (int i = 0; i < am.model.n_constraints(); ++i) {
    const cp::Constraint& c = am.model.constraint(i);
    if (dynamic_cast<const cp::Inverse*>(&c)) ++inverse;
    if (dynamic_cast<const cp::AllDifferent*>(&c)) ++alldiff;
    if (dynamic_cast<const cp::Element*>(&c)) ++element;
    if (dynamic_cast<const cp::BinaryAllowed*>(&c)) ++binary;
    if (dynamic_cast<const cp::CostRegular*>(&c)) ++costreg;
    if (dynamic_cast<const cp::SumConstraint*>(&c)) ++sum;
  }
  CHECK(inverse == 2);
  CHECK(alldiff == 4);
  CHECK(element == 6);
  CHECK(binary == 3);
  CHECK(costreg == 3);
  CHECK(sum == 1);
}

TEST_CASE("single frame model posts no position constraints") {
  BatchInstance b;
  b.frames = {7};
  b.detections = {{det(5, 5)}};
  const AppearanceAutomaton aut = make_automaton(1);
  const AssocModel am = build_model(b, {}, aut, 2);
  for (int i = 0; i < am.model.n_constraints(); ++i)
    CHECK(dynamic_cast<const cp::BinaryAllowed*>(&am.model.constraint(i)) == nullptr);
}

TEST_CASE("position constraint prunes far pairings from the dual array") {
  BatchInstance b;
  b.frames = {1, 2};
  b.detections = {{det(0, 0), det(100, 0)}, {det(2, 0), det(102, 0)}};
  const AppearanceAutomaton aut = make_automaton(1);
  ModelParams params;
  params.lambda_x = 40;
  AssocModel am = build_model(b, params, aut, 3);

  cp::Model& m = am.model;
  cp::State s = m.root_state();
  REQUIRE(m.propagate(s));
  // Track 1 takes detection 1 at frame 1; detection 2 of frame 2 is 100 px
  // away, so the motion bound must exclude it from track 1's next position.
  bool ch = false;
  REQUIRE(m.assign(s, am.d[0][0], 1, &ch));
  const bool ok = m.propagate(s, {am.d[0][0]});
  REQUIRE(ok);
  CHECK_FALSE(m.contains(s, am.d[1][0], 2));
}

TEST_CASE("branching ranks nearby tracks before distant ones") {
  BatchInstance b;
  b.frames = {1, 2};
  b.detections = {{det(11, 10), det(50, 50)}, {det(10, 10), det(50, 50)}};
  const AppearanceAutomaton aut = make_automaton(1);
  ModelParams params;
  params.lambda_x = 100;
  params.lambda_y = 100;
  AssocModel am = build_model(b, params, aut, 3);
  const cp::SearchConfig cfg = branching_plan(b, am, params);

  cp::Model& m = am.model;
  cp::State s = m.root_state();
  REQUIRE(m.propagate(s));

  // First frame, first detection: no used tracks yet, fresh track 1 opens.
  {
    const cp::SearchView view(m, s);
    const auto cands = cfg.value_order(view, am.t[0][0]);
    REQUIRE_FALSE(cands.empty());
    CHECK(cands.front() == 1);
  }
  // Assign frame 1: detection 1 -> track 1 (at (11,10)), detection 2 -> track 2.
  bool ch = false;
  REQUIRE(m.assign(s, am.t[0][0], 1, &ch));
  REQUIRE(m.propagate(s, {am.t[0][0]}));
  REQUIRE(m.assign(s, am.t[0][1], 2, &ch));
  REQUIRE(m.propagate(s, {am.t[0][1]}));

  // Frame 2, detection at (10,10): track 1 is ~1 px away, track 2 ~56 px.
  const cp::SearchView view(m, s);
  const auto cands = cfg.value_order(view, am.t[1][0]);
  REQUIRE(cands.size() >= 3);
  CHECK(cands[0] == 1);
  CHECK(cands[1] == 2);
  CHECK(cands[2] == 3);  // the single fresh track comes last
}

TEST_CASE("equidistant candidate tracks tie-break by index") {
  BatchInstance b;
  b.frames = {1, 2};
  b.detections = {{det(0, 0), det(20, 0)}, {det(10, 0)}};
  const AppearanceAutomaton aut = make_automaton(1);
  ModelParams params;
  AssocModel am = build_model(b, params, aut, 4);
  const cp::SearchConfig cfg = branching_plan(b, am, params);

  cp::Model& m = am.model;
  cp::State s = m.root_state();
  REQUIRE(m.propagate(s));
  bool ch = false;
  REQUIRE(m.assign(s, am.t[0][0], 1, &ch));
  REQUIRE(m.propagate(s, {am.t[0][0]}));
  REQUIRE(m.assign(s, am.t[0][1], 2, &ch));
  REQUIRE(m.propagate(s, {am.t[0][1]}));

  const cp::SearchView view(m, s);
  const auto cands = cfg.value_order(view, am.t[1][0]);
  REQUIRE(cands.size() >= 2);
  CHECK(cands[0] == 1);
  CHECK(cands[1] == 2);
}

TEST_CASE("solve_batch handles representative micro-scenes") {
  SECTION("unambiguous two-frame scene associates by identity with zero cost") {
    BatchInstance b;
    b.frames = {1, 2};
    b.detections = {{det(10, 10), det(100, 100)}, {det(12, 10), det(102, 100)}};
    const AppearanceAutomaton aut = make_automaton(1);
    ModelParams params;
    params.time_limit_ms = 0;
    const AssociationSolution sol = solve_batch(b, params, aut);
    CHECK(sol.objective == 0);
    CHECK(sol.optimal);
    CHECK(sol.track_of[0][0] == sol.track_of[1][0]);
    CHECK(sol.track_of[0][1] == sol.track_of[1][1]);

    const auto oracle = brute_force_associate(b, params, aut);
    REQUIRE(oracle.has_value());
    CHECK(oracle->objective == sol.objective);
  }
  SECTION("single detection forms a single track at zero cost") {
    BatchInstance b;
    b.frames = {4};
    b.detections = {{det(10, 10)}};
    ModelParams params;
    params.time_limit_ms = 0;
    const AssociationSolution sol = solve_batch(b, params, make_automaton(1));
    CHECK(sol.objective == 0);
    CHECK(sol.track_of[0][0] == 1);
  }
  SECTION("detections forced apart by the motion bound open separate tracks") {
    BatchInstance b;
    b.frames = {1, 2};
    b.detections = {{det(0, 0)}, {det(200, 200)}};
    const AppearanceAutomaton aut = make_automaton(1);
    ModelParams params;
    params.time_limit_ms = 0;
    const AssociationSolution sol = solve_batch(b, params, aut);
    CHECK(sol.track_of[0][0] != sol.track_of[1][0]);

    const auto oracle = brute_force_associate(b, params, aut);
    REQUIRE(oracle.has_value());
    CHECK(sol.objective == oracle->objective);
  }
  SECTION("color dominates proximity when paths cross") {
    BatchInstance b;
    b.frames = {1, 2, 3};
    b.detections = {{det(0, 0, 1), det(30, 0, 2)},
                    {det(15, 0, 1), det(15, 20, 2)},
                    {det(30, 0, 1), det(0, 0, 2)}};
    const AppearanceAutomaton aut = make_automaton(2);
    ModelParams params;
    params.time_limit_ms = 0;
    const AssociationSolution sol = solve_batch(b, params, aut);
    const auto oracle = brute_force_associate(b, params, aut);
    REQUIRE(oracle.has_value());
    CHECK(sol.objective == oracle->objective);
    // The class-1 detections stay on one track across the crossing.
    CHECK(sol.track_of[0][0] == sol.track_of[1][0]);
    CHECK(sol.track_of[1][0] == sol.track_of[2][0]);
  }
}

TEST_CASE("objective equals the replayed automaton costs and checker passes") {
  SplitMix64 rng(99123);
  const AppearanceAutomaton aut = make_automaton(3);
  ModelParams params;
  params.time_limit_ms = 0;
  params.tau_extra = 1;
  for (int trial = 0; trial < 25; ++trial) {
    const BatchInstance b = random_micro_instance(rng, 3);
    const AssociationSolution sol = solve_batch(b, params, aut);
    std::string why;
    INFO(why);
    CHECK(check_association(b, params, aut, sol, &why));
  }
}

TEST_CASE("minimize matches the brute-force oracle on micro-instances") {
  SplitMix64 rng(555001);
  const AppearanceAutomaton aut = make_automaton(3);
  ModelParams params;
  params.time_limit_ms = 0;
  params.tau_extra = 1;
  int compared = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const BatchInstance b = random_micro_instance(rng, 3);
    const auto oracle = brute_force_associate(b, params, aut);
    if (!oracle) continue;
    ++compared;
    const AssociationSolution sol = solve_batch(b, params, aut);
    CHECK(sol.optimal);
    CHECK(sol.objective == oracle->objective);
  }
  CHECK(compared >= 30);
}

TEST_CASE("determinism: identical inputs give identical assignments") {
  SplitMix64 rng(8181);
  const AppearanceAutomaton aut = make_automaton(2);
  ModelParams params;
  params.time_limit_ms = 0;
  const BatchInstance b = random_micro_instance(rng, 2);
  const AssociationSolution a = solve_batch(b, params, aut);
  const AssociationSolution c = solve_batch(b, params, aut);
  CHECK(a.track_of == c.track_of);
  CHECK(a.objective == c.objective);
}
