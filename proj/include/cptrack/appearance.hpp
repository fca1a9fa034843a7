#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cptrack/cp/automaton.hpp"
#include "cptrack/rng.hpp"

namespace cptrack {

// Normalized color histogram; bin layout is up to the producer as long as it
// is consistent across a run.
using ColorHistogram = std::vector<double>;

constexpr double kHistogramTolerance = 1e-9;

inline void validate_histogram(const ColorHistogram& h) {
  double sum = 0;
  for (double b : h) {
    if (b < 0) throw std::invalid_argument("histogram: negative bin");
    sum += b;
  }
  if (h.empty() || std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("histogram: not normalized");
}

inline void normalize_histogram(ColorHistogram& h) {
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  if (sum <= 0) throw std::invalid_argument("histogram: zero mass");
  for (double& b : h) b /= sum;
}

// sqrt(1 - sum_b sqrt(p_b * q_b)), clamped to [0, 1].
inline double bhattacharyya_distance(const ColorHistogram& p, const ColorHistogram& q) {
  if (p.size() != q.size()) throw std::invalid_argument("histogram: size mismatch");
  validate_histogram(p);
  validate_histogram(q);
  double coeff = 0;
  for (std::size_t b = 0; b < p.size(); ++b) coeff += std::sqrt(p[b] * q[b]);
  return std::sqrt(std::clamp(1.0 - coeff, 0.0, 1.0));
}

struct ColorClassModel {
  std::vector<ColorHistogram> centers;
  int k() const { return static_cast<int>(centers.size()); }
};

// Nearest center by Bhattacharyya distance; ties go to the lowest class
// index. Labels are 1-based.
inline int assign_color_class(const ColorHistogram& h, const ColorClassModel& model) {
  if (model.centers.empty()) throw std::invalid_argument("color model: no centers");
  int best = 1;
  double best_d = bhattacharyya_distance(h, model.centers[0]);
  for (int k = 1; k < model.k(); ++k) {
    const double d = bhattacharyya_distance(h, model.centers[k]);
    if (d < best_d) {
      best_d = d;
      best = k + 1;
    }
  }
  return best;
}

// Lloyd iterations with the Bhattacharyya distance. Initial centers are K
// distinct members chosen by the seeded generator; iteration stops when the
// assignment stabilizes or after `max_iters` rounds. Clusters that lose all
// members keep their previous center.
inline ColorClassModel kmeans_cluster(const std::vector<ColorHistogram>& hists, int k,
                                      std::uint64_t seed, int max_iters = 100) {
  const int n = static_cast<int>(hists.size());
  if (k < 1 || k > n) throw std::invalid_argument("kmeans: need 1 <= K <= number of histograms");
  for (const auto& h : hists) validate_histogram(h);

  SplitMix64 rng(seed);
  std::vector<int> pick(n);
  std::iota(pick.begin(), pick.end(), 0);
  for (int i = 0; i < k; ++i) {  // partial Fisher-Yates
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pick[i], pick[j]);
  }
  ColorClassModel model;
  for (int i = 0; i < k; ++i) model.centers.push_back(hists[pick[i]]);

  std::vector<int> assignment(n, -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool moved = false;
    for (int i = 0; i < n; ++i) {
      const int label = assign_color_class(hists[i], model) - 1;
      if (label != assignment[i]) {
        assignment[i] = label;
        moved = true;
      }
    }
    if (!moved) break;
    for (int c = 0; c < k; ++c) {
      ColorHistogram mean(hists[0].size(), 0.0);
      int members = 0;
      for (int i = 0; i < n; ++i) {
        if (assignment[i] != c) continue;
        ++members;
        for (std::size_t b = 0; b < mean.size(); ++b) mean[b] += hists[i][b];
      }
      if (members == 0) continue;
      normalize_histogram(mean);
      model.centers[c] = std::move(mean);
    }
  }
  return model;
}

// Sum of member-to-center distances; used to monitor convergence.
inline double kmeans_objective(const std::vector<ColorHistogram>& hists,
                               const ColorClassModel& model) {
  double total = 0;
  for (const auto& h : hists)
    total += bhattacharyya_distance(h, model.centers[assign_color_class(h, model) - 1]);
  return total;
}

// ----- color-class cost automaton -------------------------------------------

// Symbol 0 is the empty symbol (no detection); class k maps to symbol k.
constexpr int kEmptySymbol = 0;

struct AppearanceCostParams {
  long long occlusion_cost = 300;   // entering an occluded state
  long long occluded_stay_cost = 30;  // staying occluded one more frame
  double cost_scale = 1000;         // scaled integer cost per unit distance
  long long cross_class_cap = 700;  // scaled cost above which a class change is forbidden
};

struct AppearanceAutomaton {
  cp::Automaton automaton;
  cp::CostMatrix costs;
  int k = 0;

  int n_symbols() const { return k + 1; }
};

// Builds the doubled-state machine: one visible and one occluded state per
// class plus an initial state. Class changes (from visible or occluded
// states) are possible only between classes whose scaled center distance is
// within the cap, and cost that scaled distance; disappearing costs
// `occlusion_cost` once and `occluded_stay_cost` per further frame. Every
// state accepts.
inline AppearanceAutomaton build_cost_automaton(const ColorClassModel& model,
                                                const AppearanceCostParams& params) {
  if (params.cost_scale <= 0) throw std::invalid_argument("cost automaton: nonpositive scale");
  const int k = model.k();
  if (k < 1) throw std::invalid_argument("cost automaton: empty model");
  const int n_states = 2 * k + 1;
  const int n_symbols = k + 1;
  const int initial = 0;
  auto visible = [](int cls) { return 2 * cls - 1; };  // cls is 1-based
  auto occluded = [](int cls) { return 2 * cls; };

  std::vector<long long> scaled(static_cast<std::size_t>(k) * k, 0);
  for (int a = 1; a <= k; ++a)
    for (int b = 1; b <= k; ++b)
      scaled[(a - 1) * k + (b - 1)] = std::llround(
          params.cost_scale * bhattacharyya_distance(model.centers[a - 1], model.centers[b - 1]));

  std::vector<std::array<int, 3>> transitions;
  std::vector<long long> costs(static_cast<std::size_t>(n_states) * n_symbols, 0);
  auto add = [&](int from, int symbol, int to, long long cost) {
    transitions.push_back({from, symbol, to});
    costs[static_cast<std::size_t>(from) * n_symbols + symbol] = cost;
  };

  add(initial, kEmptySymbol, initial, 0);
  for (int cls = 1; cls <= k; ++cls) {
    add(initial, cls, visible(cls), 0);
    add(visible(cls), cls, visible(cls), 0);
    add(visible(cls), kEmptySymbol, occluded(cls), params.occlusion_cost);
    add(occluded(cls), kEmptySymbol, occluded(cls), params.occluded_stay_cost);
    add(occluded(cls), cls, visible(cls), 0);
    for (int other = 1; other <= k; ++other) {
      if (other == cls) continue;
      const long long c = scaled[(cls - 1) * k + (other - 1)];
      if (c > params.cross_class_cap) continue;
      add(visible(cls), other, visible(other), c);
      add(occluded(cls), other, visible(other), c);
    }
  }

  std::vector<int> accepting(n_states);
  std::iota(accepting.begin(), accepting.end(), 0);
  return AppearanceAutomaton{
      cp::Automaton(n_states, n_symbols, initial, accepting, transitions),
      cp::CostMatrix::uniform(n_states, n_symbols, std::move(costs)), k};
}

}  // namespace cptrack
