#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "cptrack/appearance.hpp"
#include "cptrack/cp/search.hpp"
#include "cptrack/cp/solver.hpp"
#include "cptrack/detection.hpp"
#include "cptrack/geometry.hpp"

namespace cptrack {

struct BatchDetection {
  Box box;
  int label = 1;  // color class, 1-based
  Provenance provenance = Provenance::kDetector;
  int source_frame = 0;  // original frame id
  int source_index = 0;  // index within that frame's detection list
};

// One solver window: an ordered run of non-empty frames with their detections.
struct BatchInstance {
  std::vector<int> frames;
  std::vector<std::vector<BatchDetection>> detections;  // aligned with frames
  bool independent = true;  // true when not stitched to the previous batch

  int m() const { return static_cast<int>(frames.size()); }
  int n(int i) const { return static_cast<int>(detections[i].size()); }
  int max_n() const {
    int best = 0;
    for (const auto& f : detections) best = std::max(best, static_cast<int>(f.size()));
    return best;
  }
};

struct ModelParams {
  double lambda_x = 40;
  double lambda_y = 40;
  int tau_extra = 2;
  long long time_limit_ms = 2000;
  cp::SearchConfig::Mode mode = cp::SearchConfig::Mode::kMinimize;
};

// Track budget: enough for the busiest frame plus slack, always leaving at
// least one unused track.
inline int choose_tau(const BatchInstance& batch, int tau_extra) {
  if (batch.m() == 0) throw std::invalid_argument("choose_tau: empty batch");
  return batch.max_n() + std::max(tau_extra, 1);
}

// The CP model of one batch plus the variable-id bookkeeping the branching
// heuristic and the solution extraction need.
struct AssocModel {
  cp::Model model;
  int tau = 0;
  std::vector<std::vector<int>> t;  // [frame][j-1], j in 1..tau; j > n_i are phantoms
  std::vector<std::vector<int>> d;  // [frame][k-1]
  std::vector<std::vector<int>> c;  // [frame][k-1]
  std::vector<int> track_cost;      // [k-1]
  int objective = -1;
};

inline AssocModel build_model(const BatchInstance& batch, const ModelParams& params,
                              const AppearanceAutomaton& aut, int tau) {
  const int m = batch.m();
  if (m == 0) throw std::invalid_argument("build_model: empty batch");
  for (int i = 0; i < m; ++i) {
    if (batch.n(i) < 1) throw std::invalid_argument("build_model: frame without detections");
    if (batch.n(i) >= tau) throw std::invalid_argument("build_model: tau leaves no spare track");
    for (const auto& det : batch.detections[i])
      if (det.label < 1 || det.label > aut.k)
        throw std::invalid_argument("build_model: label outside automaton alphabet");
  }

  AssocModel am;
  am.tau = tau;
  cp::Model& mdl = am.model;

  am.t.assign(m, {});
  am.d.assign(m, {});
  am.c.assign(m, {});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < tau; ++j) am.t[i].push_back(mdl.new_var(1, tau));
    for (int k = 0; k < tau; ++k) am.d[i].push_back(mdl.new_var(1, tau));
    for (int k = 0; k < tau; ++k) am.c[i].push_back(mdl.new_var(0, aut.k));
  }
  const long long per_step = aut.costs.max_cost();
  const long long track_bound = per_step * m;
  for (int k = 0; k < tau; ++k)
    am.track_cost.push_back(mdl.new_var(0, static_cast<cp::Value>(track_bound)));
  am.objective = mdl.new_var(0, static_cast<cp::Value>(track_bound * tau));

  for (int i = 0; i < m; ++i) {
    mdl.post_inverse(am.t[i], am.d[i]);
    mdl.post_all_different(am.t[i]);
    mdl.post_all_different(am.d[i]);

    // c_ik = colour(d_ik); phantom indices carry the empty symbol.
    std::vector<cp::Value> table(tau, kEmptySymbol);
    for (int j = 0; j < batch.n(i); ++j) table[j] = batch.detections[i][j].label;
    for (int k = 0; k < tau; ++k) mdl.post_element(table, am.d[i][k], am.c[i][k]);
  }

  // Per-axis motion bound between consecutive frames of the batch; pairs
  // touching a phantom index are unconstrained.
  for (int i = 0; i + 1 < m; ++i) {
    const auto& cur = batch.detections[i];
    const auto& nxt = batch.detections[i + 1];
    const int n_cur = batch.n(i);
    const int n_nxt = batch.n(i + 1);
    const double lx = params.lambda_x;
    const double ly = params.lambda_y;
    auto allowed = [&cur, &nxt, n_cur, n_nxt, lx, ly](cp::Value a, cp::Value b) {
      if (a > n_cur || b > n_nxt) return true;
      const Box& ba = cur[a - 1].box;
      const Box& bb = nxt[b - 1].box;
      return std::abs(ba.cx() - bb.cx()) <= lx && std::abs(ba.cy() - bb.cy()) <= ly;
    };
    for (int k = 0; k < tau; ++k) mdl.post_binary_allowed(am.d[i][k], am.d[i + 1][k], allowed);
  }

  for (int k = 0; k < tau; ++k) {
    std::vector<int> seq;
    for (int i = 0; i < m; ++i) seq.push_back(am.c[i][k]);
    mdl.post_cost_regular(seq, aut.automaton, aut.costs, am.track_cost[k]);
  }
  mdl.post_sum(am.track_cost, am.objective);
  mdl.set_objective(am.objective);
  return am;
}

namespace detail {

// Value ordering for the t variables: tracks already carrying a detection
// come first, nearest previous detection first; exactly one fresh track is
// offered to break the symmetry between unused tracks. Phantom positions
// offer the fresh track first.
class AssocBrancher {
 public:
  AssocBrancher(const BatchInstance& batch, const AssocModel& am) : batch_(&batch), am_(&am) {
    const int m = batch.m();
    role_.assign(am.model.n_vars(), {-1, -1, -1});
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < am.tau; ++j) role_[am.t[i][j]] = {0, i, j + 1};
      for (int k = 0; k < am.tau; ++k) role_[am.c[i][k]] = {1, i, k + 1};
    }
  }

  std::vector<cp::Value> operator()(const cp::SearchView& view, int var) const {
    const auto [kind, frame, pos] = role_[var];
    if (kind == 1) return class_then_empty(view, var);
    if (kind != 0) return view.domain(var);
    return order_tracks(view, var, frame, pos);
  }

 private:
  std::vector<cp::Value> class_then_empty(const cp::SearchView& view, int var) const {
    std::vector<cp::Value> values = view.domain(var);
    std::stable_partition(values.begin(), values.end(),
                          [](cp::Value v) { return v != kEmptySymbol; });
    return values;
  }

  std::vector<cp::Value> order_tracks(const cp::SearchView& view, int var, int frame,
                                      int pos) const {
    const int tau = am_->tau;
    const int m = batch_->m();
    std::vector<char> used(tau + 1, 0);
    std::vector<int> last_frame(tau + 1, -1), last_det(tau + 1, -1);
    for (int i = 0; i < m; ++i) {
      for (int j = 1; j <= batch_->n(i); ++j) {
        const int tv = am_->t[i][j - 1];
        if (!view.assigned(tv)) continue;
        const int k = view.value(tv);
        used[k] = 1;
        if (i < frame && i > last_frame[k]) {
          last_frame[k] = i;
          last_det[k] = j;
        }
      }
    }

    int fresh = -1;
    for (int k = 1; k <= tau; ++k) {
      if (!used[k] && view.contains(var, k)) {
        fresh = k;
        break;
      }
    }

    std::vector<cp::Value> out;
    const bool real = pos <= batch_->n(frame);
    if (real) {
      const Box& me = batch_->detections[frame][pos - 1].box;
      std::vector<std::pair<double, int>> ranked;
      std::vector<int> no_prior;
      for (int k = 1; k <= tau; ++k) {
        if (!used[k] || !view.contains(var, k)) continue;
        if (last_frame[k] < 0) {
          no_prior.push_back(k);
          continue;
        }
        const Box& prev = batch_->detections[last_frame[k]][last_det[k] - 1].box;
        ranked.emplace_back(std::hypot(me.cx() - prev.cx(), me.cy() - prev.cy()), k);
      }
      std::sort(ranked.begin(), ranked.end());
      for (const auto& [dist, k] : ranked) out.push_back(k);
      if (fresh > 0) no_prior.push_back(fresh);
      std::sort(no_prior.begin(), no_prior.end());
      out.insert(out.end(), no_prior.begin(), no_prior.end());
    } else {
      if (fresh > 0) out.push_back(fresh);
      for (int k = 1; k <= tau; ++k)
        if (used[k] && view.contains(var, k)) out.push_back(k);
    }
    return out;
  }

  const BatchInstance* batch_;
  const AssocModel* am_;
  std::vector<std::tuple<int, int, int>> role_;  // (kind, frame, 1-based position)
};

}  // namespace detail

// Branch on every t variable frame by frame (detections before phantoms),
// then on the c variables in the same order.
inline cp::SearchConfig branching_plan(const BatchInstance& batch, const AssocModel& am,
                                       const ModelParams& params) {
  cp::SearchConfig cfg;
  for (int i = 0; i < batch.m(); ++i)
    for (int j = 0; j < am.tau; ++j) cfg.branch_order.push_back(am.t[i][j]);
  for (int i = 0; i < batch.m(); ++i)
    for (int k = 0; k < am.tau; ++k) cfg.branch_order.push_back(am.c[i][k]);
  cfg.value_order = detail::AssocBrancher(batch, am);
  cfg.mode = params.mode;
  cfg.time_limit_ms = params.time_limit_ms;
  return cfg;
}

struct AssociationSolution {
  int tau = 0;
  std::vector<std::vector<int>> track_of;  // [frame][j-1]: track of position j
  std::vector<std::vector<int>> det_of;    // [frame][k-1]: position held by track k
  std::vector<std::vector<int>> labels;    // [frame][k-1]: class symbol seen by track k
  std::vector<long long> track_costs;      // [k-1]
  long long objective = 0;
  bool optimal = false;
};

// Label word spelled by track k (1-based) over the batch, empty symbol where
// the track holds a phantom position.
inline std::vector<int> track_word(const BatchInstance& batch, const AssociationSolution& sol,
                                   int k) {
  std::vector<int> word(batch.m(), kEmptySymbol);
  for (int i = 0; i < batch.m(); ++i)
    for (int j = 1; j <= batch.n(i); ++j)
      if (sol.track_of[i][j - 1] == k) word[i] = batch.detections[i][j - 1].label;
  return word;
}

// Association-level checker, independent of the CP propagation: per-frame
// permutation, channeling, per-axis motion bounds on detection pairs, word
// acceptance per track, and objective consistency with replayed costs.
inline bool check_association(const BatchInstance& batch, const ModelParams& params,
                              const AppearanceAutomaton& aut, const AssociationSolution& sol,
                              std::string* why = nullptr) {
  auto fail = [&why](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  const int m = batch.m();
  const int tau = sol.tau;
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(sol.track_of[i].size()) != tau) return fail("bad row width");
    std::vector<char> seen(tau + 1, 0);
    for (int j = 0; j < tau; ++j) {
      const int k = sol.track_of[i][j];
      if (k < 1 || k > tau) return fail("track id out of range");
      if (seen[k]) return fail("track repeated within a frame");
      seen[k] = 1;
    }
  }
  // Channeling: the dual array must be the exact inverse of the primal one,
  // and the label row must spell colour(d_ik) with phantoms mapped to E.
  for (int i = 0; i < m; ++i) {
    for (int j = 1; j <= tau; ++j) {
      const int k = sol.track_of[i][j - 1];
      if (sol.det_of[i][k - 1] != j) return fail("channeling violated");
    }
    for (int k = 1; k <= tau; ++k) {
      const int j = sol.det_of[i][k - 1];
      const int expected =
          j <= batch.n(i) ? batch.detections[i][j - 1].label : kEmptySymbol;
      if (sol.labels[i][k - 1] != expected) return fail("label row inconsistent");
    }
  }
  for (int i = 0; i + 1 < m; ++i) {
    for (int k = 1; k <= tau; ++k) {
      int a = 0, b = 0;
      for (int j = 1; j <= batch.n(i); ++j)
        if (sol.track_of[i][j - 1] == k) a = j;
      for (int j = 1; j <= batch.n(i + 1); ++j)
        if (sol.track_of[i + 1][j - 1] == k) b = j;
      if (a == 0 || b == 0) continue;
      const Box& ba = batch.detections[i][a - 1].box;
      const Box& bb = batch.detections[i + 1][b - 1].box;
      if (std::abs(ba.cx() - bb.cx()) > params.lambda_x ||
          std::abs(ba.cy() - bb.cy()) > params.lambda_y)
        return fail("motion bound violated");
    }
  }
  long long total = 0;
  for (int k = 1; k <= tau; ++k) {
    const auto cost = cp::replay_cost(aut.automaton, aut.costs, track_word(batch, sol, k));
    if (!cost) return fail("track word rejected by the automaton");
    if (*cost != sol.track_costs[k - 1]) return fail("track cost differs from replay");
    total += *cost;
  }
  if (total != sol.objective) return fail("objective differs from replayed total");
  return true;
}

namespace detail {

inline AssociationSolution extract_solution(const BatchInstance& batch, const AssocModel& am,
                                            const cp::Solution& sol) {
  AssociationSolution out;
  out.tau = am.tau;
  out.track_of.assign(batch.m(), std::vector<int>(am.tau, 0));
  out.det_of.assign(batch.m(), std::vector<int>(am.tau, 0));
  out.labels.assign(batch.m(), std::vector<int>(am.tau, 0));
  for (int i = 0; i < batch.m(); ++i) {
    for (int j = 0; j < am.tau; ++j) out.track_of[i][j] = sol.values[am.t[i][j]];
    for (int k = 0; k < am.tau; ++k) {
      out.det_of[i][k] = sol.values[am.d[i][k]];
      out.labels[i][k] = sol.values[am.c[i][k]];
    }
  }
  for (int k = 0; k < am.tau; ++k) out.track_costs.push_back(sol.values[am.track_cost[k]]);
  out.objective = sol.objective;
  out.optimal = sol.optimal;
  return out;
}

}  // namespace detail

// Solves one batch. Minimization returns the incumbent at the time limit;
// when the limit passes without any incumbent the batch is re-solved as a
// satisfaction problem. A proven-infeasible model is retried once with a
// larger track budget.
inline AssociationSolution solve_batch(const BatchInstance& batch, const ModelParams& params,
                                       const AppearanceAutomaton& aut) {
  int tau = choose_tau(batch, params.tau_extra);
  for (int attempt = 0; attempt < 2; ++attempt) {
    AssocModel am = build_model(batch, params, aut, tau);
    cp::SearchConfig cfg = branching_plan(batch, am, params);
    const cp::SolveResult res = cp::solve(am.model, cfg);
    if (res.best) return detail::extract_solution(batch, am, *res.best);

    if (res.status == cp::SolveStatus::kTimedOut &&
        params.mode == cp::SearchConfig::Mode::kMinimize) {
      cfg.mode = cp::SearchConfig::Mode::kSatisfy;
      const cp::SolveResult fallback = cp::solve(am.model, cfg);
      if (fallback.best) return detail::extract_solution(batch, am, *fallback.best);
    }
    tau += std::max(params.tau_extra, 1);
  }
  throw std::runtime_error("solve_batch: association infeasible even with extra tracks");
}

// Exhaustive oracle for micro-instances: enumerates every per-frame injective
// detection-to-track map, filters by the motion bounds, scores tracks by
// automaton replay and returns the lexicographically-first minimal solution.
inline std::optional<AssociationSolution> brute_force_associate(const BatchInstance& batch,
                                                                const ModelParams& params,
                                                                const AppearanceAutomaton& aut) {
  const int m = batch.m();
  const int tau = choose_tau(batch, params.tau_extra);
  double arrangements = 1;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < batch.n(i); ++j) arrangements *= tau - j;
    if (arrangements > 1e7)
      throw std::invalid_argument("brute_force_associate: instance above enumeration bound");
  }

  std::vector<std::vector<int>> track_of_real(m);  // [frame][det j-1] -> track
  for (int i = 0; i < m; ++i) track_of_real[i].assign(batch.n(i), 0);

  std::optional<AssociationSolution> best;

  auto allowed_step = [&](int i, int det_a, int det_b) {
    const Box& ba = batch.detections[i][det_a - 1].box;
    const Box& bb = batch.detections[i + 1][det_b - 1].box;
    return std::abs(ba.cx() - bb.cx()) <= params.lambda_x &&
           std::abs(ba.cy() - bb.cy()) <= params.lambda_y;
  };

  std::function<void(int, int)> place = [&](int frame, int det) {
    if (frame == m) {
      AssociationSolution sol;
      sol.tau = tau;
      sol.track_of.assign(m, std::vector<int>(tau, 0));
      sol.det_of.assign(m, std::vector<int>(tau, 0));
      sol.labels.assign(m, std::vector<int>(tau, 0));
      for (int i = 0; i < m; ++i) {
        std::vector<char> taken(tau + 1, 0);
        for (int j = 1; j <= batch.n(i); ++j) {
          sol.track_of[i][j - 1] = track_of_real[i][j - 1];
          taken[track_of_real[i][j - 1]] = 1;
        }
        int next = 1;
        for (int j = batch.n(i) + 1; j <= tau; ++j) {
          while (taken[next]) ++next;
          sol.track_of[i][j - 1] = next;
          taken[next] = 1;
        }
        for (int j = 1; j <= tau; ++j) {
          const int k = sol.track_of[i][j - 1];
          sol.det_of[i][k - 1] = j;
          sol.labels[i][k - 1] =
              j <= batch.n(i) ? batch.detections[i][j - 1].label : kEmptySymbol;
        }
      }
      long long total = 0;
      for (int k = 1; k <= tau; ++k) {
        const auto cost = cp::replay_cost(aut.automaton, aut.costs, track_word(batch, sol, k));
        if (!cost) return;  // word rejected: infeasible assignment
        sol.track_costs.push_back(*cost);
        total += *cost;
      }
      sol.objective = total;
      sol.optimal = true;
      if (!best || total < best->objective) best = sol;
      return;
    }
    if (det == batch.n(frame)) {
      place(frame + 1, 0);
      return;
    }
    for (int k = 1; k <= tau; ++k) {
      bool ok = true;
      for (int j = 0; j < det && ok; ++j)
        if (track_of_real[frame][j] == k) ok = false;
      if (!ok) continue;
      if (frame > 0) {
        for (int j = 1; j <= batch.n(frame - 1) && ok; ++j)
          if (track_of_real[frame - 1][j - 1] == k && !allowed_step(frame - 1, j, det + 1))
            ok = false;
      }
      if (!ok) continue;
      track_of_real[frame][det] = k;
      place(frame, det + 1);
      track_of_real[frame][det] = 0;
    }
  };
  place(0, 0);
  return best;
}

}  // namespace cptrack
