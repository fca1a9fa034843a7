#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "cptrack/cp/solver.hpp"

namespace cptrack::cp {

struct SearchStats {
  long long nodes = 0;
  long long fails = 0;
  long long solutions = 0;
};

enum class SolveStatus { kSolution, kInfeasible, kTimedOut };

struct Solution {
  std::vector<Value> values;
  long long objective = 0;
  bool optimal = false;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kInfeasible;
  std::optional<Solution> best;
  SearchStats stats;
};

// Read-only view of the search state handed to value-ordering callbacks.
class SearchView {
 public:
  SearchView(const Model& m, const State& s) : m_(m), s_(s) {}
  bool assigned(int v) const { return m_.assigned(s_, v); }
  Value value(int v) const { return m_.value(s_, v); }
  bool contains(int v, Value x) const { return m_.contains(s_, v, x); }
  Value min(int v) const { return m_.min(s_, v); }
  Value max(int v) const { return m_.max(s_, v); }
  std::vector<Value> domain(int v) const { return m_.domain_values(s_, v); }
  const Model& model() const { return m_; }

 private:
  const Model& m_;
  const State& s_;
};

// Returns the candidate values for a variable, best first. The returned list
// defines the complete set of values branched on (after intersecting the
// current domain), which lets orderings double as symmetry restrictions.
using ValueOrder = std::function<std::vector<Value>(const SearchView&, int var)>;

struct SearchConfig {
  enum class Mode { kSatisfy, kMinimize };
  std::vector<int> branch_order;
  ValueOrder value_order;        // null: ascending domain order
  Mode mode = Mode::kSatisfy;
  long long time_limit_ms = 0;   // 0: unlimited
};

namespace detail {

class Searcher {
 public:
  Searcher(Model& model, const SearchConfig& cfg,
           std::function<bool(const Solution&)> on_solution)
      : m_(model), cfg_(cfg), on_solution_(std::move(on_solution)) {
    validate();
    if (cfg_.time_limit_ms > 0) {
      deadline_ = std::chrono::steady_clock::now() + std::chrono::milliseconds(cfg_.time_limit_ms);
      has_deadline_ = true;
    }
    if (cfg_.mode == SearchConfig::Mode::kMinimize) objective_var_ = *m_.objective();
  }

  SolveResult run() {
    m_.freeze();
    State root = m_.root_state();
    SolveResult result;
    if (!m_.propagate(root)) {
      result.status = SolveStatus::kInfeasible;
      result.stats = stats_;
      return result;
    }
    dfs(root, 0);
    result.best = best_;
    result.stats = stats_;
    if (timed_out_)
      result.status = SolveStatus::kTimedOut;
    else if (best_) {
      result.status = SolveStatus::kSolution;
      if (cfg_.mode == SearchConfig::Mode::kMinimize) result.best->optimal = true;
    } else {
      result.status = SolveStatus::kInfeasible;
    }
    return result;
  }

 private:
  void validate() const {
    std::unordered_set<int> seen;
    for (int v : cfg_.branch_order) {
      if (v < 0 || v >= m_.n_vars()) throw std::invalid_argument("branch order: unknown variable");
      if (!seen.insert(v).second)
        throw std::invalid_argument("branch order: duplicate variable");
    }
    if (cfg_.mode == SearchConfig::Mode::kMinimize && !m_.objective())
      throw std::invalid_argument("minimize mode requires an objective variable");
  }

  // Returns true when the search should unwind completely.
  bool dfs(const State& s, std::size_t oi) {
    while (oi < cfg_.branch_order.size() && m_.assigned(s, cfg_.branch_order[oi])) ++oi;
    if (oi == cfg_.branch_order.size()) return record(s);

    const int var = cfg_.branch_order[oi];
    std::vector<Value> candidates;
    if (cfg_.value_order) {
      SearchView view(m_, s);
      candidates = cfg_.value_order(view, var);
    } else {
      candidates = m_.domain_values(s, var);
    }
    std::unordered_set<Value> tried;
    for (Value val : candidates) {
      if (!m_.contains(s, var, val)) continue;
      if (!tried.insert(val).second) continue;
      if (has_deadline_ && std::chrono::steady_clock::now() >= deadline_) {
        timed_out_ = true;
        return true;
      }
      ++stats_.nodes;
      State child = s;
      bool ch = false;
      if (!m_.assign(child, var, val, &ch)) {
        ++stats_.fails;
        continue;
      }
      std::vector<int> seeds{var};
      if (objective_var_ >= 0 && best_) {
        bool c2 = false;
        if (!m_.tighten_max(child, objective_var_, static_cast<Value>(best_->objective - 1),
                            &c2)) {
          ++stats_.fails;
          continue;
        }
        seeds.push_back(objective_var_);
      }
      if (!m_.propagate(child, seeds)) {
        ++stats_.fails;
        continue;
      }
      if (dfs(child, oi)) return true;
    }
    return false;
  }

  bool record(const State& s) {
    Solution sol;
    sol.values.resize(m_.n_vars());
    for (int v = 0; v < m_.n_vars(); ++v) {
      if (!m_.assigned(s, v))
        throw std::logic_error("search: variable left unassigned at a leaf");
      sol.values[v] = m_.value(s, v);
    }
    if (objective_var_ >= 0) sol.objective = sol.values[objective_var_];
    ++stats_.solutions;
    if (cfg_.mode == SearchConfig::Mode::kMinimize) {
      if (!best_ || sol.objective < best_->objective) best_ = sol;
      return false;  // keep searching; the bound does the pruning
    }
    best_ = sol;
    return on_solution_ ? on_solution_(sol) : true;
  }

  Model& m_;
  const SearchConfig& cfg_;
  std::function<bool(const Solution&)> on_solution_;
  std::optional<Solution> best_;
  SearchStats stats_;
  std::chrono::steady_clock::time_point deadline_;
  bool has_deadline_ = false;
  bool timed_out_ = false;
  int objective_var_ = -1;
};

}  // namespace detail

// Depth-first search under the given orderings. Satisfy mode returns the
// first solution; minimize mode runs branch-and-bound with strict
// improvement and flags the result optimal when the space was exhausted.
inline SolveResult solve(Model& model, const SearchConfig& cfg) {
  detail::Searcher searcher(model, cfg, nullptr);
  return searcher.run();
}

// Enumerates solutions in search order, invoking `cb` on each; `cb` returns
// true to stop early. Returns the number of solutions visited.
inline long long enumerate_solutions(Model& model, const SearchConfig& cfg,
                                     const std::function<bool(const Solution&)>& cb) {
  long long count = 0;
  SearchConfig satisfy_cfg = cfg;
  satisfy_cfg.mode = SearchConfig::Mode::kSatisfy;
  detail::Searcher searcher(model, satisfy_cfg, [&](const Solution& sol) {
    ++count;
    return cb ? cb(sol) : false;
  });
  searcher.run();
  return count;
}

}  // namespace cptrack::cp
