#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cptrack::cp {

// Deterministic finite automaton over an integer alphabet [0, n_symbols).
// Transitions are stored densely; -1 marks an absent transition.
class Automaton {
 public:
  Automaton(int n_states, int n_symbols, int initial,
            std::vector<int> accepting_states,
            const std::vector<std::array<int, 3>>& transitions)
      : n_states_(n_states),
        n_symbols_(n_symbols),
        initial_(initial),
        next_(static_cast<std::size_t>(n_states) * n_symbols, -1),
        accepting_(n_states, false) {
    if (n_states <= 0 || n_symbols <= 0)
      throw std::invalid_argument("automaton: empty state or symbol set");
    if (initial < 0 || initial >= n_states)
      throw std::invalid_argument("automaton: bad initial state");
    for (int q : accepting_states) {
      if (q < 0 || q >= n_states) throw std::invalid_argument("automaton: bad accepting state");
      accepting_[q] = true;
    }
    for (const auto& t : transitions) {
      const int from = t[0], symbol = t[1], to = t[2];
      if (from < 0 || from >= n_states || to < 0 || to >= n_states || symbol < 0 ||
          symbol >= n_symbols)
        throw std::invalid_argument("automaton: transition out of range");
      int& slot = next_[static_cast<std::size_t>(from) * n_symbols + symbol];
      if (slot != -1 && slot != to)
        throw std::invalid_argument("automaton: nondeterministic transition");
      slot = to;
    }
    check_reachability();
  }

  int n_states() const { return n_states_; }
  int n_symbols() const { return n_symbols_; }
  int initial() const { return initial_; }
  bool accepting(int q) const { return accepting_[q]; }

  // Successor of state q on symbol a, or -1 if undefined.
  int next(int q, int a) const {
    return next_[static_cast<std::size_t>(q) * n_symbols_ + a];
  }

 private:
  void check_reachability() const {
    std::vector<bool> seen(n_states_, false);
    std::vector<int> stack{initial_};
    seen[initial_] = true;
    while (!stack.empty()) {
      const int q = stack.back();
      stack.pop_back();
      for (int a = 0; a < n_symbols_; ++a) {
        const int to = next(q, a);
        if (to >= 0 && !seen[to]) {
          seen[to] = true;
          stack.push_back(to);
        }
      }
    }
    for (int q = 0; q < n_states_; ++q)
      if (!seen[q]) throw std::invalid_argument("automaton: unreachable state");
  }

  int n_states_;
  int n_symbols_;
  int initial_;
  std::vector<int> next_;
  std::vector<bool> accepting_;
};

// Nonnegative transition costs indexed by (position, symbol, source state).
// A cost matrix may be uniform over positions (n_positions == 0).
class CostMatrix {
 public:
  CostMatrix() = default;

  static CostMatrix uniform(int n_states, int n_symbols, std::vector<long long> costs) {
    CostMatrix m;
    m.n_positions_ = 0;
    m.n_states_ = n_states;
    m.n_symbols_ = n_symbols;
    m.costs_ = std::move(costs);
    m.validate(static_cast<std::size_t>(n_states) * n_symbols);
    return m;
  }

  static CostMatrix per_position(int n_positions, int n_states, int n_symbols,
                                 std::vector<long long> costs) {
    CostMatrix m;
    m.n_positions_ = n_positions;
    m.n_states_ = n_states;
    m.n_symbols_ = n_symbols;
    m.costs_ = std::move(costs);
    m.validate(static_cast<std::size_t>(n_positions) * n_states * n_symbols);
    return m;
  }

  long long cost(int position, int symbol, int state) const {
    std::size_t base = 0;
    if (n_positions_ > 0) base = static_cast<std::size_t>(position) * n_states_ * n_symbols_;
    return costs_[base + static_cast<std::size_t>(state) * n_symbols_ + symbol];
  }

  long long max_cost() const {
    long long best = 0;
    for (long long c : costs_) best = std::max(best, c);
    return best;
  }

  int n_states() const { return n_states_; }
  int n_symbols() const { return n_symbols_; }

 private:
  void validate(std::size_t expected) const {
    if (costs_.size() != expected) throw std::invalid_argument("cost matrix: wrong size");
    for (long long c : costs_)
      if (c < 0) throw std::invalid_argument("cost matrix: negative cost");
  }

  int n_positions_ = 0;
  int n_states_ = 0;
  int n_symbols_ = 0;
  std::vector<long long> costs_;
};

// Replays `word` through the automaton. Returns the summed transition cost,
// or nullopt when the word is rejected.
inline std::optional<long long> replay_cost(const Automaton& a, const CostMatrix& c,
                                            const std::vector<int>& word) {
  int q = a.initial();
  long long total = 0;
  for (std::size_t i = 0; i < word.size(); ++i) {
    const int symbol = word[i];
    if (symbol < 0 || symbol >= a.n_symbols()) return std::nullopt;
    const int to = a.next(q, symbol);
    if (to < 0) return std::nullopt;
    total += c.cost(static_cast<int>(i), symbol, q);
    q = to;
  }
  if (!a.accepting(q)) return std::nullopt;
  return total;
}

}  // namespace cptrack::cp
