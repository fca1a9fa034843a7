#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cptrack/cp/automaton.hpp"

namespace cptrack::cp {

using Value = int;

constexpr long long kInfCost = std::numeric_limits<long long>::max() / 4;

// Ranges up to this size get a bitset domain; larger ranges (cost variables)
// get an interval domain on which only bounds operations are effective.
constexpr int kBitsetRangeLimit = 4096;

struct VarInfo {
  Value lo = 0;
  Value hi = 0;
  bool interval = false;
  int word_offset = 0;  // bitset vars: first word in State::words
  int n_words = 0;
};

// Mutable domain state, cloned at every search node. Bitset variables track
// membership bit-per-value; interval variables track bounds only.
struct State {
  std::vector<std::uint64_t> words;
  std::vector<Value> mn, mx;
  std::vector<int> size;

  bool operator==(const State&) const = default;
};

class Model;

class Constraint {
 public:
  virtual ~Constraint() = default;
  // Filters domains; returns false on wipeout. Appends ids of changed
  // variables to `changed`.
  virtual bool propagate(const Model& m, State& s, std::vector<int>& changed) = 0;
  // Direct evaluation on a full assignment, independent of the filtering code.
  virtual bool holds(const Model& m, const std::vector<Value>& values) const = 0;
  const std::vector<int>& vars() const { return vars_; }

 protected:
  explicit Constraint(std::vector<int> vars) : vars_(std::move(vars)) {}
  std::vector<int> vars_;
};

using AllowedPredicate = std::function<bool(Value, Value)>;

class Model {
 public:
  // ----- variables ---------------------------------------------------------

  int new_var(Value lo, Value hi) {
    if (frozen_) throw std::logic_error("model frozen: cannot add variables");
    if (lo > hi) throw std::invalid_argument("new_var: lo > hi");
    VarInfo info;
    info.lo = lo;
    info.hi = hi;
    const long long range = static_cast<long long>(hi) - lo + 1;
    if (range <= kBitsetRangeLimit) {
      info.interval = false;
      info.word_offset = total_words_;
      info.n_words = static_cast<int>((range + 63) / 64);
      total_words_ += info.n_words;
    } else {
      info.interval = true;
    }
    vars_.push_back(info);
    watchers_.emplace_back();
    return static_cast<int>(vars_.size()) - 1;
  }

  int n_vars() const { return static_cast<int>(vars_.size()); }
  const VarInfo& info(int v) const { return vars_[v]; }

  State root_state() const {
    State s;
    s.words.assign(total_words_, 0);
    s.mn.resize(vars_.size());
    s.mx.resize(vars_.size());
    s.size.resize(vars_.size());
    for (std::size_t v = 0; v < vars_.size(); ++v) {
      const VarInfo& i = vars_[v];
      s.mn[v] = i.lo;
      s.mx[v] = i.hi;
      s.size[v] = static_cast<int>(static_cast<long long>(i.hi) - i.lo + 1);
      if (!i.interval) {
        int bits = s.size[v];
        for (int w = 0; w < i.n_words; ++w) {
          const int chunk = std::min(bits, 64);
          s.words[i.word_offset + w] =
              chunk == 64 ? ~std::uint64_t(0) : ((std::uint64_t(1) << chunk) - 1);
          bits -= chunk;
        }
      }
    }
    return s;
  }

  // ----- domain operations --------------------------------------------------

  bool contains(const State& s, int v, Value val) const {
    if (val < s.mn[v] || val > s.mx[v]) return false;
    const VarInfo& i = vars_[v];
    if (i.interval) return true;
    const int bit = val - i.lo;
    return (s.words[i.word_offset + bit / 64] >> (bit % 64)) & 1;
  }

  bool assigned(const State& s, int v) const { return s.size[v] == 1; }
  Value value(const State& s, int v) const { return s.mn[v]; }
  Value min(const State& s, int v) const { return s.mn[v]; }
  Value max(const State& s, int v) const { return s.mx[v]; }
  int size(const State& s, int v) const { return s.size[v]; }

  // Removes a value. On interval variables only edge removals take effect;
  // interior removals are deferred to later bounds reasoning (still sound:
  // once the variable is a singleton every removal is an edge removal).
  // Returns false on wipeout; sets *changed when the domain shrank.
  bool remove(State& s, int v, Value val, bool* changed) const {
    if (!contains(s, v, val)) return true;
    const VarInfo& i = vars_[v];
    if (i.interval) {
      if (val == s.mn[v]) return tighten_min(s, v, val + 1, changed);
      if (val == s.mx[v]) return tighten_max(s, v, val - 1, changed);
      return true;  // interior removal deferred
    }
    const int bit = val - i.lo;
    s.words[i.word_offset + bit / 64] &= ~(std::uint64_t(1) << (bit % 64));
    if (--s.size[v] == 0) return false;
    if (val == s.mn[v]) s.mn[v] = scan_up(s, i, val + 1);
    if (val == s.mx[v]) s.mx[v] = scan_down(s, i, val - 1);
    if (changed) *changed = true;
    return true;
  }

  bool tighten_min(State& s, int v, Value lo, bool* changed) const {
    if (lo <= s.mn[v]) return true;
    if (lo > s.mx[v]) { s.size[v] = 0; return false; }
    const VarInfo& i = vars_[v];
    if (i.interval) {
      s.mn[v] = lo;
      s.size[v] = static_cast<int>(std::min<long long>(
          std::numeric_limits<int>::max(), static_cast<long long>(s.mx[v]) - lo + 1));
    } else {
      for (Value x = s.mn[v]; x < lo; ++x) {
        if (!contains(s, v, x)) continue;
        const int bit = x - i.lo;
        s.words[i.word_offset + bit / 64] &= ~(std::uint64_t(1) << (bit % 64));
        --s.size[v];
      }
      if (s.size[v] == 0) return false;
      s.mn[v] = scan_up(s, i, lo);
    }
    if (changed) *changed = true;
    return true;
  }

  bool tighten_max(State& s, int v, Value hi, bool* changed) const {
    if (hi >= s.mx[v]) return true;
    if (hi < s.mn[v]) { s.size[v] = 0; return false; }
    const VarInfo& i = vars_[v];
    if (i.interval) {
      s.mx[v] = hi;
      s.size[v] = static_cast<int>(std::min<long long>(
          std::numeric_limits<int>::max(), static_cast<long long>(hi) - s.mn[v] + 1));
    } else {
      for (Value x = s.mx[v]; x > hi; --x) {
        if (!contains(s, v, x)) continue;
        const int bit = x - i.lo;
        s.words[i.word_offset + bit / 64] &= ~(std::uint64_t(1) << (bit % 64));
        --s.size[v];
      }
      if (s.size[v] == 0) return false;
      s.mx[v] = scan_down(s, i, hi);
    }
    if (changed) *changed = true;
    return true;
  }

  bool assign(State& s, int v, Value val, bool* changed) const {
    if (!contains(s, v, val)) { s.size[v] = 0; return false; }
    if (s.size[v] == 1) return true;
    const VarInfo& i = vars_[v];
    if (i.interval) {
      s.mn[v] = s.mx[v] = val;
      s.size[v] = 1;
    } else {
      for (int w = 0; w < i.n_words; ++w) s.words[i.word_offset + w] = 0;
      const int bit = val - i.lo;
      s.words[i.word_offset + bit / 64] = std::uint64_t(1) << (bit % 64);
      s.mn[v] = s.mx[v] = val;
      s.size[v] = 1;
    }
    if (changed) *changed = true;
    return true;
  }

  std::vector<Value> domain_values(const State& s, int v) const {
    std::vector<Value> out;
    out.reserve(s.size[v]);
    for (Value x = s.mn[v]; x <= s.mx[v]; ++x)
      if (contains(s, v, x)) out.push_back(x);
    return out;
  }

  // ----- constraints --------------------------------------------------------

  int post(std::unique_ptr<Constraint> c) {
    if (frozen_) throw std::logic_error("model frozen: cannot post constraints");
    for (int v : c->vars())
      if (v < 0 || v >= n_vars())
        throw std::invalid_argument("constraint references unknown variable");
    const int id = static_cast<int>(constraints_.size());
    for (int v : c->vars()) watchers_[v].push_back(id);
    constraints_.push_back(std::move(c));
    return id;
  }

  int post_all_different(const std::vector<int>& vars);
  int post_inverse(const std::vector<int>& xs, const std::vector<int>& ys);
  int post_element(const std::vector<Value>& table, int index, int value);
  int post_binary_allowed(int u, int v, const AllowedPredicate& allowed);
  int post_cost_regular(const std::vector<int>& vars, const Automaton& a, const CostMatrix& c,
                        int cost_var);
  int post_sum(const std::vector<int>& terms, int total);

  void set_objective(int v) { objective_ = v; }
  std::optional<int> objective() const { return objective_; }

  int n_constraints() const { return static_cast<int>(constraints_.size()); }
  const Constraint& constraint(int i) const { return *constraints_[i]; }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  void mark_infeasible() { root_infeasible_ = true; }

  // Runs all propagators to fixpoint. `seed_vars` empty means all constraints.
  bool propagate(State& s, const std::vector<int>& seed_vars = {}) const {
    if (root_infeasible_) return false;
    std::vector<char> queued(constraints_.size(), 0);
    std::deque<int> queue;
    auto enqueue = [&](int ci) {
      if (!queued[ci]) {
        queued[ci] = 1;
        queue.push_back(ci);
      }
    };
    if (seed_vars.empty()) {
      for (int ci = 0; ci < n_constraints(); ++ci) enqueue(ci);
    } else {
      for (int v : seed_vars)
        for (int ci : watchers_[v]) enqueue(ci);
    }
    std::vector<int> changed;
    while (!queue.empty()) {
      const int ci = queue.front();
      queue.pop_front();
      queued[ci] = 0;
      changed.clear();
      if (!constraints_[ci]->propagate(*this, s, changed)) return false;
      for (int v : changed)
        for (int cj : watchers_[v]) enqueue(cj);
    }
    return true;
  }

  // Direct check of a full assignment against every posted constraint,
  // bypassing all propagators.
  bool check(const std::vector<Value>& values) const {
    if (values.size() != vars_.size()) return false;
    for (std::size_t v = 0; v < vars_.size(); ++v)
      if (values[v] < vars_[v].lo || values[v] > vars_[v].hi) return false;
    for (const auto& c : constraints_)
      if (!c->holds(*this, values)) return false;
    return true;
  }

 private:
  Value scan_up(const State& s, const VarInfo& i, Value from) const {
    for (Value x = from;; ++x) {
      const int bit = x - i.lo;
      if ((s.words[i.word_offset + bit / 64] >> (bit % 64)) & 1) return x;
    }
  }
  Value scan_down(const State& s, const VarInfo& i, Value from) const {
    for (Value x = from;; --x) {
      const int bit = x - i.lo;
      if ((s.words[i.word_offset + bit / 64] >> (bit % 64)) & 1) return x;
    }
  }

  std::vector<VarInfo> vars_;
  std::vector<std::vector<int>> watchers_;
  std::vector<std::unique_ptr<Constraint>> constraints_;
  std::optional<int> objective_;
  int total_words_ = 0;
  bool frozen_ = false;
  bool root_infeasible_ = false;
};

// ----- constraint implementations ------------------------------------------

// Pairwise-distinct values. Filtering: assigned values are removed from
// sibling domains, plus a Hall-interval check on bounds that fails on
// over-subscribed intervals and strips saturated intervals from outsiders.
class AllDifferent final : public Constraint {
 public:
  explicit AllDifferent(std::vector<int> vars) : Constraint(std::move(vars)) {}

  bool propagate(const Model& m, State& s, std::vector<int>& changed) override {
    const int n = static_cast<int>(vars_.size());
    for (int a = 0; a < n; ++a) {
      if (!m.assigned(s, vars_[a])) continue;
      const Value val = m.value(s, vars_[a]);
      for (int b = 0; b < n; ++b) {
        if (b == a) continue;
        if (m.assigned(s, vars_[b]) && m.value(s, vars_[b]) == val) return false;
        bool ch = false;
        if (!m.remove(s, vars_[b], val, &ch)) return false;
        if (ch) changed.push_back(vars_[b]);
      }
    }
    return hall_check(m, s, changed);
  }

  bool holds(const Model&, const std::vector<Value>& values) const override {
    for (std::size_t a = 0; a < vars_.size(); ++a)
      for (std::size_t b = a + 1; b < vars_.size(); ++b)
        if (values[vars_[a]] == values[vars_[b]]) return false;
    return true;
  }

 private:
  bool hall_check(const Model& m, State& s, std::vector<int>& changed) const {
    const int n = static_cast<int>(vars_.size());
    std::vector<Value> lows, highs;
    lows.reserve(n);
    highs.reserve(n);
    for (int v : vars_) {
      lows.push_back(m.min(s, v));
      highs.push_back(m.max(s, v));
    }
    std::sort(lows.begin(), lows.end());
    lows.erase(std::unique(lows.begin(), lows.end()), lows.end());
    std::sort(highs.begin(), highs.end());
    highs.erase(std::unique(highs.begin(), highs.end()), highs.end());
    for (Value a : lows) {
      for (Value b : highs) {
        if (b < a) continue;
        const long long width = static_cast<long long>(b) - a + 1;
        if (width > n) continue;
        int inside = 0;
        for (int v : vars_)
          if (m.min(s, v) >= a && m.max(s, v) <= b) ++inside;
        if (inside > width) return false;
        if (inside == width) {
          // Interval saturated: its values belong to the inside variables.
          for (int v : vars_) {
            if (m.min(s, v) >= a && m.max(s, v) <= b) continue;
            for (Value x = a; x <= b; ++x) {
              bool ch = false;
              if (!m.remove(s, v, x, &ch)) return false;
              if (ch) changed.push_back(v);
            }
          }
        }
      }
    }
    return true;
  }
};

// Channeling x_i = j  <=>  y_j = i over 1-based positions.
class Inverse final : public Constraint {
 public:
  Inverse(std::vector<int> xs, std::vector<int> ys)
      : Constraint(concat(xs, ys)), xs_(std::move(xs)), ys_(std::move(ys)) {}

  bool propagate(const Model& m, State& s, std::vector<int>& changed) override {
    const int nx = static_cast<int>(xs_.size());
    const int ny = static_cast<int>(ys_.size());
    for (int i = 0; i < nx; ++i) {
      for (Value j = std::max(m.min(s, xs_[i]), 1); j <= std::min(m.max(s, xs_[i]), ny); ++j) {
        if (!m.contains(s, xs_[i], j)) continue;
        if (!m.contains(s, ys_[j - 1], i + 1)) {
          bool ch = false;
          if (!m.remove(s, xs_[i], j, &ch)) return false;
          if (ch) changed.push_back(xs_[i]);
        }
      }
      if (m.assigned(s, xs_[i])) {
        const Value j = m.value(s, xs_[i]);
        if (j >= 1 && j <= ny) {
          bool ch = false;
          if (!m.assign(s, ys_[j - 1], i + 1, &ch)) return false;
          if (ch) changed.push_back(ys_[j - 1]);
        }
      }
    }
    for (int j = 0; j < ny; ++j) {
      for (Value i = std::max(m.min(s, ys_[j]), 1); i <= std::min(m.max(s, ys_[j]), nx); ++i) {
        if (!m.contains(s, ys_[j], i)) continue;
        if (!m.contains(s, xs_[i - 1], j + 1)) {
          bool ch = false;
          if (!m.remove(s, ys_[j], i, &ch)) return false;
          if (ch) changed.push_back(ys_[j]);
        }
      }
      if (m.assigned(s, ys_[j])) {
        const Value i = m.value(s, ys_[j]);
        if (i >= 1 && i <= nx) {
          bool ch = false;
          if (!m.assign(s, xs_[i - 1], j + 1, &ch)) return false;
          if (ch) changed.push_back(xs_[i - 1]);
        }
      }
    }
    return true;
  }

  bool holds(const Model&, const std::vector<Value>& values) const override {
    const int nx = static_cast<int>(xs_.size());
    const int ny = static_cast<int>(ys_.size());
    for (int i = 0; i < nx; ++i) {
      const Value j = values[xs_[i]];
      if (j >= 1 && j <= ny && values[ys_[j - 1]] != i + 1) return false;
    }
    for (int j = 0; j < ny; ++j) {
      const Value i = values[ys_[j]];
      if (i >= 1 && i <= nx && values[xs_[i - 1]] != j + 1) return false;
    }
    return true;
  }

 private:
  static std::vector<int> concat(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
  }
  std::vector<int> xs_, ys_;
};

// value = table[index] with 1-based index; filters both directions.
class Element final : public Constraint {
 public:
  Element(std::vector<Value> table, int index, int value)
      : Constraint({index, value}), table_(std::move(table)), index_(index), value_(value) {}

  bool propagate(const Model& m, State& s, std::vector<int>& changed) override {
    const int len = static_cast<int>(table_.size());
    bool ch = false;
    if (!m.tighten_min(s, index_, 1, &ch)) return false;
    if (!m.tighten_max(s, index_, len, &ch)) return false;
    if (ch) changed.push_back(index_);
    for (Value i = m.min(s, index_); i <= m.max(s, index_); ++i) {
      if (!m.contains(s, index_, i)) continue;
      if (!m.contains(s, value_, table_[i - 1])) {
        bool c2 = false;
        if (!m.remove(s, index_, i, &c2)) return false;
        if (c2) changed.push_back(index_);
      }
    }
    for (Value v = m.min(s, value_); v <= m.max(s, value_); ++v) {
      if (!m.contains(s, value_, v)) continue;
      bool supported = false;
      for (Value i = m.min(s, index_); i <= m.max(s, index_) && !supported; ++i)
        if (m.contains(s, index_, i) && table_[i - 1] == v) supported = true;
      if (!supported) {
        bool c2 = false;
        if (!m.remove(s, value_, v, &c2)) return false;
        if (c2) changed.push_back(value_);
      }
    }
    return true;
  }

  bool holds(const Model&, const std::vector<Value>& values) const override {
    const Value i = values[index_];
    if (i < 1 || i > static_cast<Value>(table_.size())) return false;
    return values[value_] == table_[i - 1];
  }

 private:
  std::vector<Value> table_;
  int index_, value_;
};

// Binary extension constraint; the allowed-pair table is materialized over
// the initial domains at post time.
class BinaryAllowed final : public Constraint {
 public:
  BinaryAllowed(const Model& m, const State& root, int u, int v, const AllowedPredicate& allowed)
      : Constraint({u, v}), u_(u), v_(v) {
    u_lo_ = m.min(root, u);
    v_lo_ = m.min(root, v);
    nu_ = m.max(root, u) - u_lo_ + 1;
    nv_ = m.max(root, v) - v_lo_ + 1;
    table_.assign(static_cast<std::size_t>(nu_) * nv_, false);
    for (Value a = u_lo_; a < u_lo_ + nu_; ++a)
      for (Value b = v_lo_; b < v_lo_ + nv_; ++b)
        table_[static_cast<std::size_t>(a - u_lo_) * nv_ + (b - v_lo_)] = allowed(a, b);
  }

  bool propagate(const Model& m, State& s, std::vector<int>& changed) override {
    if (!prune_side(m, s, u_, v_, changed, /*u_side=*/true)) return false;
    if (!prune_side(m, s, v_, u_, changed, /*u_side=*/false)) return false;
    return true;
  }

  bool holds(const Model&, const std::vector<Value>& values) const override {
    return allowed(values[u_], values[v_]);
  }

 private:
  bool allowed(Value a, Value b) const {
    if (a < u_lo_ || a >= u_lo_ + nu_ || b < v_lo_ || b >= v_lo_ + nv_) return false;
    return table_[static_cast<std::size_t>(a - u_lo_) * nv_ + (b - v_lo_)];
  }

  bool prune_side(const Model& m, State& s, int self, int other, std::vector<int>& changed,
                  bool u_side) const {
    for (Value a = m.min(s, self); a <= m.max(s, self); ++a) {
      if (!m.contains(s, self, a)) continue;
      bool supported = false;
      for (Value b = m.min(s, other); b <= m.max(s, other) && !supported; ++b) {
        if (!m.contains(s, other, b)) continue;
        supported = u_side ? allowed(a, b) : allowed(b, a);
      }
      if (!supported) {
        bool ch = false;
        if (!m.remove(s, self, a, &ch)) return false;
        if (ch) changed.push_back(self);
      }
    }
    return true;
  }

  int u_, v_;
  Value u_lo_ = 0, v_lo_ = 0;
  int nu_ = 0, nv_ = 0;
  std::vector<bool> table_;
};

// total = sum(terms), bounds-consistent in both directions.
class SumConstraint final : public Constraint {
 public:
  SumConstraint(std::vector<int> terms, int total)
      : Constraint(with_total(terms, total)), terms_(std::move(terms)), total_(total) {}

  bool propagate(const Model& m, State& s, std::vector<int>& changed) override {
    long long sum_min = 0, sum_max = 0;
    for (int t : terms_) {
      sum_min += m.min(s, t);
      sum_max += m.max(s, t);
    }
    bool ch = false;
    if (!m.tighten_min(s, total_, clamp(sum_min), &ch)) return false;
    if (!m.tighten_max(s, total_, clamp(sum_max), &ch)) return false;
    if (ch) changed.push_back(total_);
    for (int t : terms_) {
      const long long others_min = sum_min - m.min(s, t);
      const long long others_max = sum_max - m.max(s, t);
      bool c2 = false;
      if (!m.tighten_max(s, t, clamp(static_cast<long long>(m.max(s, total_)) - others_min), &c2))
        return false;
      if (!m.tighten_min(s, t, clamp(static_cast<long long>(m.min(s, total_)) - others_max), &c2))
        return false;
      if (c2) changed.push_back(t);
    }
    return true;
  }

  bool holds(const Model&, const std::vector<Value>& values) const override {
    long long sum = 0;
    for (int t : terms_) sum += values[t];
    return sum == values[total_];
  }

 private:
  static Value clamp(long long x) {
    return static_cast<Value>(std::clamp<long long>(x, std::numeric_limits<Value>::min() / 2,
                                                    std::numeric_limits<Value>::max() / 2));
  }
  static std::vector<int> with_total(const std::vector<int>& terms, int total) {
    std::vector<int> out = terms;
    out.push_back(total);
    return out;
  }
  std::vector<int> terms_;
  int total_;
};

// CostRegular: the symbol sequence must be accepted by the automaton and the
// cost variable equals the summed transition costs. Filtering builds the
// layered (position, state) graph and propagates minimal/maximal path costs
// forward and backward; arcs incompatible with the cost bounds are dropped
// and unsupported symbols pruned.
class CostRegular final : public Constraint {
 public:
  CostRegular(std::vector<int> vars, Automaton automaton, CostMatrix costs, int cost_var)
      : Constraint(with_cost(vars, cost_var)),
        seq_(std::move(vars)),
        automaton_(std::move(automaton)),
        costs_(std::move(costs)),
        cost_var_(cost_var) {}

  bool propagate(const Model& m, State& s, std::vector<int>& changed) override {
    const int n = static_cast<int>(seq_.size());
    const int S = automaton_.n_states();
    const int A = automaton_.n_symbols();

    auto idx = [S](int layer, int q) { return layer * S + q; };
    std::vector<long long> fmin((n + 1) * S, kInfCost), fmax((n + 1) * S, -kInfCost);
    std::vector<long long> bmin((n + 1) * S, kInfCost), bmax((n + 1) * S, -kInfCost);
    fmin[idx(0, automaton_.initial())] = 0;
    fmax[idx(0, automaton_.initial())] = 0;

    for (int i = 0; i < n; ++i) {
      for (int q = 0; q < S; ++q) {
        if (fmin[idx(i, q)] == kInfCost) continue;
        for (int a = 0; a < A; ++a) {
          if (!m.contains(s, seq_[i], a)) continue;
          const int to = automaton_.next(q, a);
          if (to < 0) continue;
          const long long c = costs_.cost(i, a, q);
          fmin[idx(i + 1, to)] = std::min(fmin[idx(i + 1, to)], fmin[idx(i, q)] + c);
          fmax[idx(i + 1, to)] = std::max(fmax[idx(i + 1, to)], fmax[idx(i, q)] + c);
        }
      }
    }
    for (int q = 0; q < S; ++q) {
      if (automaton_.accepting(q)) {
        bmin[idx(n, q)] = 0;
        bmax[idx(n, q)] = 0;
      }
    }
    for (int i = n - 1; i >= 0; --i) {
      for (int q = 0; q < S; ++q) {
        for (int a = 0; a < A; ++a) {
          if (!m.contains(s, seq_[i], a)) continue;
          const int to = automaton_.next(q, a);
          if (to < 0 || bmin[idx(i + 1, to)] == kInfCost) continue;
          const long long c = costs_.cost(i, a, q);
          bmin[idx(i, q)] = std::min(bmin[idx(i, q)], bmin[idx(i + 1, to)] + c);
          bmax[idx(i, q)] = std::max(bmax[idx(i, q)], bmax[idx(i + 1, to)] + c);
        }
      }
    }

    const long long cost_lo = m.min(s, cost_var_);
    const long long cost_hi = m.max(s, cost_var_);

    // Prune symbols without a supporting arc within the cost window.
    long long total_min = kInfCost, total_max = -kInfCost;
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < A; ++a) {
        if (!m.contains(s, seq_[i], a)) continue;
        bool supported = false;
        for (int q = 0; q < S && !supported; ++q) {
          if (fmin[idx(i, q)] == kInfCost) continue;
          const int to = automaton_.next(q, a);
          if (to < 0 || bmin[idx(i + 1, to)] == kInfCost) continue;
          const long long c = costs_.cost(i, a, q);
          const long long lo = fmin[idx(i, q)] + c + bmin[idx(i + 1, to)];
          const long long hi = fmax[idx(i, q)] + c + bmax[idx(i + 1, to)];
          if (lo <= cost_hi && hi >= cost_lo) supported = true;
        }
        if (!supported) {
          bool ch = false;
          if (!m.remove(s, seq_[i], a, &ch)) return false;
          if (ch) changed.push_back(seq_[i]);
        }
      }
    }
    for (int q = 0; q < S; ++q) {
      if (!automaton_.accepting(q) || fmin[idx(n, q)] == kInfCost) continue;
      total_min = std::min(total_min, fmin[idx(n, q)]);
      total_max = std::max(total_max, fmax[idx(n, q)]);
    }
    if (total_min == kInfCost) return false;  // no accepting path at all
    bool ch = false;
    if (!m.tighten_min(s, cost_var_, static_cast<Value>(std::max<long long>(
                                         total_min, std::numeric_limits<Value>::min() / 2)),
                       &ch))
      return false;
    if (!m.tighten_max(s, cost_var_, static_cast<Value>(std::min<long long>(
                                         total_max, std::numeric_limits<Value>::max() / 2)),
                       &ch))
      return false;
    if (ch) changed.push_back(cost_var_);
    return true;
  }

  bool holds(const Model&, const std::vector<Value>& values) const override {
    std::vector<int> word;
    word.reserve(seq_.size());
    for (int v : seq_) word.push_back(values[v]);
    const auto cost = replay_cost(automaton_, costs_, word);
    return cost.has_value() && *cost == values[cost_var_];
  }

  const Automaton& automaton() const { return automaton_; }
  const CostMatrix& cost_matrix() const { return costs_; }

 private:
  static std::vector<int> with_cost(const std::vector<int>& vars, int cost_var) {
    std::vector<int> out = vars;
    out.push_back(cost_var);
    return out;
  }
  std::vector<int> seq_;
  Automaton automaton_;
  CostMatrix costs_;
  int cost_var_;
};

// ----- posting helpers ------------------------------------------------------

inline int Model::post_all_different(const std::vector<int>& vars) {
  if (vars.empty()) throw std::invalid_argument("all_different: no variables");
  // Pigeonhole check on the initial domains.
  const State root = root_state();
  std::vector<Value> values;
  for (int v : vars)
    for (Value x : domain_values(root, v)) values.push_back(x);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.size() < vars.size()) mark_infeasible();
  return post(std::make_unique<AllDifferent>(vars));
}

inline int Model::post_inverse(const std::vector<int>& xs, const std::vector<int>& ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("inverse: empty sequence");
  return post(std::make_unique<Inverse>(xs, ys));
}

inline int Model::post_element(const std::vector<Value>& table, int index, int value) {
  if (table.empty()) throw std::invalid_argument("element: empty table");
  return post(std::make_unique<Element>(table, index, value));
}

inline int Model::post_binary_allowed(int u, int v, const AllowedPredicate& allowed) {
  return post(std::make_unique<BinaryAllowed>(*this, root_state(), u, v, allowed));
}

inline int Model::post_cost_regular(const std::vector<int>& vars, const Automaton& a,
                                    const CostMatrix& c, int cost_var) {
  if (vars.empty()) throw std::invalid_argument("cost_regular: no variables");
  for (int v : vars) {
    if (info(v).lo < 0 || info(v).hi >= a.n_symbols())
      throw std::invalid_argument("cost_regular: domain exceeds alphabet");
  }
  return post(std::make_unique<CostRegular>(vars, a, c, cost_var));
}

inline int Model::post_sum(const std::vector<int>& terms, int total) {
  return post(std::make_unique<SumConstraint>(terms, total));
}

}  // namespace cptrack::cp
