#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "rtamp/errors.hpp"
#include "rtamp/ltl/buchi.hpp"
#include "rtamp/ltl/formula.hpp"

namespace rtamp::ltl {

using Letter = std::set<std::string>;

/// Ultimately periodic word prefix · cycle^ω.
struct LassoWord {
  std::vector<Letter> prefix;
  std::vector<Letter> cycle;

  std::size_t length() const noexcept { return prefix.size() + cycle.size(); }
  const Letter& at(std::size_t pos) const { return pos < prefix.size() ? prefix[pos] : cycle[pos - prefix.size()]; }
  std::size_t successor(std::size_t pos) const { return pos + 1 < length() ? pos + 1 : prefix.size(); }
};

/// Decides w ∈ L(ba) by searching the product of the automaton with the lasso's position graph
/// for a reachable accepting node lying on a cycle.
inline bool accepts_lasso(const BuchiAutomaton& ba, const LassoWord& w) {
  if (w.cycle.empty()) throw Error("lasso word needs a nonempty cycle");
  const std::size_t positions = w.length();
  const std::size_t nodes = ba.size() * positions;
  const auto encode = [&](int q, std::size_t pos) { return static_cast<std::size_t>(q) * positions + pos; };

  std::vector<std::vector<std::size_t>> succ(nodes);
  for (std::size_t q = 0; q < ba.size(); ++q)
    for (std::size_t pos = 0; pos < positions; ++pos)
      for (const auto& e : ba.states[q].edges)
        if (e.guard.satisfied_by(w.at(pos))) succ[encode(static_cast<int>(q), pos)].push_back(encode(e.target, w.successor(pos)));

  const auto reach = [&](std::size_t from) {
    std::vector<bool> seen(nodes, false);
    std::vector<std::size_t> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
      auto n = stack.back();
      stack.pop_back();
      for (auto t : succ[n])
        if (!seen[t]) {
          seen[t] = true;
          stack.push_back(t);
        }
    }
    return seen;
  };

  const auto reachable = reach(encode(ba.initial, 0));
  for (std::size_t n = 0; n < nodes; ++n) {
    if (!reachable[n] || !ba.states[n / positions].accepting) continue;
    for (auto t : succ[n])
      if (reach(t)[n]) return true;
  }
  return false;
}

namespace detail {

class LassoEvaluator {
public:
  explicit LassoEvaluator(const LassoWord& w) : w_(w) {}

  // Truth value of f at every position of the lasso.
  const std::vector<bool>& eval(const Formula& f) {
    if (auto it = memo_.find(f); it != memo_.end()) return it->second;
    const std::size_t n = w_.length();
    std::vector<bool> out(n, false);
    switch (f.op()) {
      case Op::Atom:
        for (std::size_t i = 0; i < n; ++i) out[i] = w_.at(i).contains(f.name());
        break;
      case Op::True: out.assign(n, true); break;
      case Op::False: break;
      case Op::Not: {
        const auto a = eval(f.lhs());
        for (std::size_t i = 0; i < n; ++i) out[i] = !a[i];
        break;
      }
      case Op::And:
      case Op::Or: {
        const auto a = eval(f.lhs());
        const auto b = eval(f.rhs());
        for (std::size_t i = 0; i < n; ++i) out[i] = f.op() == Op::And ? (a[i] && b[i]) : (a[i] || b[i]);
        break;
      }
      case Op::Next: {
        const auto a = eval(f.lhs());
        for (std::size_t i = 0; i < n; ++i) out[i] = a[w_.successor(i)];
        break;
      }
      case Op::Until: {
        const auto a = eval(f.lhs());
        const auto b = eval(f.rhs());
        for (std::size_t i = 0; i < n; ++i) out[i] = until_at(i, a, b);
        break;
      }
      case Op::Release: {
        // a R b == !(!a U !b)
        const auto a = eval(f.lhs());
        const auto b = eval(f.rhs());
        std::vector<bool> na(n), nb(n);
        for (std::size_t i = 0; i < n; ++i) {
          na[i] = !a[i];
          nb[i] = !b[i];
        }
        for (std::size_t i = 0; i < n; ++i) out[i] = !until_at(i, na, nb);
        break;
      }
      case Op::Eventually: {
        const auto a = eval(f.lhs());
        const std::vector<bool> all(n, true);
        for (std::size_t i = 0; i < n; ++i) out[i] = until_at(i, all, a);
        break;
      }
      case Op::Always: {
        const auto a = eval(f.lhs());
        for (std::size_t i = 0; i < n; ++i) {
          bool holds = true;
          // Visiting every position reachable from i covers the whole suffix.
          std::size_t pos = i;
          for (std::size_t step = 0; step <= n; ++step, pos = w_.successor(pos)) holds = holds && a[pos];
          out[i] = holds;
        }
        break;
      }
    }
    return memo_.emplace(f, std::move(out)).first->second;
  }

private:
  bool until_at(std::size_t i, const std::vector<bool>& a, const std::vector<bool>& b) const {
    std::size_t pos = i;
    // After length() steps every position of the suffix has been visited.
    for (std::size_t step = 0; step <= w_.length(); ++step, pos = w_.successor(pos)) {
      if (b[pos]) return true;
      if (!a[pos]) return false;
    }
    return false;
  }

  const LassoWord& w_;
  std::map<Formula, std::vector<bool>> memo_;
};

}  // namespace detail

/// Direct recursive evaluation of LTL semantics at position 0 of the lasso.
inline bool formula_holds_on_lasso(const Formula& f, const LassoWord& w) {
  if (w.cycle.empty()) throw Error("lasso word needs a nonempty cycle");
  detail::LassoEvaluator eval(w);
  return eval.eval(f)[0];
}

}  // namespace rtamp::ltl
