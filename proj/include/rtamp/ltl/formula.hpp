#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <utility>

namespace rtamp::ltl {

enum class Op : std::uint8_t { Atom, True, False, Not, And, Or, Next, Until, Release, Eventually, Always };

/// Immutable LTL syntax tree. Copies share structure.
class Formula {
public:
  Formula() : Formula(Op::True, {}, nullptr, nullptr) {}

  static Formula atom(std::string name) { return Formula(Op::Atom, std::move(name), nullptr, nullptr); }
  static Formula top() { return Formula(Op::True, {}, nullptr, nullptr); }
  static Formula bottom() { return Formula(Op::False, {}, nullptr, nullptr); }
  static Formula negate(Formula f) { return unary(Op::Not, std::move(f)); }
  static Formula next(Formula f) { return unary(Op::Next, std::move(f)); }
  static Formula eventually(Formula f) { return unary(Op::Eventually, std::move(f)); }
  static Formula always(Formula f) { return unary(Op::Always, std::move(f)); }
  static Formula conj(Formula l, Formula r) { return binary(Op::And, std::move(l), std::move(r)); }
  static Formula disj(Formula l, Formula r) { return binary(Op::Or, std::move(l), std::move(r)); }
  static Formula until(Formula l, Formula r) { return binary(Op::Until, std::move(l), std::move(r)); }
  static Formula release(Formula l, Formula r) { return binary(Op::Release, std::move(l), std::move(r)); }

  static Formula unary(Op op, Formula child) { return Formula(op, {}, std::move(child).node_, nullptr); }
  static Formula binary(Op op, Formula l, Formula r) {
    return Formula(op, {}, std::move(l).node_, std::move(r).node_);
  }

  Op op() const noexcept { return node_->op; }
  const std::string& name() const noexcept { return node_->name; }
  /// Only child of unary nodes, left child of binary nodes.
  Formula lhs() const { return Formula(node_->lhs); }
  Formula rhs() const { return Formula(node_->rhs); }

  bool is_unary() const noexcept {
    return op() == Op::Not || op() == Op::Next || op() == Op::Eventually || op() == Op::Always;
  }
  bool is_binary() const noexcept {
    return op() == Op::And || op() == Op::Or || op() == Op::Until || op() == Op::Release;
  }

  /// Fully parenthesized, reparseable text.
  std::string str() const {
    switch (op()) {
      case Op::Atom: return name();
      case Op::True: return "true";
      case Op::False: return "false";
      case Op::Not: return "!" + wrap(lhs());
      case Op::Next: return "X " + wrap(lhs());
      case Op::Eventually: return "F " + wrap(lhs());
      case Op::Always: return "G " + wrap(lhs());
      case Op::And: return wrap(lhs()) + " & " + wrap(rhs());
      case Op::Or: return wrap(lhs()) + " | " + wrap(rhs());
      case Op::Until: return wrap(lhs()) + " U " + wrap(rhs());
      case Op::Release: return wrap(lhs()) + " R " + wrap(rhs());
    }
    return {};
  }

  friend bool operator==(const Formula& a, const Formula& b) { return compare(a, b) == 0; }
  friend bool operator<(const Formula& a, const Formula& b) { return compare(a, b) < 0; }

  /// Structural total order.
  static int compare(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_) return 0;
    if (a.op() != b.op()) return a.op() < b.op() ? -1 : 1;
    if (a.op() == Op::Atom) return a.name().compare(b.name()) < 0 ? -1 : (a.name() == b.name() ? 0 : 1);
    if (a.is_unary()) return compare(a.lhs(), b.lhs());
    if (a.is_binary()) {
      if (int c = compare(a.lhs(), b.lhs()); c != 0) return c;
      return compare(a.rhs(), b.rhs());
    }
    return 0;
  }

  void collect_atoms(std::set<std::string>& out) const {
    if (op() == Op::Atom) out.insert(name());
    if (is_unary() || is_binary()) lhs().collect_atoms(out);
    if (is_binary()) rhs().collect_atoms(out);
  }

  std::set<std::string> atoms() const {
    std::set<std::string> out;
    collect_atoms(out);
    return out;
  }

private:
  struct Node {
    Op op;
    std::string name;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  Formula(Op op, std::string name, std::shared_ptr<const Node> l, std::shared_ptr<const Node> r)
      : node_(std::make_shared<const Node>(Node{op, std::move(name), std::move(l), std::move(r)})) {}

  static std::string wrap(const Formula& f) {
    if (f.op() == Op::Atom || f.op() == Op::True || f.op() == Op::False) return f.str();
    return "(" + f.str() + ")";
  }

  std::shared_ptr<const Node> node_;
};

/// Negation normal form: negations only on atoms, F/G rewritten as U/R.
inline Formula to_nnf(const Formula& f, bool negated = false) {
  switch (f.op()) {
    case Op::Atom: return negated ? Formula::negate(f) : f;
    case Op::True: return negated ? Formula::bottom() : f;
    case Op::False: return negated ? Formula::top() : f;
    case Op::Not: return to_nnf(f.lhs(), !negated);
    case Op::Next: return Formula::next(to_nnf(f.lhs(), negated));
    case Op::And:
    case Op::Or: {
      const bool conj = (f.op() == Op::And) != negated;
      auto l = to_nnf(f.lhs(), negated);
      auto r = to_nnf(f.rhs(), negated);
      return conj ? Formula::conj(std::move(l), std::move(r)) : Formula::disj(std::move(l), std::move(r));
    }
    case Op::Until:
    case Op::Release: {
      const bool until = (f.op() == Op::Until) != negated;
      auto l = to_nnf(f.lhs(), negated);
      auto r = to_nnf(f.rhs(), negated);
      return until ? Formula::until(std::move(l), std::move(r)) : Formula::release(std::move(l), std::move(r));
    }
    case Op::Eventually:
      // F a = true U a ; !F a = false R !a
      return negated ? Formula::release(Formula::bottom(), to_nnf(f.lhs(), true))
                     : Formula::until(Formula::top(), to_nnf(f.lhs(), false));
    case Op::Always:
      return negated ? Formula::until(Formula::top(), to_nnf(f.lhs(), true))
                     : Formula::release(Formula::bottom(), to_nnf(f.lhs(), false));
  }
  return f;
}

inline bool is_nnf(const Formula& f) {
  switch (f.op()) {
    case Op::Atom:
    case Op::True:
    case Op::False: return true;
    case Op::Not: return f.lhs().op() == Op::Atom;
    case Op::Eventually:
    case Op::Always: return false;
    case Op::Next: return is_nnf(f.lhs());
    default: return is_nnf(f.lhs()) && is_nnf(f.rhs());
  }
}

}  // namespace rtamp::ltl
