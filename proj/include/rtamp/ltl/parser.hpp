#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "rtamp/errors.hpp"
#include "rtamp/ltl/formula.hpp"

namespace rtamp::ltl {

namespace detail {

// Grammar, loosest binding first:
//   disj  := conj ('|' conj)*
//   conj  := temp ('&' temp)*
//   temp  := unary (('U' | 'R') temp)?        right-associative
//   unary := ('!' | 'X' | 'F' | 'G') unary | primary
//   primary := atom | 'true' | 'false' | '(' disj ')'
class Parser {
public:
  explicit Parser(std::string_view text) : text_(text) {}

  Formula parse() {
    skip_ws();
    Formula f = disjunction();
    skip_ws();
    if (pos_ != text_.size()) fail({"'&'", "'|'", "'U'", "'R'", "end of input"}, "unexpected trailing input");
    return f;
  }

private:
  Formula disjunction() {
    Formula f = conjunction();
    while (accept('|')) f = Formula::disj(std::move(f), conjunction());
    return f;
  }

  Formula conjunction() {
    Formula f = temporal();
    while (accept('&')) f = Formula::conj(std::move(f), temporal());
    return f;
  }

  Formula temporal() {
    Formula f = unary();
    if (accept('U')) return Formula::until(std::move(f), temporal());
    if (accept('R')) return Formula::release(std::move(f), temporal());
    return f;
  }

  Formula unary() {
    if (accept('!')) return Formula::negate(unary());
    if (accept('X')) return Formula::next(unary());
    if (accept('F')) return Formula::eventually(unary());
    if (accept('G')) return Formula::always(unary());
    return primary();
  }

  Formula primary() {
    skip_ws();
    if (accept('(')) {
      Formula f = disjunction();
      if (!accept(')')) fail({"')'", "'&'", "'|'", "'U'", "'R'"}, "unbalanced parenthesis");
      return f;
    }
    if (pos_ < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_]))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size()) {
        const auto c = static_cast<unsigned char>(text_[pos_]);
        if (!(std::islower(c) || std::isdigit(c) || c == '_')) break;
        ++pos_;
      }
      std::string name(text_.substr(start, pos_ - start));
      if (name == "true") return Formula::top();
      if (name == "false") return Formula::bottom();
      return Formula::atom(std::move(name));
    }
    fail({"atom", "'true'", "'false'", "'('", "'!'", "'X'", "'F'", "'G'"},
         pos_ < text_.size() ? "unexpected character" : "unexpected end of input");
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(std::vector<std::string> expected, const std::string& detail) const {
    throw ParseError(pos_, std::move(expected), detail);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses an LTL formula. Throws ParseError carrying the byte offset and the expected tokens.
inline Formula parse_formula(std::string_view text) { return detail::Parser(text).parse(); }

}  // namespace rtamp::ltl
