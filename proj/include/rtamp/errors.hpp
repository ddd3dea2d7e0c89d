#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rtamp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
  ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& detail)
      : Error(make_message(offset, expected, detail)), offset_(offset), expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
  static std::string make_message(std::size_t offset, const std::vector<std::string>& expected,
                                  const std::string& detail) {
    std::string msg = "syntax error at offset " + std::to_string(offset) + ": " + detail;
    if (!expected.empty()) {
      msg += " (expected one of:";
      for (const auto& e : expected) msg += " " + e;
      msg += ")";
    }
    return msg;
  }

  std::size_t offset_;
  std::vector<std::string> expected_;
};

class NoRegion : public Error {
public:
  using Error::Error;
};

class IllegalAction : public Error {
public:
  using Error::Error;
};

class UnknownAtom : public Error {
public:
  using Error::Error;
};

class InconsistentObservation : public Error {
public:
  using Error::Error;
};

class NoPlan : public Error {
public:
  using Error::Error;
};

class GraphTooLarge : public Error {
public:
  using Error::Error;
};

class UnresolvableEvent : public Error {
public:
  using Error::Error;
};

class HeldObjectConflict : public Error {
public:
  using Error::Error;
};

/// An object position lies outside every region.
class PerceptionGap : public Error {
public:
  using Error::Error;
};

/// Schema validation failure; carries one entry per offending field path.
class ValidationError : public Error {
public:
  explicit ValidationError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
  static std::string join(const std::vector<std::string>& problems) {
    std::string out = "validation failed";
    for (const auto& p : problems) out += "; " + p;
    return out;
  }

  std::vector<std::string> problems_;
};

}  // namespace rtamp
