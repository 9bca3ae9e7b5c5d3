#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace circsq {

// Base class of every error raised by the library. The stage tag is filled
// in by the pipeline so that the CLI can report where a run failed.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}

  const std::string& stage() const { return stage_; }
  void set_stage(std::string stage) { stage_ = std::move(stage); }

 private:
  std::string stage_;
};

// Precondition or dimension violation in a call.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Rejected configuration (file or flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A checked invariant did not hold. Seeing one of these means a bug
// upstream of the check, or a region/field outside the supported regime.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// The final independent check rejected the produced piece map.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace circsq
