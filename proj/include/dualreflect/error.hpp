#pragma once

#include <stdexcept>
#include <string>

namespace dualreflect {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input failed a domain invariant before any work was done.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A template placeholder could not be bound, or a required input was empty.
class RenderError : public Error {
 public:
  using Error::Error;
};

// Judgment output carried neither a leading "True" nor "False" token.
class UnparseableJudgment : public Error {
 public:
  using Error::Error;
};

// All extraction tiers failed to find a final-translation object.
class ExtractionFailure : public Error {
 public:
  using Error::Error;
};

class IllegalStateError : public Error {
 public:
  using Error::Error;
};

// Scripted-backend script violations: bad schema, no matching rule,
// or a rule whose response queue ran dry.
class ScriptError : public Error {
 public:
  using Error::Error;
};

class TranscriptError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

// Pearson input with fewer than two points or zero variance in a coordinate.
class DegenerateSample : public MetricError {
 public:
  using MetricError::MetricError;
};

class BackendError : public Error {
 public:
  enum class Kind { Transport, RateLimited, BadRequest, MalformedResponse };

  BackendError(Kind kind, const std::string& message, int status = 0, int attempts = 1)
      : Error(message), kind_(kind), status_(status), attempts_(attempts) {}

  Kind kind() const { return kind_; }
  int status() const { return status_; }
  int attempts() const { return attempts_; }

 private:
  Kind kind_;
  int status_;
  int attempts_;
};

}  // namespace dualreflect
