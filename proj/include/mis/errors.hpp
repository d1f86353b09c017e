#pragma once

#include <stdexcept>
#include <string>

namespace mis {

// Every error raised by the engine derives from Error so callers (the CLI in
// particular) can separate engine failures from programming bugs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad magic, unsupported version or an unparseable record.
class FormatError : public Error {
 public:
  using Error::Error;
};

// File ended before the declared payload.
class TruncationError : public Error {
 public:
  using Error::Error;
};

// Data parsed fine but breaks a type invariant (NaN feature, duplicate child).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller passed arguments outside an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed synthetic-scene descriptor.
class DescriptorError : public Error {
 public:
  using Error::Error;
};

// A pluggable segmenter broke its output contract.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Reached a state the surrounding invariants rule out.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mis
