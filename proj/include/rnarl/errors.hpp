#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rnarl {

// Base for every error raised by the library. Harness code maps subclasses
// onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidBase : public Error {
 public:
  InvalidBase(std::size_t position, char symbol)
      : Error("invalid base '" + std::string(1, symbol) + "' at position " +
              std::to_string(position)),
        position_(position),
        symbol_(symbol) {}

  std::size_t position() const { return position_; }
  char symbol() const { return symbol_; }

 private:
  std::size_t position_;
  char symbol_;
};

class SelfFlip : public Error {
 public:
  explicit SelfFlip(std::size_t position)
      : Error("flip at position " + std::to_string(position) +
              " does not change the base") {}
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class SequenceTooLong : public Error {
 public:
  using Error::Error;
};

class ProgramUnavailable : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(std::string raw_line)
      : Error("unexpected reply from folding program: \"" + raw_line + "\""),
        raw_line_(std::move(raw_line)) {}

  const std::string& raw_line() const { return raw_line_; }

 private:
  std::string raw_line_;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class EpisodeFinished : public Error {
 public:
  EpisodeFinished() : Error("episode already finished; call reset()") {}
};

class EmptyBuffer : public Error {
 public:
  EmptyBuffer() : Error("cannot sample from an empty buffer") {}
};

class EmptyBatch : public Error {
 public:
  EmptyBatch() : Error("empty trajectory batch") {}
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace rnarl
