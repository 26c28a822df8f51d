#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "rnarl/fitness.hpp"

namespace rnarl {

// Parses an RNAfold-style structure line "<dot-bracket> (<energy>)".
// Throws ProtocolError on a malformed line and LengthMismatch when the
// structure does not cover expected_length bases.
FoldResult parse_fold_reply(std::string_view line, std::size_t expected_length);

// Talks to a long-lived folding program over stdin/stdout, one sequence per
// line. Calls on one instance are serialized.
class ExternalFoldModel final : public FitnessModel {
 public:
  // command is run through /bin/sh -c.
  explicit ExternalFoldModel(std::string command);
  ~ExternalFoldModel() override;

  ExternalFoldModel(const ExternalFoldModel&) = delete;
  ExternalFoldModel& operator=(const ExternalFoldModel&) = delete;

  FoldResult fold(const RnaSequence& s) const override;
  std::string name() const override { return "external"; }
  const std::string& command() const { return command_; }

 private:
  struct Process;

  std::string command_;
  mutable std::mutex mutex_;
  mutable std::unique_ptr<Process> process_;
};

}  // namespace rnarl
