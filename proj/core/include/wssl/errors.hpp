#pragma once

#include <stdexcept>
#include <string>

namespace wssl {

/// Bad user input: malformed config, inconsistent dimensions, bad ranges.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem / serialization failure.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Training produced a non-finite loss.
struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(int epoch_, const std::string& what)
      : std::runtime_error(what), epoch(epoch_) {}
  int epoch;
};

}  // namespace wssl
