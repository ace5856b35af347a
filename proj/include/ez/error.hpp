#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ez {

// Every failure the library reports carries one of these kinds so callers
// (and the CLI) can branch on the class of failure without parsing messages.
enum class ErrorKind {
  DuplicateKey,
  MalformedLine,
  MissingManifest,
  ValidationFailure,
  IoError,
  IndexError,
  ExtractionError,
  SchemaError,
  UnsupportedShape,
  EmptyStats,
  NonFiniteGradient,
  EmptyDataset,
  CorruptCheckpoint,
  IncompatibleCheckpoint,
  NoTargetsMatched,
  NotAdapted,
  BadFactor,
  LabelError,
  UnknownModel,
  MalformedRegistry,
  ChecksumMismatch,
  DownloadError,
  CorruptArchive,
  BadConfig,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace ez
