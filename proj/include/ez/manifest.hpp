#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ez/error.hpp"

namespace ez::manifest {

// A segments-file entry: a time slice of a recording.
struct Segment {
  std::string recording_id;
  double start_sec = 0.0;
  double end_sec = 0.0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Utterance {
  std::string id;
  std::string audio_source;  // file path or trailing-pipe command
  std::string speaker_id;
  std::string transcript;
  std::optional<Segment> segment;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

// Parsed Kaldi-style data directory. Keys are kept in sorted maps so a
// directory writes back canonically and compares field-exactly.
struct DataDirectory {
  std::map<std::string, std::string> wav;      // id -> audio source
  std::map<std::string, std::string> text;     // id -> transcript
  std::map<std::string, std::string> utt2spk;  // id -> speaker
  std::map<std::string, std::vector<std::string>> spk2utt;  // speaker -> sorted ids
  std::optional<std::map<std::string, Segment>> segments;

  friend bool operator==(const DataDirectory&, const DataDirectory&) = default;
};

enum class ViolationKind {
  MissingAudio,
  MissingText,
  MissingSpeaker,
  BadValue,
  BadSegment,
  MissingRecording,
  BadSpeakerMap,
  BadId,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string id;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

// Thrown by load_data_directory when the parsed directory breaks the
// DataDirectory invariants; carries every violation, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

using ScpEntries = std::vector<std::pair<std::string, std::string>>;

// Kaldi .scp grammar: first whitespace-delimited token is the key, the rest
// of the line (trimmed) is the value. Values may contain spaces (pipe
// commands), so only the first whitespace run splits. File order preserved.
ScpEntries parse_scp_text(const std::string& content);

// Inverse of parse_scp_text: "<key> <value>\n" per entry.
std::string format_scp_text(const ScpEntries& entries);

std::map<std::string, std::vector<std::string>> invert_speaker_map(
    const std::map<std::string, std::string>& utt2spk);

std::vector<Violation> validate_data_directory(const DataDirectory& dd);

DataDirectory load_data_directory(const std::filesystem::path& path);

void write_data_directory(const DataDirectory& dd, const std::filesystem::path& path);

// One Utterance per segment when segments are present, otherwise one per
// wav entry.
std::vector<Utterance> resolve_segments(const DataDirectory& dd);

}  // namespace ez::manifest
