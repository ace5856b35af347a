#include "ez/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace ez::manifest {

namespace {

constexpr std::string_view kWhitespace = " \t\r\f\v";

bool is_space(char c) { return kWhitespace.find(c) != std::string_view::npos; }

std::string_view trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(kWhitespace);
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(kWhitespace);
  return s.substr(b, e - b + 1);
}

bool contains_whitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return is_space(c) || c == '\n'; });
}

// Strict UTF-8 validity check (rejects overlongs, surrogates, > U+10FFFF).
bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xe0) == 0xc0) {
      len = 2;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      len = 3;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000))
      return false;  // overlong
    if (cp >= 0xd800 && cp <= 0xdfff) return false;
    if (cp > 0x10ffff) return false;
    i += len;
  }
  return true;
}

std::vector<std::string_view> split_lines(const std::string& content) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t nl = content.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(std::string_view(content).substr(start));
      break;
    }
    lines.push_back(std::string_view(content).substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::vector<std::string> split_tokens(std::string_view s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t b = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > b) tokens.emplace_back(s.substr(b, i - b));
  }
  return tokens;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) raise(ErrorKind::IoError, "read failed for " + path.string());
  return buf.str();
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& token, std::size_t line_no, const std::filesystem::path& file) {
  const char* begin = token.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + token.size() || token.empty())
    raise(ErrorKind::MalformedLine,
          file.string() + ":" + std::to_string(line_no) + ": bad number '" + token + "'");
  return v;
}

void check_value(std::vector<Violation>& out, const std::string& id, std::string_view value,
                 const char* what) {
  if (value.empty())
    out.push_back({ViolationKind::BadValue, id, std::string(what) + " is empty"});
  else if (trim(value) != value || value.find('\n') != std::string_view::npos)
    out.push_back({ViolationKind::BadValue, id,
                   std::string(what) + " has surrounding whitespace or a newline"});
  else if (!valid_utf8(value))
    out.push_back({ViolationKind::BadValue, id, std::string(what) + " is not valid UTF-8"});
}

}  // namespace

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::MissingAudio: return "MissingAudio";
    case ViolationKind::MissingText: return "MissingText";
    case ViolationKind::MissingSpeaker: return "MissingSpeaker";
    case ViolationKind::BadValue: return "BadValue";
    case ViolationKind::BadSegment: return "BadSegment";
    case ViolationKind::MissingRecording: return "MissingRecording";
    case ViolationKind::BadSpeakerMap: return "BadSpeakerMap";
    case ViolationKind::BadId: return "BadId";
  }
  return "UnknownViolation";
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(ErrorKind::ValidationFailure,
            [&violations] {
              std::string msg = std::to_string(violations.size()) + " violation(s)";
              for (const auto& v : violations)
                msg += "\n  " + std::string(to_string(v.kind)) + " [" + v.id + "] " + v.message;
              return msg;
            }()),
      violations_(std::move(violations)) {}

ScpEntries parse_scp_text(const std::string& content) {
  ScpEntries entries;
  std::set<std::string> seen;
  auto lines = split_lines(content);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string_view line = lines[n];
    if (trim(line).empty()) continue;
    if (!valid_utf8(line))
      raise(ErrorKind::MalformedLine, "line " + std::to_string(n + 1) + ": invalid UTF-8");
    std::size_t key_begin = line.find_first_not_of(kWhitespace);
    std::size_t key_end = key_begin;
    while (key_end < line.size() && !is_space(line[key_end])) ++key_end;
    std::string_view key = line.substr(key_begin, key_end - key_begin);
    std::string_view value = trim(line.substr(key_end));
    if (value.empty())
      raise(ErrorKind::MalformedLine,
            "line " + std::to_string(n + 1) + ": key '" + std::string(key) + "' has no value");
    entries.emplace_back(std::string(key), std::string(value));
    if (!seen.insert(entries.back().first).second)
      raise(ErrorKind::DuplicateKey,
            "line " + std::to_string(n + 1) + ": duplicate key '" + std::string(key) + "'");
  }
  return entries;
}

std::string format_scp_text(const ScpEntries& entries) {
  std::string out;
  for (const auto& [key, value] : entries) {
    out += key;
    out += ' ';
    out += value;
    out += '\n';
  }
  return out;
}

std::map<std::string, std::vector<std::string>> invert_speaker_map(
    const std::map<std::string, std::string>& utt2spk) {
  std::map<std::string, std::vector<std::string>> spk2utt;
  for (const auto& [utt, spk] : utt2spk) spk2utt[spk].push_back(utt);
  for (auto& [spk, utts] : spk2utt) std::sort(utts.begin(), utts.end());
  return spk2utt;
}

std::vector<Violation> validate_data_directory(const DataDirectory& dd) {
  std::vector<Violation> out;

  // The utterance key universe is segments when present, wav otherwise.
  std::set<std::string> utt_keys;
  if (dd.segments) {
    for (const auto& [id, seg] : *dd.segments) utt_keys.insert(id);
  } else {
    for (const auto& [id, src] : dd.wav) utt_keys.insert(id);
  }

  std::set<std::string> universe = utt_keys;
  for (const auto& [id, v] : dd.text) universe.insert(id);
  for (const auto& [id, v] : dd.utt2spk) universe.insert(id);

  for (const auto& id : universe) {
    if (id.empty() || contains_whitespace(id) || !valid_utf8(id))
      out.push_back({ViolationKind::BadId, id, "utterance id empty or contains whitespace"});
    if (!utt_keys.count(id))
      out.push_back({ViolationKind::MissingAudio, id,
                     dd.segments ? "no segments entry" : "no wav.scp entry"});
    if (!dd.text.count(id)) out.push_back({ViolationKind::MissingText, id, "no text entry"});
    if (!dd.utt2spk.count(id))
      out.push_back({ViolationKind::MissingSpeaker, id, "no utt2spk entry"});
  }

  for (const auto& [id, src] : dd.wav) check_value(out, id, src, "audio source");
  for (const auto& [id, t] : dd.text) check_value(out, id, t, "transcript");
  for (const auto& [id, spk] : dd.utt2spk) {
    if (spk.empty() || contains_whitespace(spk) || !valid_utf8(spk))
      out.push_back({ViolationKind::BadValue, id, "speaker id empty or contains whitespace"});
  }

  auto expected = invert_speaker_map(dd.utt2spk);
  if (dd.spk2utt != expected) {
    std::set<std::string> spks;
    for (const auto& [s, u] : dd.spk2utt) spks.insert(s);
    for (const auto& [s, u] : expected) spks.insert(s);
    for (const auto& s : spks) {
      auto a = dd.spk2utt.find(s);
      auto b = expected.find(s);
      if (a == dd.spk2utt.end() || b == expected.end() || a->second != b->second)
        out.push_back({ViolationKind::BadSpeakerMap, s, "spk2utt is not the inverse of utt2spk"});
    }
  }

  if (dd.segments) {
    for (const auto& [id, seg] : *dd.segments) {
      if (!(seg.start_sec >= 0.0 && seg.start_sec < seg.end_sec))
        out.push_back({ViolationKind::BadSegment, id,
                       "bad time range [" + format_double(seg.start_sec) + ", " +
                           format_double(seg.end_sec) + ")"});
      if (!dd.wav.count(seg.recording_id))
        out.push_back({ViolationKind::MissingRecording, id,
                       "recording '" + seg.recording_id + "' not in wav.scp"});
    }
  }

  return out;
}

DataDirectory load_data_directory(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path))
    raise(ErrorKind::IoError, "not a directory: " + path.string());
  for (const char* name : {"wav.scp", "text", "utt2spk"})
    if (!std::filesystem::exists(path / name))
      raise(ErrorKind::MissingManifest, std::string(name));

  DataDirectory dd;
  for (auto& [key, value] : parse_scp_text(read_file(path / "wav.scp"))) dd.wav.emplace(key, value);
  for (auto& [key, value] : parse_scp_text(read_file(path / "text"))) dd.text.emplace(key, value);
  for (auto& [key, value] : parse_scp_text(read_file(path / "utt2spk")))
    dd.utt2spk.emplace(key, value);

  if (std::filesystem::exists(path / "spk2utt")) {
    for (auto& [spk, value] : parse_scp_text(read_file(path / "spk2utt")))
      dd.spk2utt.emplace(spk, split_tokens(value));
  } else {
    dd.spk2utt = invert_speaker_map(dd.utt2spk);
  }

  auto seg_path = path / "segments";
  if (std::filesystem::exists(seg_path)) {
    std::map<std::string, Segment> segs;
    std::string content = read_file(seg_path);
    auto lines = split_lines(content);
    for (std::size_t n = 0; n < lines.size(); ++n) {
      if (trim(lines[n]).empty()) continue;
      auto tokens = split_tokens(lines[n]);
      if (tokens.size() != 4)
        raise(ErrorKind::MalformedLine,
              seg_path.string() + ":" + std::to_string(n + 1) + ": expected 4 columns, got " +
                  std::to_string(tokens.size()));
      Segment seg{tokens[1], parse_double(tokens[2], n + 1, seg_path),
                  parse_double(tokens[3], n + 1, seg_path)};
      if (!segs.emplace(tokens[0], seg).second)
        raise(ErrorKind::DuplicateKey, seg_path.string() + ":" + std::to_string(n + 1) +
                                           ": duplicate segment '" + tokens[0] + "'");
    }
    dd.segments = std::move(segs);
  }

  auto violations = validate_data_directory(dd);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return dd;
}

void write_data_directory(const DataDirectory& dd, const std::filesystem::path& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) raise(ErrorKind::IoError, "cannot create " + path.string() + ": " + ec.message());

  auto write_file = [&](const char* name, const std::string& content) {
    auto file = path / name;
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::IoError, "cannot open " + file.string());
    out << content;
    out.flush();
    if (!out) raise(ErrorKind::IoError, "write failed for " + file.string());
  };

  write_file("wav.scp", format_scp_text(ScpEntries(dd.wav.begin(), dd.wav.end())));
  write_file("text", format_scp_text(ScpEntries(dd.text.begin(), dd.text.end())));
  write_file("utt2spk", format_scp_text(ScpEntries(dd.utt2spk.begin(), dd.utt2spk.end())));

  ScpEntries spk_entries;
  for (const auto& [spk, utts] : dd.spk2utt) {
    std::string joined;
    for (std::size_t i = 0; i < utts.size(); ++i) {
      if (i) joined += ' ';
      joined += utts[i];
    }
    spk_entries.emplace_back(spk, joined);
  }
  write_file("spk2utt", format_scp_text(spk_entries));

  if (dd.segments) {
    std::string content;
    for (const auto& [id, seg] : *dd.segments) {
      content += id;
      content += ' ';
      content += seg.recording_id;
      content += ' ';
      content += format_double(seg.start_sec);
      content += ' ';
      content += format_double(seg.end_sec);
      content += '\n';
    }
    write_file("segments", content);
  }
}

std::vector<Utterance> resolve_segments(const DataDirectory& dd) {
  std::vector<Utterance> utts;
  if (dd.segments) {
    utts.reserve(dd.segments->size());
    for (const auto& [id, seg] : *dd.segments)
      utts.push_back({id, dd.wav.at(seg.recording_id), dd.utt2spk.at(id), dd.text.at(id), seg});
  } else {
    utts.reserve(dd.wav.size());
    for (const auto& [id, src] : dd.wav)
      utts.push_back({id, src, dd.utt2spk.at(id), dd.text.at(id), std::nullopt});
  }
  return utts;
}

}  // namespace ez::manifest
