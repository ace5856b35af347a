#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "ez/manifest.hpp"

namespace ez::audio {

// Mono waveform, samples nominally in [-1, 1].
struct Wave {
  std::vector<double> samples;
  int sample_rate_hz = 16000;
};

// PCM WAV, 16-bit signed little-endian, mono. The only on-disk audio
// container this toolkit reads or writes; it is lossless for values already
// quantized to k/32768.
Wave read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Wave& wave);

// Slice [start_sec, end_sec) out of a wave.
Wave slice(const Wave& wave, double start_sec, double end_sec);

// Reads `audio_source` as a WAV file path and applies the segment when
// present. Pipe-command sources (trailing '|') are not executed and raise
// IoError.
Wave load_audio_source(const std::string& audio_source,
                       const std::optional<manifest::Segment>& segment);

}  // namespace ez::audio
