#include "ez/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ez/error.hpp"

namespace ez::audio {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

Wave read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::IoError, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 44 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    raise(ErrorKind::IoError, "not a RIFF/WAVE file: " + path.string());

  int sample_rate = 0;
  int channels = 0;
  int bits = 0;
  std::size_t data_off = 0, data_len = 0;
  std::size_t off = 12;
  while (off + 8 <= bytes.size()) {
    std::uint32_t chunk_len = get_u32(p + off + 4);
    if (std::memcmp(p + off, "fmt ", 4) == 0 && off + 8 + 16 <= bytes.size()) {
      std::uint16_t format = get_u16(p + off + 8);
      channels = get_u16(p + off + 10);
      sample_rate = static_cast<int>(get_u32(p + off + 12));
      bits = get_u16(p + off + 22);
      if (format != 1)
        raise(ErrorKind::IoError, "unsupported WAV format (PCM only): " + path.string());
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      data_off = off + 8;
      data_len = chunk_len;
    }
    off += 8 + chunk_len + (chunk_len & 1);
  }
  if (sample_rate == 0 || data_off == 0)
    raise(ErrorKind::IoError, "missing fmt/data chunk: " + path.string());
  if (channels != 1 || bits != 16)
    raise(ErrorKind::IoError, "expected 16-bit mono PCM: " + path.string());
  if (data_off + data_len > bytes.size())
    raise(ErrorKind::IoError, "truncated data chunk: " + path.string());

  Wave wave;
  wave.sample_rate_hz = sample_rate;
  std::size_t n = data_len / 2;
  wave.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::int16_t s = static_cast<std::int16_t>(get_u16(p + data_off + 2 * i));
    wave.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return wave;
}

void write_wav(const std::filesystem::path& path, const Wave& wave) {
  std::string out;
  std::size_t n = wave.samples.size();
  std::uint32_t data_len = static_cast<std::uint32_t>(n * 2);
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_len);
  for (std::size_t i = 0; i < n; ++i) {
    double v = wave.samples[i];
    long q = std::lround(v * 32768.0);
    q = std::clamp(q, -32768L, 32767L);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) raise(ErrorKind::IoError, "cannot open " + path.string());
  os << out;
  os.flush();
  if (!os) raise(ErrorKind::IoError, "write failed for " + path.string());
}

Wave slice(const Wave& wave, double start_sec, double end_sec) {
  auto clamp_index = [&](double t) {
    long idx = std::lround(t * wave.sample_rate_hz);
    return static_cast<std::size_t>(
        std::clamp<long>(idx, 0, static_cast<long>(wave.samples.size())));
  };
  std::size_t b = clamp_index(start_sec);
  std::size_t e = clamp_index(end_sec);
  if (e < b) e = b;
  Wave out;
  out.sample_rate_hz = wave.sample_rate_hz;
  out.samples.assign(wave.samples.begin() + b, wave.samples.begin() + e);
  return out;
}

Wave load_audio_source(const std::string& audio_source,
                       const std::optional<manifest::Segment>& segment) {
  if (!audio_source.empty() && audio_source.back() == '|')
    raise(ErrorKind::IoError, "pipe-command audio sources are not executable here: " + audio_source);
  Wave wave = read_wav(audio_source);
  if (segment) return slice(wave, segment->start_sec, segment->end_sec);
  return wave;
}

}  // namespace ez::audio
