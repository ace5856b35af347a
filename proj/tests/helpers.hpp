#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <complex>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ez/dataset.hpp"
#include "ez/manifest.hpp"
#include "ez/rng.hpp"

namespace ez::test {

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ez_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string random_token(rng::SplitMix64& gen, std::size_t min_len = 1,
                                std::size_t max_len = 12) {
  static const char* kAlphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-./";
  std::size_t len = min_len + gen.bounded(max_len - min_len + 1);
  std::string out;
  for (std::size_t i = 0; i < len; ++i) out.push_back(kAlphabet[gen.bounded(66)]);
  return out;
}

// Random valid DataDirectory; with_segments adds a segments map over
// synthetic recordings.
inline manifest::DataDirectory random_data_directory(rng::SplitMix64& gen,
                                                     std::size_t max_utts = 20,
                                                     bool with_segments = false) {
  manifest::DataDirectory dd;
  std::size_t n = 1 + gen.bounded(max_utts);
  std::size_t n_spk = 1 + gen.bounded(5);

  if (with_segments) {
    std::size_t n_rec = 1 + gen.bounded(4);
    std::vector<std::string> recs;
    for (std::size_t r = 0; r < n_rec; ++r) {
      std::string rec_id = "rec" + std::to_string(r) + "_" + random_token(gen, 1, 6);
      dd.wav[rec_id] = "/audio/" + random_token(gen) + ".wav";
      recs.push_back(rec_id);
    }
    std::map<std::string, manifest::Segment> segs;
    for (std::size_t i = 0; i < n; ++i) {
      std::string id = "seg" + std::to_string(i) + "_" + random_token(gen, 1, 6);
      if (segs.count(id)) continue;
      double start = gen.uniform(0.0, 10.0);
      double end = start + gen.uniform(0.01, 5.0);
      segs[id] = {recs[gen.bounded(recs.size())], start, end};
      dd.text[id] = random_token(gen, 1, 20);
      dd.utt2spk[id] = "spk" + std::to_string(gen.bounded(n_spk));
    }
    dd.segments = std::move(segs);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::string id = "utt" + std::to_string(i) + "_" + random_token(gen, 1, 6);
      if (dd.wav.count(id)) continue;
      // Pipe-command sources exercise values with spaces.
      dd.wav[id] = gen.uniform01() < 0.3 ? "sox " + random_token(gen) + ".flac -t wav - |"
                                         : "/audio/" + random_token(gen) + ".wav";
      dd.text[id] = random_token(gen, 1, 20);
      dd.utt2spk[id] = "spk" + std::to_string(gen.bounded(n_spk));
    }
  }
  dd.spk2utt = manifest::invert_speaker_map(dd.utt2spk);
  return dd;
}

// Independent line-splitting oracle for .scp content: split on '\n', skip
// blank lines, first whitespace run separates key from value.
inline std::vector<std::pair<std::string, std::string>> scp_oracle(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    std::string ws = " \t\r\f\v";
    auto b = line.find_first_not_of(ws);
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(ws);
    line = line.substr(b, e - b + 1);
    auto split = line.find_first_of(ws);
    if (split == std::string::npos) continue;  // oracle only used on valid content
    auto vb = line.find_first_not_of(ws, split);
    out.emplace_back(line.substr(0, split), line.substr(vb));
  }
  return out;
}

// Naive DFT magnitude at an arbitrary (fractional-bin) frequency.
inline double goertzel_magnitude(const std::vector<double>& wave, double freq_hz,
                                 int sample_rate_hz) {
  std::complex<double> acc(0.0, 0.0);
  const double w = -2.0 * M_PI * freq_hz / sample_rate_hz;
  for (std::size_t n = 0; n < wave.size(); ++n)
    acc += wave[n] * std::complex<double>(std::cos(w * n), std::sin(w * n));
  return std::abs(acc);
}

// Spectral-peak oracle: scans [f_min, f_max] in fine steps.
inline double dominant_frequency_hz(const std::vector<double>& wave, int sample_rate_hz,
                                    double f_min, double f_max, double step = 0.25) {
  double best_f = f_min, best_mag = -1.0;
  for (double f = f_min; f <= f_max; f += step) {
    double mag = goertzel_magnitude(wave, f, sample_rate_hz);
    if (mag > best_mag) {
      best_mag = mag;
      best_f = f;
    }
  }
  return best_f;
}

inline double rms(const std::vector<double>& wave) {
  double acc = 0.0;
  for (double v : wave) acc += v * v;
  return std::sqrt(acc / static_cast<double>(wave.size()));
}

inline std::vector<double> sine_wave(double freq_hz, int sample_rate_hz, std::size_t n,
                                     double amplitude = 0.5) {
  std::vector<double> wave(n);
  for (std::size_t t = 0; t < n; ++t)
    wave[t] = amplitude * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(t) / sample_rate_hz);
  return wave;
}

// Extractor-call counter for laziness probes.
struct CallCounter {
  std::shared_ptr<std::atomic<int>> count = std::make_shared<std::atomic<int>>(0);
  int value() const { return count->load(); }
};

}  // namespace ez::test
