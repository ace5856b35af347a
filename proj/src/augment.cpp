#include "ez/augment.hpp"

#include <algorithm>
#include <cmath>

#include "ez/error.hpp"

namespace ez::finetune {

namespace {

constexpr std::size_t kSolaFrame = 1024;
constexpr std::size_t kSolaHop = kSolaFrame / 2;
constexpr long kSolaRadius = 256;

void check_factor(double factor) {
  if (!(factor >= 0.5 && factor <= 2.0))
    raise(ErrorKind::BadFactor,
          "factor " + std::to_string(factor) + " outside [0.5, 2.0]");
}

// Normalized cross-correlation between in[pos..pos+n) and ref[0..n).
double ncc(const std::vector<double>& in, std::size_t pos, const double* ref, std::size_t n) {
  double dot = 0.0, ea = 0.0, eb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = in[pos + i];
    double b = ref[i];
    dot += a * b;
    ea += a * a;
    eb += b * b;
  }
  return dot / std::sqrt(ea * eb + 1e-12);
}

}  // namespace

std::string_view to_string(AugKind kind) {
  switch (kind) {
    case AugKind::Volume: return "volume";
    case AugKind::Speed: return "speed";
    case AugKind::Tempo: return "tempo";
  }
  return "unknown";
}

AugKind aug_kind_from_string(const std::string& name) {
  if (name == "volume") return AugKind::Volume;
  if (name == "speed") return AugKind::Speed;
  if (name == "tempo") return AugKind::Tempo;
  raise(ErrorKind::BadConfig, "unknown augmentation kind '" + name + "'");
}

AugmentationSpec AugmentationSpec::defaults() {
  AugmentationSpec spec;
  spec.probability = 0.3;
  spec.ops = {{AugKind::Volume, {0.9, 1.1}}, {AugKind::Speed, {0.9}}, {AugKind::Tempo, {0.9}}};
  return spec;
}

std::vector<double> apply_volume(const std::vector<double>& wave, double gain) {
  if (!(gain > 0.0)) raise(ErrorKind::BadFactor, "gain must be positive");
  std::vector<double> out(wave.size());
  for (std::size_t i = 0; i < wave.size(); ++i)
    out[i] = std::clamp(wave[i] * gain, -1.0, 1.0);
  return out;
}

std::vector<double> apply_speed(const std::vector<double>& wave, double factor,
                                int sample_rate_hz) {
  (void)sample_rate_hz;
  check_factor(factor);
  if (wave.empty()) return {};
  auto out_len = static_cast<std::size_t>(
      std::lround(static_cast<double>(wave.size()) / factor));
  std::vector<double> out(out_len);
  const std::size_t last = wave.size() - 1;
  for (std::size_t i = 0; i < out_len; ++i) {
    double pos = static_cast<double>(i) * factor;
    auto base = static_cast<std::size_t>(pos);
    if (base >= last) {
      out[i] = wave[last];
      continue;
    }
    double frac = pos - static_cast<double>(base);
    out[i] = wave[base] + frac * (wave[base + 1] - wave[base]);
  }
  return out;
}

std::vector<double> apply_tempo(const std::vector<double>& wave, double factor,
                                int sample_rate_hz) {
  (void)sample_rate_hz;
  check_factor(factor);
  if (wave.size() < kSolaFrame) return wave;

  const auto target_len = static_cast<std::size_t>(
      std::lround(static_cast<double>(wave.size()) / factor));
  // Fixed synthesis grid: output is frame + (k-1) * hop samples, which lands
  // within half a hop of the target length.
  const std::size_t n_frames =
      target_len <= kSolaFrame
          ? 1
          : 1 + (target_len - kSolaFrame + kSolaHop / 2) / kSolaHop;

  std::vector<double> out(wave.begin(), wave.begin() + kSolaFrame);
  out.reserve(kSolaFrame + (n_frames - 1) * kSolaHop);

  const long max_start = static_cast<long>(wave.size() - kSolaFrame);
  for (std::size_t k = 1; k < n_frames; ++k) {
    const std::size_t syn_pos = k * kSolaHop;  // where the overlap begins
    long nominal = std::lround(static_cast<double>(syn_pos) * factor);
    nominal = std::clamp(nominal, 0L, max_start);

    // Pick the input offset whose overlap region best matches the current
    // output tail; ties prefer the nominal position.
    const double* tail = out.data() + syn_pos;
    long best_d = 0;
    double best_score = -2.0;
    for (long mag = 0; mag <= kSolaRadius; ++mag) {
      for (long d : {mag, -mag}) {
        long cand = nominal + d;
        if (cand < 0 || cand > max_start) continue;
        double score = ncc(wave, static_cast<std::size_t>(cand), tail, kSolaHop);
        if (score > best_score) {
          best_score = score;
          best_d = d;
        }
        if (mag == 0) break;
      }
    }
    const std::size_t src = static_cast<std::size_t>(nominal + best_d);

    // Linear crossfade over the first half of the frame, then append the rest.
    for (std::size_t i = 0; i < kSolaHop; ++i) {
      double w = static_cast<double>(i) / static_cast<double>(kSolaHop);
      out[syn_pos + i] = out[syn_pos + i] * (1.0 - w) + wave[src + i] * w;
    }
    out.insert(out.end(), wave.begin() + src + kSolaHop, wave.begin() + src + kSolaFrame);
  }
  return out;
}

std::vector<double> augment(const std::vector<double>& wave, const AugmentationSpec& spec,
                            rng::SplitMix64& rng, int sample_rate_hz) {
  if (!(spec.probability >= 0.0 && spec.probability <= 1.0))
    raise(ErrorKind::BadConfig, "augmentation probability outside [0, 1]");
  if (rng.uniform01() >= spec.probability || spec.ops.empty()) return wave;

  const AugOp& op = spec.ops[rng.bounded(spec.ops.size())];
  if (op.factors.empty()) return wave;
  double factor = op.factors[rng.bounded(op.factors.size())];
  switch (op.kind) {
    case AugKind::Volume: return apply_volume(wave, factor);
    case AugKind::Speed: return apply_speed(wave, factor, sample_rate_hz);
    case AugKind::Tempo: return apply_tempo(wave, factor, sample_rate_hz);
  }
  return wave;
}

}  // namespace ez::finetune
