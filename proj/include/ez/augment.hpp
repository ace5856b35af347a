#pragma once

#include <string>
#include <vector>

#include "ez/rng.hpp"

namespace ez::finetune {

enum class AugKind { Volume, Speed, Tempo };

std::string_view to_string(AugKind kind);
AugKind aug_kind_from_string(const std::string& name);

struct AugOp {
  AugKind kind;
  std::vector<double> factors;

  friend bool operator==(const AugOp&, const AugOp&) = default;
};

// With probability `probability`, exactly one op is drawn uniformly and
// applied with a factor drawn uniformly from its choices; otherwise the
// wave passes through unchanged.
struct AugmentationSpec {
  double probability = 0.3;
  std::vector<AugOp> ops;

  // volume {0.9, 1.1}, speed {0.9}, tempo {0.9} at 30%.
  static AugmentationSpec defaults();

  friend bool operator==(const AugmentationSpec&, const AugmentationSpec&) = default;
};

// Samplewise gain, clipped back to [-1, 1].
std::vector<double> apply_volume(const std::vector<double>& wave, double gain);

// Classic speed perturbation: linear-interpolation resampling. Duration and
// pitch both scale; output length = round(len / factor). Factor in [0.5, 2].
std::vector<double> apply_speed(const std::vector<double>& wave, double factor,
                                int sample_rate_hz);

// Time stretch preserving pitch, synchronized overlap-add (frame 1024, hop
// frame/2, search radius 256). Output length within one frame of
// round(len / factor). Waves shorter than one frame pass through unchanged.
std::vector<double> apply_tempo(const std::vector<double>& wave, double factor,
                                int sample_rate_hz);

std::vector<double> augment(const std::vector<double>& wave, const AugmentationSpec& spec,
                            rng::SplitMix64& rng, int sample_rate_hz = 16000);

}  // namespace ez::finetune
