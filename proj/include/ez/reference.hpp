#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ez/manifest.hpp"
#include "ez/model.hpp"

namespace ez::reference {

// Deterministic synthetic corpus: each utterance is a sine at
// 200 * (class + 1) Hz, amplitude 0.5, plus seeded Gaussian noise
// (sigma = 0.01). Classes are separable in filterbank space by
// construction, so trainer convergence is a sharp pass/fail signal.
struct ToyCorpusSpec {
  std::size_t n_utts = 20;
  std::size_t n_classes = 4;            // in [2, 16]
  int sample_rate_hz = 16000;
  double duration_min_sec = 0.2;
  double duration_max_sec = 1.0;
  std::int64_t seed = 0;
};

manifest::DataDirectory generate_toy_corpus(const ToyCorpusSpec& spec,
                                            const std::filesystem::path& out_dir);

// Log filterbank features: Hann-windowed frames of 400 samples, hop 160,
// 16 triangular filters (edges on the 200 Hz grid of the corpus tones) over
// a 512-point magnitude spectrum, floored at log(1e-10). Waves shorter than
// one frame are zero-padded to a single frame.
NdArray toy_features(const std::vector<double>& wave, int sample_rate_hz);

constexpr std::size_t kToyFeatureDim = 16;

// Linear softmax classifier over mean-pooled toy_features. Params: W
// (n_classes x 16) and b (n_classes), zero-initialized; gradients are
// analytic (softmax minus one-hot), no autodiff anywhere.
class ToyClassifier : public trainer::TrainableModel {
 public:
  explicit ToyClassifier(std::vector<std::string> labels);

  trainer::LossAndGrads loss_and_grads(const trainer::ParamMap& p,
                                       const trainer::Batch& batch) const override;
  std::string predict(const trainer::ParamMap& p, const dataset::Item& item) const override;
  std::map<std::string, double> batch_metrics(const trainer::ParamMap& p,
                                              const trainer::Batch& batch) const override;

  const std::vector<std::string>& labels() const { return labels_; }

  // Sorted distinct transcripts of a data directory, the label set used by
  // the CLI when fitting the toy task to arbitrary manifests.
  static std::vector<std::string> labels_from(const manifest::DataDirectory& dd);

 private:
  std::size_t label_index(const std::string& token) const;
  std::vector<double> pooled_features(const dataset::Item& item) const;

  std::vector<std::string> labels_;
  std::map<std::string, std::size_t> label_index_;
};

}  // namespace ez::reference
