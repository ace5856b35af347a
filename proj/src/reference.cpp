#include "ez/reference.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>

#include "ez/audio.hpp"
#include "ez/rng.hpp"

namespace ez::reference {

namespace {

constexpr std::size_t kFrameLen = 400;
constexpr std::size_t kFrameHop = 160;
constexpr std::size_t kFftSize = 512;
constexpr std::size_t kSpectrumBins = kFftSize / 2 + 1;
constexpr double kLogFloor = 1e-10;
constexpr double kPi = 3.141592653589793238462643383279502884;

// In-place iterative radix-2 FFT; n must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double angle = -2.0 * kPi / static_cast<double>(len);
    std::complex<double> wn(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wn;
      }
    }
  }
}

// Triangular filterbank weights over the one-sided spectrum. The 18 boundary
// points sit on the 200 Hz grid of the toy-corpus class tones, so filter i
// peaks exactly at 200*(i+1) Hz and each class lights up its own filter;
// that alignment is what makes the classes separable by construction.
std::vector<std::vector<double>> filterbank_weights(int sample_rate_hz) {
  std::vector<std::vector<double>> w(kToyFeatureDim, std::vector<double>(kSpectrumBins, 0.0));
  const double bins_per_hz = static_cast<double>(kFftSize) / sample_rate_hz;
  const double top = static_cast<double>(kSpectrumBins - 1);
  auto edge = [&](std::size_t m) {
    return std::min(200.0 * static_cast<double>(m) * bins_per_hz, top);
  };
  for (std::size_t f = 0; f < kToyFeatureDim; ++f) {
    double lo = edge(f), mid = edge(f + 1), hi = edge(f + 2);
    for (std::size_t k = 0; k < kSpectrumBins; ++k) {
      double x = static_cast<double>(k);
      if (x > lo && x <= mid)
        w[f][k] = (x - lo) / (mid - lo);
      else if (x > mid && x < hi)
        w[f][k] = (hi - x) / (hi - mid);
    }
  }
  return w;
}

}  // namespace

NdArray toy_features(const std::vector<double>& wave, int sample_rate_hz) {
  if (wave.empty()) raise(ErrorKind::SchemaError, "toy_features: empty wave");
  if (sample_rate_hz < 1) raise(ErrorKind::SchemaError, "toy_features: bad sample rate");

  std::vector<double> padded;
  const std::vector<double>* x = &wave;
  if (wave.size() < kFrameLen) {
    padded = wave;
    padded.resize(kFrameLen, 0.0);
    x = &padded;
  }
  std::size_t n_frames = 1 + (x->size() - kFrameLen) / kFrameHop;

  NdArray feats({n_frames, kToyFeatureDim});
  const auto bank = filterbank_weights(sample_rate_hz);
  // Hann window keeps spectral leakage out of far filters, so off-tone
  // filter energies carry no class information.
  std::vector<double> window(kFrameLen);
  for (std::size_t i = 0; i < kFrameLen; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                     static_cast<double>(kFrameLen - 1));
  std::vector<std::complex<double>> buf(kFftSize);
  std::vector<double> mag(kSpectrumBins);
  for (std::size_t f = 0; f < n_frames; ++f) {
    std::size_t off = f * kFrameHop;
    for (std::size_t i = 0; i < kFrameLen; ++i) buf[i] = (*x)[off + i] * window[i];
    std::fill(buf.begin() + kFrameLen, buf.end(), std::complex<double>(0.0, 0.0));
    fft_inplace(buf);
    for (std::size_t k = 0; k < kSpectrumBins; ++k) mag[k] = std::abs(buf[k]);
    for (std::size_t b = 0; b < kToyFeatureDim; ++b) {
      double energy = 0.0;
      for (std::size_t k = 0; k < kSpectrumBins; ++k) energy += bank[b][k] * mag[k];
      feats.at(f, b) = std::log(std::max(energy, kLogFloor));
    }
  }
  return feats;
}

manifest::DataDirectory generate_toy_corpus(const ToyCorpusSpec& spec,
                                            const std::filesystem::path& out_dir) {
  if (spec.n_classes < 2 || spec.n_classes > 16)
    raise(ErrorKind::BadConfig, "n_classes must be in [2, 16]");
  if (spec.n_utts == 0) raise(ErrorKind::BadConfig, "n_utts must be >= 1");

  auto wav_dir = out_dir / "wav";
  std::error_code ec;
  std::filesystem::create_directories(wav_dir, ec);
  if (ec) raise(ErrorKind::IoError, "cannot create " + wav_dir.string() + ": " + ec.message());

  std::size_t n_speakers = (spec.n_utts + 9) / 10;
  manifest::DataDirectory dd;
  for (std::size_t i = 0; i < spec.n_utts; ++i) {
    char id_buf[32], spk_buf[32];
    std::snprintf(id_buf, sizeof(id_buf), "utt%04zu", i);
    std::snprintf(spk_buf, sizeof(spk_buf), "spk%03zu", i % n_speakers);
    std::size_t cls = i % spec.n_classes;
    double freq = 200.0 * static_cast<double>(cls + 1);

    rng::SplitMix64 gen(rng::mix(static_cast<std::uint64_t>(spec.seed), i));
    double duration = gen.uniform(spec.duration_min_sec, spec.duration_max_sec);
    auto n_samples =
        static_cast<std::size_t>(std::lround(duration * spec.sample_rate_hz));

    audio::Wave wave;
    wave.sample_rate_hz = spec.sample_rate_hz;
    wave.samples.resize(n_samples);
    for (std::size_t t = 0; t < n_samples; ++t) {
      double phase = 2.0 * kPi * freq * static_cast<double>(t) / spec.sample_rate_hz;
      wave.samples[t] = 0.5 * std::sin(phase) + 0.01 * gen.gaussian();
    }

    auto wav_path = wav_dir / (std::string(id_buf) + ".wav");
    audio::write_wav(wav_path, wave);

    dd.wav[id_buf] = std::filesystem::absolute(wav_path).lexically_normal().string();
    dd.text[id_buf] = "class" + std::to_string(cls);
    dd.utt2spk[id_buf] = spk_buf;
  }
  dd.spk2utt = manifest::invert_speaker_map(dd.utt2spk);
  manifest::write_data_directory(dd, out_dir);
  return dd;
}

ToyClassifier::ToyClassifier(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) raise(ErrorKind::BadConfig, "ToyClassifier needs at least one label");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!label_index_.emplace(labels_[i], i).second)
      raise(ErrorKind::DuplicateKey, "duplicate label '" + labels_[i] + "'");
  }
  params["W"] = NdArray::matrix(labels_.size(), kToyFeatureDim);
  params["b"] = NdArray({labels_.size()});
}

std::vector<std::string> ToyClassifier::labels_from(const manifest::DataDirectory& dd) {
  std::set<std::string> labels;
  for (const auto& [id, transcript] : dd.text) labels.insert(transcript);
  return {labels.begin(), labels.end()};
}

std::size_t ToyClassifier::label_index(const std::string& token) const {
  auto it = label_index_.find(token);
  if (it == label_index_.end()) raise(ErrorKind::LabelError, "unknown class token '" + token + "'");
  return it->second;
}

std::vector<double> ToyClassifier::pooled_features(const dataset::Item& item) const {
  auto it = item.find("speech");
  if (it == item.end()) raise(ErrorKind::SchemaError, "item has no 'speech' field");
  const auto* wave = std::get_if<NdArray>(&it->second);
  if (!wave || wave->rank() != 1)
    raise(ErrorKind::SchemaError, "'speech' must be a rank-1 array");

  NdArray feats = toy_features(wave->values(), 16000);
  std::vector<double> pooled(kToyFeatureDim, 0.0);
  for (std::size_t f = 0; f < feats.rows(); ++f)
    for (std::size_t d = 0; d < kToyFeatureDim; ++d) pooled[d] += feats.at(f, d);
  for (double& v : pooled) v /= static_cast<double>(feats.rows());
  return pooled;
}

namespace {

// Stable softmax of logits, in place.
void softmax(std::vector<double>& z) {
  double zmax = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    total += v;
  }
  for (double& v : z) v /= total;
}

}  // namespace

trainer::LossAndGrads ToyClassifier::loss_and_grads(const trainer::ParamMap& p,
                                                    const trainer::Batch& batch) const {
  if (batch.empty()) raise(ErrorKind::EmptyDataset, "empty batch");
  const NdArray& W = p.at("W");
  const NdArray& b = p.at("b");
  const std::size_t n_cls = labels_.size();

  NdArray dW = NdArray::matrix(n_cls, kToyFeatureDim);
  NdArray db({n_cls});
  double loss = 0.0;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  for (const auto& item : batch) {
    auto text_it = item.find("text");
    if (text_it == item.end()) raise(ErrorKind::SchemaError, "item has no 'text' field");
    const auto* token = std::get_if<std::string>(&text_it->second);
    if (!token) raise(ErrorKind::SchemaError, "'text' must be a token string");
    std::size_t target = label_index(*token);

    std::vector<double> x = pooled_features(item);
    std::vector<double> z(n_cls);
    for (std::size_t c = 0; c < n_cls; ++c) {
      double acc = b.at(c);
      for (std::size_t d = 0; d < kToyFeatureDim; ++d) acc += W.at(c, d) * x[d];
      z[c] = acc;
    }
    softmax(z);
    loss += -std::log(std::max(z[target], 1e-300)) * inv_batch;

    for (std::size_t c = 0; c < n_cls; ++c) {
      double delta = (z[c] - (c == target ? 1.0 : 0.0)) * inv_batch;
      db.at(c) += delta;
      for (std::size_t d = 0; d < kToyFeatureDim; ++d) dW.at(c, d) += delta * x[d];
    }
  }

  trainer::LossAndGrads out;
  out.loss = loss;
  out.grads["W"] = std::move(dW);
  out.grads["b"] = std::move(db);
  return out;
}

std::string ToyClassifier::predict(const trainer::ParamMap& p, const dataset::Item& item) const {
  const NdArray& W = p.at("W");
  const NdArray& b = p.at("b");
  std::vector<double> x = pooled_features(item);
  std::size_t best = 0;
  double best_z = -1e300;
  for (std::size_t c = 0; c < labels_.size(); ++c) {
    double acc = b.at(c);
    for (std::size_t d = 0; d < kToyFeatureDim; ++d) acc += W.at(c, d) * x[d];
    if (acc > best_z) {
      best_z = acc;
      best = c;
    }
  }
  return labels_[best];
}

std::map<std::string, double> ToyClassifier::batch_metrics(const trainer::ParamMap& p,
                                                           const trainer::Batch& batch) const {
  if (batch.empty()) return {};
  std::size_t correct = 0;
  for (const auto& item : batch) {
    const auto* token = std::get_if<std::string>(&item.at("text"));
    if (!token) raise(ErrorKind::SchemaError, "'text' must be a token string");
    if (predict(p, item) == *token) ++correct;
  }
  return {{"accuracy", static_cast<double>(correct) / static_cast<double>(batch.size())}};
}

}  // namespace ez::reference
