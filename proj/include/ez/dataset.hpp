#pragma once

#include <any>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ez/array.hpp"
#include "ez/audio.hpp"
#include "ez/manifest.hpp"

namespace ez::dataset {

// A field is either a finite numeric array or a token string.
using FieldValue = std::variant<NdArray, std::string>;
using Item = std::map<std::string, FieldValue>;

// Extractors receive the raw source record and produce one field. They run
// on demand, never at dataset construction time.
using Extractor = std::function<FieldValue(const std::any& record)>;

// Ordered field-name -> extractor mapping.
struct DataInfo {
  std::vector<std::pair<std::string, Extractor>> fields;
};

// Anything with a length and random access by index.
class IndexableSource {
 public:
  virtual ~IndexableSource() = default;
  virtual std::size_t size() const = 0;
  virtual std::any at(std::size_t index) const = 0;
};

template <class T>
class VectorSource final : public IndexableSource {
 public:
  explicit VectorSource(std::vector<T> records) : records_(std::move(records)) {}
  std::size_t size() const override { return records_.size(); }
  std::any at(std::size_t index) const override { return records_[index]; }

 private:
  std::vector<T> records_;
};

// Wraps an indexable source with named extractor functions. Immutable after
// construction; get_item is safe to call concurrently when extractors are
// pure.
class EZDataset {
 public:
  EZDataset(std::shared_ptr<const IndexableSource> source, DataInfo data_info,
            std::optional<std::vector<std::string>> ids = std::nullopt);

  std::size_t size() const { return source_->size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const DataInfo& data_info() const { return data_info_; }

  std::size_t index_of(const std::string& id) const;

  Item get_item(std::size_t index) const;
  Item get_item(const std::string& id) const;

 private:
  std::shared_ptr<const IndexableSource> source_;
  DataInfo data_info_;
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> id_index_;
};

EZDataset build_dataset(std::shared_ptr<const IndexableSource> source, DataInfo data_info,
                        std::optional<std::vector<std::string>> ids = std::nullopt);

using AudioLoader =
    std::function<audio::Wave(const std::string& audio_source,
                              const std::optional<manifest::Segment>& segment)>;

// Bridges a legacy data directory into the dataset abstraction: fields
// `speech` (segment-trimmed waveform) and `text` (transcript), ids sorted.
EZDataset from_data_directory(const manifest::DataDirectory& dd, AudioLoader audio_loader);

// Dumps a dataset back into a Kaldi-style directory, writing waveforms as
// PCM WAV under <out_path>/wav. Requires `speech` and `text` fields; a
// `speaker` field is honored when present, otherwise each utterance gets a
// synthetic speaker equal to its own id.
manifest::DataDirectory to_data_directory(const EZDataset& ds,
                                          const std::filesystem::path& out_path,
                                          int sample_rate_hz);

}  // namespace ez::dataset
