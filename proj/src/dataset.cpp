#include "ez/dataset.hpp"

#include <set>

namespace ez::dataset {

EZDataset::EZDataset(std::shared_ptr<const IndexableSource> source, DataInfo data_info,
                     std::optional<std::vector<std::string>> ids)
    : source_(std::move(source)), data_info_(std::move(data_info)) {
  if (!source_) raise(ErrorKind::SchemaError, "dataset source is null");
  if (data_info_.fields.empty()) raise(ErrorKind::SchemaError, "DataInfo has no fields");
  std::set<std::string> names;
  for (const auto& [name, fn] : data_info_.fields) {
    if (name.empty()) raise(ErrorKind::SchemaError, "empty field name");
    if (!names.insert(name).second)
      raise(ErrorKind::DuplicateKey, "duplicate field name '" + name + "'");
    if (!fn) raise(ErrorKind::SchemaError, "field '" + name + "' has no extractor");
  }

  std::size_t n = source_->size();
  if (ids) {
    if (ids->size() != n)
      raise(ErrorKind::SchemaError, "ids length " + std::to_string(ids->size()) +
                                        " does not match source length " + std::to_string(n));
    ids_ = std::move(*ids);
  } else {
    ids_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids_.push_back(std::to_string(i));
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!id_index_.emplace(ids_[i], i).second)
      raise(ErrorKind::DuplicateKey, "duplicate dataset id '" + ids_[i] + "'");
  }
}

std::size_t EZDataset::index_of(const std::string& id) const {
  auto it = id_index_.find(id);
  if (it == id_index_.end()) raise(ErrorKind::IndexError, "unknown id '" + id + "'");
  return it->second;
}

Item EZDataset::get_item(std::size_t index) const {
  if (index >= size())
    raise(ErrorKind::IndexError, "index " + std::to_string(index) + " out of range [0, " +
                                     std::to_string(size()) + ")");
  std::any record = source_->at(index);
  Item item;
  for (const auto& [name, extract] : data_info_.fields) {
    FieldValue value;
    try {
      value = extract(record);
    } catch (const std::exception& e) {
      raise(ErrorKind::ExtractionError,
            "field '" + name + "' of item '" + ids_[index] + "': " + e.what());
    }
    if (const auto* arr = std::get_if<NdArray>(&value); arr && !arr->all_finite())
      raise(ErrorKind::ExtractionError,
            "field '" + name + "' of item '" + ids_[index] + "': non-finite values");
    item.emplace(name, std::move(value));
  }
  return item;
}

Item EZDataset::get_item(const std::string& id) const { return get_item(index_of(id)); }

EZDataset build_dataset(std::shared_ptr<const IndexableSource> source, DataInfo data_info,
                        std::optional<std::vector<std::string>> ids) {
  return EZDataset(std::move(source), std::move(data_info), std::move(ids));
}

EZDataset from_data_directory(const manifest::DataDirectory& dd, AudioLoader audio_loader) {
  auto utts = manifest::resolve_segments(dd);  // sorted by id already
  std::vector<std::string> ids;
  ids.reserve(utts.size());
  for (const auto& u : utts) ids.push_back(u.id);

  auto source = std::make_shared<VectorSource<manifest::Utterance>>(std::move(utts));
  DataInfo info;
  info.fields.emplace_back("speech", [loader = std::move(audio_loader)](const std::any& rec) {
    const auto& utt = std::any_cast<const manifest::Utterance&>(rec);
    return FieldValue(NdArray::vector(loader(utt.audio_source, utt.segment).samples));
  });
  info.fields.emplace_back("text", [](const std::any& rec) {
    return FieldValue(std::any_cast<const manifest::Utterance&>(rec).transcript);
  });
  return EZDataset(std::move(source), std::move(info), std::move(ids));
}

manifest::DataDirectory to_data_directory(const EZDataset& ds,
                                          const std::filesystem::path& out_path,
                                          int sample_rate_hz) {
  bool has_speech = false, has_text = false, has_speaker = false;
  for (const auto& [name, fn] : ds.data_info().fields) {
    has_speech |= name == "speech";
    has_text |= name == "text";
    has_speaker |= name == "speaker";
  }
  if (!has_speech) raise(ErrorKind::SchemaError, "dataset has no 'speech' field");
  if (!has_text) raise(ErrorKind::SchemaError, "dataset has no 'text' field");

  auto wav_dir = out_path / "wav";
  std::error_code ec;
  std::filesystem::create_directories(wav_dir, ec);
  if (ec) raise(ErrorKind::IoError, "cannot create " + wav_dir.string() + ": " + ec.message());

  manifest::DataDirectory dd;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::string& id = ds.ids()[i];
    Item item = ds.get_item(i);

    const auto* speech = std::get_if<NdArray>(&item.at("speech"));
    if (!speech || speech->rank() != 1)
      raise(ErrorKind::SchemaError, "'speech' of item '" + id + "' is not a rank-1 array");
    const auto* text = std::get_if<std::string>(&item.at("text"));
    if (!text) raise(ErrorKind::SchemaError, "'text' of item '" + id + "' is not a string");

    auto wav_path = wav_dir / (id + ".wav");
    audio::write_wav(wav_path, audio::Wave{speech->values(), sample_rate_hz});

    std::string speaker = id;
    if (has_speaker) {
      if (const auto* spk = std::get_if<std::string>(&item.at("speaker"))) speaker = *spk;
    }
    dd.wav[id] = std::filesystem::absolute(wav_path).lexically_normal().string();
    dd.text[id] = *text;
    dd.utt2spk[id] = speaker;
  }
  dd.spk2utt = manifest::invert_speaker_map(dd.utt2spk);
  manifest::write_data_directory(dd, out_path);
  return dd;
}

}  // namespace ez::dataset
