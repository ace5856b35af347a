#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ez/audio.hpp"
#include "ez/dataset.hpp"
#include "helpers.hpp"

using namespace ez;
using namespace ez::dataset;
using ez::test::TempDir;

namespace {

using Pair = std::pair<std::vector<double>, std::string>;

std::shared_ptr<VectorSource<Pair>> pair_source(std::vector<Pair> records) {
  return std::make_shared<VectorSource<Pair>>(std::move(records));
}

DataInfo pair_info(const ez::test::CallCounter& speech_calls = {},
                   const ez::test::CallCounter& text_calls = {}) {
  DataInfo info;
  info.fields.emplace_back("speech", [c = speech_calls.count](const std::any& rec) {
    ++*c;
    return FieldValue(NdArray::vector(std::any_cast<const Pair&>(rec).first));
  });
  info.fields.emplace_back("text", [c = text_calls.count](const std::any& rec) {
    ++*c;
    return FieldValue(std::any_cast<const Pair&>(rec).second);
  });
  return info;
}

std::vector<Pair> toy_records() {
  return {{{0.1, 0.2}, "a"}, {{0.3}, "b"}, {{0.4, 0.5, 0.6}, "c"}};
}

}  // namespace

TEST_CASE("build_dataset basics") {
  auto ds = build_dataset(pair_source(toy_records()), pair_info());
  CHECK(ds.size() == 3);
  CHECK(ds.ids() == std::vector<std::string>{"0", "1", "2"});

  SUBCASE("explicit ids") {
    auto named = build_dataset(pair_source(toy_records()), pair_info(),
                               std::vector<std::string>{"x", "y", "z"});
    CHECK(named.index_of("y") == 1);
  }

  SUBCASE("duplicate ids") {
    try {
      build_dataset(pair_source(toy_records()), pair_info(),
                    std::vector<std::string>{"a", "a", "b"});
      FAIL("expected DuplicateKey");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DuplicateKey);
    }
  }

  SUBCASE("duplicate field names") {
    DataInfo info;
    info.fields.emplace_back("f", [](const std::any&) { return FieldValue(std::string("x")); });
    info.fields.emplace_back("f", [](const std::any&) { return FieldValue(std::string("y")); });
    CHECK_THROWS_AS(build_dataset(pair_source(toy_records()), std::move(info)), Error);
  }
}

TEST_CASE("laziness: construction invokes zero extractors") {
  ez::test::CallCounter speech, text;
  auto ds = build_dataset(pair_source(toy_records()), pair_info(speech, text));
  CHECK(speech.value() == 0);
  CHECK(text.value() == 0);

  ds.get_item(std::size_t{0});
  CHECK(speech.value() == 1);
  CHECK(text.value() == 1);
}

TEST_CASE("failing extractor surfaces only at its item") {
  DataInfo info;
  info.fields.emplace_back("f", [](const std::any& rec) {
    const auto& p = std::any_cast<const Pair&>(rec);
    if (p.second == "c") throw std::runtime_error("boom");
    return FieldValue(p.second);
  });
  auto ds = build_dataset(pair_source(toy_records()), std::move(info));
  CHECK(std::get<std::string>(ds.get_item(std::size_t{0}).at("f")) == "a");
  CHECK(std::get<std::string>(ds.get_item(std::size_t{1}).at("f")) == "b");
  try {
    ds.get_item(std::size_t{2});
    FAIL("expected ExtractionError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ExtractionError);
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
    CHECK(std::string(e.what()).find("'f'") != std::string::npos);
  }
}

TEST_CASE("get_item") {
  auto ds = build_dataset(pair_source(toy_records()), pair_info());

  SUBCASE("both extractors see the same source record") {
    auto item = ds.get_item(std::size_t{1});
    CHECK(std::get<NdArray>(item.at("speech")).values() == std::vector<double>{0.3});
    CHECK(std::get<std::string>(item.at("text")) == "b");
  }

  SUBCASE("schema stability: field set equals the DataInfo key set") {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      auto item = ds.get_item(i);
      REQUIRE(item.size() == 2);
      CHECK(item.count("speech") == 1);
      CHECK(item.count("text") == 1);
    }
  }

  SUBCASE("out of range and unknown id") {
    try {
      ds.get_item(std::size_t{3});
      FAIL("expected IndexError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::IndexError);
    }
    CHECK_THROWS_AS(ds.get_item("nope"), Error);
  }

  SUBCASE("non-finite extractor output is rejected") {
    DataInfo info;
    info.fields.emplace_back("f", [](const std::any&) {
      return FieldValue(NdArray::vector({1.0, std::nan("")}));
    });
    auto bad = build_dataset(pair_source(toy_records()), std::move(info));
    try {
      bad.get_item(std::size_t{0});
      FAIL("expected ExtractionError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ExtractionError);
    }
  }
}

TEST_CASE("get_item agrees with direct extractor application") {
  rng::SplitMix64 gen(55);
  std::vector<Pair> records;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> wave(1 + gen.bounded(20));
    for (auto& v : wave) v = gen.uniform(-1.0, 1.0);
    records.push_back({wave, ez::test::random_token(gen)});
  }
  auto ds = build_dataset(pair_source(records), pair_info());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto item = ds.get_item(i);
    CHECK(std::get<NdArray>(item.at("speech")).values() == records[i].first);
    CHECK(std::get<std::string>(item.at("text")) == records[i].second);
    // determinism of repeated access
    CHECK(ds.get_item(i) == item);
  }
}

TEST_CASE("from_data_directory") {
  TempDir dir("ds_fromdir");
  auto wav_dir = dir / "wavs";
  std::filesystem::create_directories(wav_dir);

  manifest::DataDirectory dd;
  for (int i = 0; i < 3; ++i) {
    std::string id = "u" + std::to_string(i);
    auto path = wav_dir / (id + ".wav");
    audio::write_wav(path, {ez::test::sine_wave(200.0 * (i + 1), 16000, 16000), 16000});
    dd.wav[id] = path.string();
    dd.text[id] = "class" + std::to_string(i);
    dd.utt2spk[id] = "s0";
  }
  dd.spk2utt = manifest::invert_speaker_map(dd.utt2spk);

  SUBCASE("length and sorted ids, transcripts match") {
    auto ds = from_data_directory(dd, audio::load_audio_source);
    REQUIRE(ds.size() == 3);
    CHECK(ds.ids() == std::vector<std::string>{"u0", "u1", "u2"});
    for (std::size_t i = 0; i < ds.size(); ++i) {
      auto item = ds.get_item(i);
      CHECK(std::get<std::string>(item.at("text")) == dd.text.at(ds.ids()[i]));
    }
  }

  SUBCASE("segments trim the waveform: 0.5 s at 16 kHz is 8000 samples") {
    manifest::DataDirectory sd;
    sd.wav = {{"rec", dd.wav.at("u0")}};
    sd.text = {{"g", "tok"}};
    sd.utt2spk = {{"g", "s0"}};
    sd.spk2utt = manifest::invert_speaker_map(sd.utt2spk);
    sd.segments = std::map<std::string, manifest::Segment>{{"g", {"rec", 0.0, 0.5}}};
    auto ds = from_data_directory(sd, audio::load_audio_source);
    auto item = ds.get_item(std::size_t{0});
    CHECK(std::get<NdArray>(item.at("speech")).numel() == 8000);
  }

  SUBCASE("loader failure surfaces as ExtractionError") {
    manifest::DataDirectory bad = dd;
    bad.wav["u0"] = (dir / "missing.wav").string();
    auto ds = from_data_directory(bad, audio::load_audio_source);
    try {
      ds.get_item("u0");
      FAIL("expected ExtractionError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ExtractionError);
    }
  }
}

TEST_CASE("to_data_directory") {
  SUBCASE("two-item dataset gives two wav entries") {
    TempDir dir("ds_todir");
    std::vector<Pair> records{{ez::test::sine_wave(300, 16000, 4000), "hello"},
                              {ez::test::sine_wave(500, 16000, 2000), "world"}};
    auto ds = build_dataset(pair_source(records), pair_info(),
                            std::vector<std::string>{"a1", "b2"});
    auto dd = to_data_directory(ds, dir.path(), 16000);
    CHECK(dd.wav.size() == 2);
    CHECK(dd.text.at("a1") == "hello");
    CHECK(dd.utt2spk.at("a1") == "a1");  // synthetic speaker per id
    CHECK(manifest::validate_data_directory(dd).empty());
  }

  SUBCASE("missing text field is a SchemaError") {
    DataInfo info;
    info.fields.emplace_back("speech", [](const std::any& rec) {
      return FieldValue(NdArray::vector(std::any_cast<const Pair&>(rec).first));
    });
    auto ds = build_dataset(pair_source(toy_records()), std::move(info));
    TempDir dir("ds_noschema");
    try {
      to_data_directory(ds, dir.path(), 16000);
      FAIL("expected SchemaError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SchemaError);
    }
  }

  SUBCASE("speaker field is honored") {
    DataInfo info = pair_info();
    info.fields.emplace_back("speaker",
                             [](const std::any&) { return FieldValue(std::string("narrator")); });
    auto ds = build_dataset(pair_source(toy_records()), std::move(info));
    TempDir dir("ds_spk");
    auto dd = to_data_directory(ds, dir.path(), 16000);
    CHECK(dd.utt2spk.at("0") == "narrator");
  }
}

TEST_CASE("legacy round trip preserves ids, transcripts, and samples exactly") {
  TempDir dir("ds_rt");
  rng::SplitMix64 gen(77);

  // Quantized samples (k/32768) so the PCM container is lossless.
  std::vector<Pair> records;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> wave(500 + gen.bounded(3000));
    for (auto& v : wave)
      v = static_cast<double>(static_cast<int>(gen.bounded(65536)) - 32768) / 32768.0;
    records.push_back({wave, ez::test::random_token(gen)});
  }
  std::vector<std::string> ids{"u0", "u1", "u2", "u3", "u4"};
  auto ds = build_dataset(pair_source(records), pair_info(), ids);

  auto dd = to_data_directory(ds, dir.path(), 16000);
  auto ds2 = from_data_directory(dd, audio::load_audio_source);

  REQUIRE(ds2.size() == ds.size());
  CHECK(ds2.ids() == ids);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto a = ds.get_item(i);
    auto b = ds2.get_item(i);
    CHECK(std::get<std::string>(a.at("text")) == std::get<std::string>(b.at("text")));
    CHECK(std::get<NdArray>(a.at("speech")) == std::get<NdArray>(b.at("speech")));
  }
}
