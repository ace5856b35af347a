#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "ez/manifest.hpp"
#include "helpers.hpp"

using namespace ez;
using namespace ez::manifest;
using ez::test::TempDir;

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

DataDirectory toy_dd() {
  DataDirectory dd;
  dd.wav = {{"u1", "/d/a.wav"}, {"u2", "/d/b.wav"}, {"u3", "/d/c.wav"}};
  dd.text = {{"u1", "hello there"}, {"u2", "general"}, {"u3", "kenobi"}};
  dd.utt2spk = {{"u1", "s1"}, {"u2", "s1"}, {"u3", "s2"}};
  dd.spk2utt = invert_speaker_map(dd.utt2spk);
  return dd;
}

}  // namespace

TEST_CASE("parse_scp_text basic grammar") {
  auto single = parse_scp_text("utt1 /d/a.wav\n");
  REQUIRE(single.size() == 1);
  CHECK(single[0].first == "utt1");
  CHECK(single[0].second == "/d/a.wav");

  CHECK(parse_scp_text("").empty());

  auto piped = parse_scp_text("u1 cat a.flac |\nu2 b.wav\n");
  REQUIRE(piped.size() == 2);
  CHECK(piped[0].second == "cat a.flac |");
  CHECK(piped[1].second == "b.wav");
}

TEST_CASE("parse_scp_text errors") {
  CHECK_THROWS_AS(parse_scp_text("u1 a\nu1 b\n"), Error);
  try {
    parse_scp_text("u1 a\nu1 b\n");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DuplicateKey);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  try {
    parse_scp_text("u1 a\nu2\n");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedLine);
  }

  // invalid UTF-8 in a value
  std::string bad = "u1 a\xff\xfe\n";
  CHECK_THROWS_AS(parse_scp_text(bad), Error);
}

TEST_CASE("parse_scp_text agrees with an independent splitting oracle") {
  rng::SplitMix64 gen(101);
  for (int round = 0; round < 200; ++round) {
    std::string content;
    std::size_t n = gen.bounded(12);
    std::set<std::string> used;
    for (std::size_t i = 0; i < n; ++i) {
      std::string key = ez::test::random_token(gen);
      if (!used.insert(key).second) continue;
      std::string value = ez::test::random_token(gen, 1, 8);
      if (gen.uniform01() < 0.3) value += " " + ez::test::random_token(gen, 1, 8) + " |";
      content += key + " " + value + "\n";
    }
    auto parsed = parse_scp_text(content);
    auto oracle = ez::test::scp_oracle(content);
    REQUIRE(parsed.size() == oracle.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      CHECK(parsed[i].first == oracle[i].first);
      CHECK(parsed[i].second == oracle[i].second);
    }
  }
}

TEST_CASE("parse_scp_text is order-preserving and idempotent over re-serialization") {
  std::string content = "z last.wav\na first.wav\nm mid.wav\n";
  auto parsed = parse_scp_text(content);
  REQUIRE(parsed.size() == 3);
  CHECK(parsed[0].first == "z");
  CHECK(parsed[2].first == "m");
  CHECK(format_scp_text(parse_scp_text(format_scp_text(parsed))) == format_scp_text(parsed));
}

TEST_CASE("invert_speaker_map") {
  std::map<std::string, std::string> utt2spk{{"u1", "s1"}, {"u2", "s1"}};
  auto inv = invert_speaker_map(utt2spk);
  REQUIRE(inv.size() == 1);
  CHECK(inv.at("s1") == std::vector<std::string>{"u1", "u2"});

  CHECK(invert_speaker_map({}).empty());
}

TEST_CASE("invert_speaker_map is an involution up to flattening") {
  rng::SplitMix64 gen(7);
  std::map<std::string, std::string> utt2spk;
  for (int i = 0; i < 1000; ++i)
    utt2spk["u" + std::to_string(i)] = "s" + std::to_string(gen.bounded(37));

  auto inv = invert_speaker_map(utt2spk);
  std::size_t total = 0;
  std::map<std::string, std::string> flattened;
  for (const auto& [spk, utts] : inv) {
    total += utts.size();
    for (const auto& u : utts) flattened[u] = spk;
  }
  CHECK(total == utt2spk.size());
  CHECK(flattened == utt2spk);
}

TEST_CASE("load_data_directory on a constructed fixture") {
  TempDir dir("manifest_load");
  write_file(dir / "wav.scp", "u1 /d/a.wav\nu2 /d/b.wav\nu3 /d/c.wav\n");
  write_file(dir / "text", "u1 hi\nu2 there\nu3 again\n");
  write_file(dir / "utt2spk", "u1 s1\nu2 s1\nu3 s2\n");

  auto dd = load_data_directory(dir.path());
  CHECK(dd.wav.size() == 3);
  CHECK(dd.spk2utt.size() == 2);  // regenerated from utt2spk
  CHECK(dd.spk2utt.at("s1") == std::vector<std::string>{"u1", "u2"});
  CHECK_FALSE(dd.segments.has_value());
}

TEST_CASE("load_data_directory missing manifests") {
  TempDir dir("manifest_missing");
  write_file(dir / "wav.scp", "u1 /d/a.wav\n");
  write_file(dir / "utt2spk", "u1 s1\n");
  try {
    load_data_directory(dir.path());
    FAIL("expected MissingManifest");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingManifest);
    CHECK(std::string(e.what()).find("text") != std::string::npos);
  }
}

TEST_CASE("load_data_directory reports all violations") {
  TempDir dir("manifest_violations");
  write_file(dir / "wav.scp", "u1 /d/a.wav\n");
  write_file(dir / "text", "u1 hi\nu2 orphan\nu3 another\n");
  write_file(dir / "utt2spk", "u1 s1\nu2 s1\nu3 s1\n");
  try {
    load_data_directory(dir.path());
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.kind() == ErrorKind::ValidationFailure);
    CHECK(e.violations().size() == 2);  // u2 and u3 both lack audio
  }
}

TEST_CASE("validate_data_directory") {
  auto dd = toy_dd();
  CHECK(validate_data_directory(dd).empty());

  SUBCASE("id in text but not wav") {
    dd.text["ghost"] = "boo";
    auto violations = validate_data_directory(dd);
    bool found = false;
    for (const auto& v : violations)
      if (v.kind == ViolationKind::MissingAudio && v.id == "ghost") found = true;
    CHECK(found);
  }

  SUBCASE("segment with start == end") {
    dd.segments = std::map<std::string, Segment>{{"u1", {"u1", 1.0, 1.0}},
                                                 {"u2", {"u2", 0.0, 1.0}},
                                                 {"u3", {"u3", 0.0, 2.0}}};
    auto violations = validate_data_directory(dd);
    bool found = false;
    for (const auto& v : violations)
      if (v.kind == ViolationKind::BadSegment && v.id == "u1") found = true;
    CHECK(found);
  }

  SUBCASE("segment recording not in wav") {
    dd.segments = std::map<std::string, Segment>{{"u1", {"nowhere", 0.0, 1.0}},
                                                 {"u2", {"u2", 0.0, 1.0}},
                                                 {"u3", {"u3", 0.0, 2.0}}};
    auto violations = validate_data_directory(dd);
    bool found = false;
    for (const auto& v : violations)
      if (v.kind == ViolationKind::MissingRecording && v.id == "u1") found = true;
    CHECK(found);
  }

  SUBCASE("inconsistent spk2utt") {
    dd.spk2utt["s9"] = {"u1"};
    CHECK_FALSE(validate_data_directory(dd).empty());
  }

  SUBCASE("valid random directories validate clean both with and without segments") {
    rng::SplitMix64 gen(11);
    for (int i = 0; i < 50; ++i) {
      auto random_dd = ez::test::random_data_directory(gen, 12, i % 2 == 0);
      CHECK(validate_data_directory(random_dd).empty());
    }
  }
}

TEST_CASE("write_data_directory round trip") {
  SUBCASE("random directories, field-exact") {
    rng::SplitMix64 gen(23);
    for (int i = 0; i < 40; ++i) {
      TempDir dir("manifest_rt");
      auto dd = ez::test::random_data_directory(gen, 15, i % 3 == 0);
      write_data_directory(dd, dir.path());
      auto loaded = load_data_directory(dir.path());
      CHECK(loaded == dd);
    }
  }

  SUBCASE("pipe-command audio source preserved byte-exactly") {
    TempDir dir("manifest_pipe");
    auto dd = toy_dd();
    dd.wav["u1"] = "sox  /raw/a.flac  -t wav - rate 16000 |";
    write_data_directory(dd, dir.path());
    CHECK(load_data_directory(dir.path()).wav.at("u1") == dd.wav.at("u1"));
  }

  SUBCASE("empty directory gives four empty files") {
    TempDir dir("manifest_empty");
    write_data_directory(DataDirectory{}, dir.path());
    for (const char* name : {"wav.scp", "text", "utt2spk", "spk2utt"}) {
      CAPTURE(name);
      REQUIRE(std::filesystem::exists(dir / name));
      CHECK(std::filesystem::file_size(dir / name) == 0);
    }
    CHECK_FALSE(std::filesystem::exists(dir / "segments"));
  }

  SUBCASE("keys written in sorted order with trailing newline") {
    TempDir dir("manifest_sorted");
    write_data_directory(toy_dd(), dir.path());
    std::ifstream in(dir / "wav.scp", std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), {});
    CHECK(content == "u1 /d/a.wav\nu2 /d/b.wav\nu3 /d/c.wav\n");
  }
}

TEST_CASE("resolve_segments") {
  auto dd = toy_dd();

  SUBCASE("no segments: one utterance per wav key") {
    auto utts = resolve_segments(dd);
    REQUIRE(utts.size() == 3);
    CHECK(utts[0].id == "u1");
    CHECK(utts[0].transcript == "hello there");
    CHECK_FALSE(utts[0].segment.has_value());
  }

  SUBCASE("segments attach timing and recording audio") {
    DataDirectory sd;
    sd.wav = {{"rec1", "/d/rec1.wav"}};
    sd.text = {{"g1", "one"}, {"g2", "two"}};
    sd.utt2spk = {{"g1", "s1"}, {"g2", "s1"}};
    sd.spk2utt = invert_speaker_map(sd.utt2spk);
    sd.segments = std::map<std::string, Segment>{{"g1", {"rec1", 0.0, 1.5}},
                                                 {"g2", {"rec1", 1.5, 2.0}}};
    auto utts = resolve_segments(sd);
    REQUIRE(utts.size() == 2);
    CHECK(utts[0].audio_source == "/d/rec1.wav");
    CHECK(utts[0].segment->start_sec == 0.0);
    CHECK(utts[0].segment->end_sec == 1.5);
  }

  SUBCASE("count equals |segments| when present else |wav|") {
    rng::SplitMix64 gen(31);
    for (int i = 0; i < 30; ++i) {
      auto random_dd = ez::test::random_data_directory(gen, 10, i % 2 == 0);
      std::size_t expected =
          random_dd.segments ? random_dd.segments->size() : random_dd.wav.size();
      CHECK(resolve_segments(random_dd).size() == expected);
    }
  }
}
