// Copyright (c) 2026 USM Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <fstream>
#include <random>

#include "test_util.h"
#include "usm/cfr.h"
#include "usm/io.h"
#include "usm/stats.h"

using namespace usm;
using namespace usm::test;

namespace {

template <typename T>
bool BitsEqual(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() &&
         (a.empty() ||
          std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0);
}

}  // namespace

TEST_CASE("feature files round-trip bit-identically") {
  TempDir dir;
  std::mt19937_64 rng(107);
  FeatureSequence seq;
  seq.dim = 3;
  seq.utterance_id = "utt-42";
  seq.speaker_id = "p225";
  for (int i = 0; i < 60; ++i) {
    seq.data.push_back(static_cast<float>(UnitRand(rng) * 200 - 100));
  }
  seq.data[4] = 0.0f;
  seq.data[5] = -0.0f;

  auto path = dir / "seq.usmf";
  WriteFeatures(path, seq);
  FeatureSequence back = ReadFeatures(path);
  CHECK(back.dim == 3);
  CHECK(back.utterance_id == "utt-42");
  CHECK(back.speaker_id == "p225");
  CHECK(BitsEqual(back.data, seq.data));

  SUBCASE("empty sequence") {
    FeatureSequence empty;
    empty.dim = 4;
    empty.utterance_id = "empty";
    auto epath = dir / "empty.usmf";
    WriteFeatures(epath, empty);
    FeatureSequence eback = ReadFeatures(epath);
    CHECK(eback.NumFrames() == 0);
    CHECK(eback.dim == 4);
  }
  SUBCASE("unicode ids") {
    seq.utterance_id = "发音-042";
    seq.speaker_id = "";
    auto upath = dir / "uni.usmf";
    WriteFeatures(upath, seq);
    FeatureSequence uback = ReadFeatures(upath);
    CHECK(uback.utterance_id == "发音-042");
    CHECK(uback.speaker_id.empty());
  }
}

TEST_CASE("truncated payloads name the missing byte counts") {
  TempDir dir;
  auto path = dir / "seq.usmf";
  WriteFeatures(path, MakeFeatures(2, {{1.0f, 2.0f}, {3.0f, 4.0f}}, "u"));
  std::string bytes = ReadFileBytes(path);
  WriteFileBytes(path, bytes.substr(0, bytes.size() - 5));
  try {
    ReadFeatures(path);
    FAIL("expected format error");
  } catch (const UsmError& e) {
    CHECK(e.code() == ErrorCode::kFormat);
    std::string msg = e.what();
    CHECK(msg.find("byte offset") != std::string::npos);
    CHECK(msg.find("need") != std::string::npos);
  }
}

TEST_CASE("bad magic and version are rejected") {
  TempDir dir;
  auto path = dir / "seq.usmf";
  WriteFeatures(path, MakeFeatures(1, {{1.0f}}));
  std::string bytes = ReadFileBytes(path);

  SUBCASE("magic") {
    std::string mutated = bytes;
    mutated[0] = 'X';
    WriteFileBytes(path, mutated);
    try {
      ReadFeatures(path);
      FAIL("expected format error");
    } catch (const UsmError& e) {
      CHECK(e.code() == ErrorCode::kFormat);
      CHECK(std::string(e.what()).find("magic") != std::string::npos);
    }
  }
  SUBCASE("version") {
    std::string mutated = bytes;
    mutated[4] = 9;
    WriteFileBytes(path, mutated);
    CHECK_THROWS_AS(ReadFeatures(path), UsmError);
  }
  SUBCASE("wrong container type") {
    CHECK_THROWS_AS(ReadPosteriors(path), UsmError);
    CHECK_THROWS_AS(ReadDictionary(path), UsmError);
  }
  SUBCASE("trailing garbage") {
    WriteFileBytes(path, bytes + "zz");
    try {
      ReadFeatures(path);
      FAIL("expected format error");
    } catch (const UsmError& e) {
      CHECK(std::string(e.what()).find("trailing") != std::string::npos);
    }
  }
}

TEST_CASE("dense posterior files round-trip bit-identically") {
  TempDir dir;
  std::mt19937_64 rng(109);
  std::vector<std::vector<float>> rows;
  for (int t = 0; t < 10; ++t) rows.push_back(RandomPosteriorRow(rng, 5));
  PosteriorSequence seq = MakePosteriors(5, rows);

  auto path = dir / "post.usmp";
  WritePosteriorsDense(path, seq);
  PosteriorSequence back = ReadPosteriors(path);
  CHECK(back.num_classes() == 5);
  CHECK(back.mode() == PosteriorMode::kDense);
  REQUIRE(back.NumFrames() == 10);
  for (size_t t = 0; t < 10; ++t) {
    CHECK(BitsEqual(back.DenseFrame(t), seq.DenseFrame(t)));
  }
}

TEST_CASE("sparse posterior files renormalize retained mass") {
  TempDir dir;
  SUBCASE("one-hot survives top-1 exactly") {
    PosteriorSequence seq = MakePosteriors(4, {{0, 0, 1, 0}});
    auto path = dir / "onehot.usmp";
    WritePosteriorsSparse(path, seq, 1);
    PosteriorSequence back = ReadPosteriors(path);
    std::vector<float> row = back.DenseFrame(0);
    CHECK(row[2] == 1.0f);
    CHECK(row[0] == 0.0f);
    CHECK(back.mode() == PosteriorMode::kSparseTopK);
  }
  SUBCASE("truncate-and-renormalize oracle") {
    PosteriorSequence seq = MakePosteriors(3, {{0.5f, 0.3f, 0.2f}});
    auto path = dir / "top2.usmp";
    WritePosteriorsSparse(path, seq, 2);
    PosteriorSequence back = ReadPosteriors(path);
    std::vector<float> row = back.DenseFrame(0);

    // Oracle: drop the smallest entry, renormalize the rest in double.
    std::vector<float> kept = seq.DenseFrame(0);
    double mass = double(kept[0]) + double(kept[1]);
    CHECK(row[0] == static_cast<float>(kept[0] / mass));
    CHECK(row[1] == static_cast<float>(kept[1] / mass));
    CHECK(row[2] == 0.0f);
    CHECK(row[0] == doctest::Approx(0.625).epsilon(1e-6));
    CHECK(row[1] == doctest::Approx(0.375).epsilon(1e-6));
  }
  SUBCASE("retained pairs round-trip bit-identically") {
    std::mt19937_64 rng(113);
    std::vector<std::vector<float>> rows;
    for (int t = 0; t < 8; ++t) rows.push_back(RandomPosteriorRow(rng, 6));
    PosteriorSequence seq = MakePosteriors(6, rows);
    auto first = dir / "sparse1.usmp";
    WritePosteriorsSparse(first, seq, 3);
    PosteriorSequence once = ReadPosteriors(first);
    // A second pass keeps the already-renormalized pairs verbatim.
    auto second = dir / "sparse2.usmp";
    WritePosteriorsSparse(second, once, 3);
    PosteriorSequence twice = ReadPosteriors(second);
    for (size_t t = 0; t < once.NumFrames(); ++t) {
      CHECK(BitsEqual(once.DenseFrame(t), twice.DenseFrame(t)));
    }
  }
  SUBCASE("top-k bounds") {
    PosteriorSequence seq = MakePosteriors(3, {{1, 0, 0}});
    CHECK_THROWS_AS(WritePosteriorsSparse(dir / "z.usmp", seq, 0), UsmError);
    CHECK_THROWS_AS(WritePosteriorsSparse(dir / "z.usmp", seq, 70000),
                    UsmError);
  }
}

TEST_CASE("sparse frames with nnz above K are rejected") {
  TempDir dir;
  PosteriorSequence seq = MakePosteriors(2, {{1.0f, 0.0f}});
  auto path = dir / "post.usmp";
  WritePosteriorsSparse(path, seq, 1);
  std::string bytes = ReadFileBytes(path);
  // Header: magic(4) version(4) K(4) T(8) mode(1) -> nnz u16 at offset 21.
  bytes[21] = 3;
  bytes[22] = 0;
  WriteFileBytes(path, bytes);
  try {
    ReadPosteriors(path);
    FAIL("expected format error");
  } catch (const UsmError& e) {
    CHECK(e.code() == ErrorCode::kFormat);
    CHECK(std::string(e.what()).find("nnz") != std::string::npos);
  }
}

TEST_CASE("accumulator files round-trip losslessly") {
  TempDir dir;
  std::mt19937_64 rng(127);
  Corpus corpus = RandomCorpus(rng, 4, 20, 3, 2);
  StatsAccumulator acc(3, 2);
  for (const auto& [f, p] : corpus) acc.Add(f, p);

  auto path = dir / "acc.usma";
  WriteAccumulator(path, acc);
  StatsAccumulator back = ReadAccumulator(path);
  CHECK(back.frames_seen() == acc.frames_seen());
  CHECK(std::equal(acc.counts().begin(), acc.counts().end(),
                   back.counts().begin()));
  CHECK(std::equal(acc.sums().begin(), acc.sums().end(), back.sums().begin()));

  SUBCASE("round-trip commutes with merge") {
    StatsAccumulator other(3, 2);
    other.Add(corpus[0].first, corpus[0].second);
    auto other_path = dir / "other.usma";
    WriteAccumulator(other_path, other);

    // merge(read(a), read(b)) vs read(write(merge(a, b)))
    StatsAccumulator merged_after = ReadAccumulator(path);
    merged_after.Merge(ReadAccumulator(other_path));

    StatsAccumulator merged_before(3, 2);
    merged_before.Merge(acc);
    merged_before.Merge(other);
    auto merged_path = dir / "merged.usma";
    WriteAccumulator(merged_path, merged_before);
    StatsAccumulator merged_rt = ReadAccumulator(merged_path);

    CHECK(std::equal(merged_after.counts().begin(),
                     merged_after.counts().end(),
                     merged_rt.counts().begin()));
    CHECK(std::equal(merged_after.sums().begin(), merged_after.sums().end(),
                     merged_rt.sums().begin()));
    CHECK(merged_after.frames_seen() == merged_rt.frames_seen());
  }
}

TEST_CASE("dictionary files round-trip at stored precision") {
  TempDir dir;
  SemanticDictionary dict;
  dict.num_classes = 3;
  dict.dim = 2;
  dict.entries = {0.1, 0.2, 0.0, 0.0, 1.0 / 3.0, -7.25};
  dict.counts = {2.5, 0.0, 1.25};
  dict.speaker_tag = "спикер-7";

  auto path = dir / "dict.usmd";
  WriteDictionary(path, dict);
  SemanticDictionary back = ReadDictionary(path);
  CHECK(back.num_classes == 3);
  CHECK(back.dim == 2);
  CHECK(back.speaker_tag == "спикер-7");
  CHECK(back.counts == dict.counts);
  for (size_t i = 0; i < dict.entries.size(); ++i) {
    CHECK(back.entries[i] == double(static_cast<float>(dict.entries[i])));
  }
  CHECK(back.IsEmptyEntry(1));
  CHECK_FALSE(back.IsEmptyEntry(0));

  SUBCASE("empty tag denotes the universal dictionary") {
    dict.speaker_tag.clear();
    auto upath = dir / "universal.usmd";
    WriteDictionary(upath, dict);
    CHECK(ReadDictionary(upath).speaker_tag.empty());
  }
  SUBCASE("double write is byte-stable") {
    auto p2 = dir / "dict2.usmd";
    WriteDictionary(p2, back);
    SemanticDictionary again = ReadDictionary(p2);
    CHECK(again.entries == back.entries);
  }
}

TEST_CASE("codebook files round-trip at stored precision") {
  TempDir dir;
  Codebook cb;
  cb.num_units = 2;
  cb.dim = 3;
  cb.centroids = {0.5, 10.5, -1.0, 0.125, 2.0, 3.5};
  cb.training_inertia = 1.0;
  auto path = dir / "cb.usmc";
  WriteCodebook(path, cb);
  Codebook back = ReadCodebook(path);
  CHECK(back.num_units == 2);
  CHECK(back.dim == 3);
  CHECK(back.training_inertia == 1.0);
  CHECK(back.centroids == cb.centroids);  // all values exact in float
}

TEST_CASE("the 256-dim feature shape interoperates with a 600-class dictionary") {
  TempDir dir;
  std::mt19937_64 rng(131);
  auto [features, posteriors] = RandomUtterance(rng, 600, 256, 3, "ppg-utt");
  auto fpath = dir / "f.usmf";
  auto ppath = dir / "p.usmp";
  WriteFeatures(fpath, features);
  WritePosteriorsSparse(ppath, posteriors, 8);

  StatsAccumulator acc(600, 256);
  acc.Add(ReadFeatures(fpath), ReadPosteriors(ppath));
  SemanticDictionary dict = Finalize(acc);
  auto dpath = dir / "d.usmd";
  WriteDictionary(dpath, dict);

  FeatureSequence out = TransformSequence(
      ReadDictionary(dpath), ReadFeatures(fpath), ReadPosteriors(ppath),
      MixWeights{0.8, 0.2, std::nullopt});
  CHECK(out.dim == 256);
  CHECK(out.NumFrames() == 3);
}

TEST_CASE("manifest parsing") {
  TempDir dir;
  auto path = dir / "corpus.tsv";
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "a.usmf a.usmp spk1\n";
    out << "b.usmf b.usmp\n";
    out << "c.usmf - spk2\n";
    out << "\n";
  }
  std::vector<ManifestEntry> entries = ReadManifest(path);
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].feature_path == "a.usmf");
  CHECK(entries[0].posterior_path == "a.usmp");
  CHECK(entries[0].speaker_id == "spk1");
  CHECK(entries[1].speaker_id.empty());
  CHECK(entries[2].posterior_path.empty());
  CHECK(entries[2].speaker_id == "spk2");

  SUBCASE("too many fields") {
    std::ofstream out(path);
    out << "a b c d\n";
    out.close();
    CHECK_THROWS_AS(ReadManifest(path), UsmError);
  }
  SUBCASE("missing manifest") {
    CHECK_THROWS_AS(ReadManifest(dir / "nope.tsv"), UsmError);
  }
}

TEST_CASE("readers bound allocations by the actual file size") {
  TempDir dir;
  auto path = dir / "seq.usmf";
  WriteFeatures(path, MakeFeatures(2, {{1.0f, 2.0f}}, "u"));
  std::string bytes = ReadFileBytes(path);
  // Declare 2^56 frames in the T field (offset 12..19) without growing the
  // payload; the reader must fail the size check, not try to allocate.
  std::string mutated = bytes;
  mutated[19] = 0x01;
  WriteFileBytes(path, mutated);
  try {
    ReadFeatures(path);
    FAIL("expected format error");
  } catch (const UsmError& e) {
    CHECK(e.code() == ErrorCode::kFormat);
  }
}
