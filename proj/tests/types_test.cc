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

#include <cmath>
#include <limits>

#include "test_util.h"
#include "usm/types.h"

using namespace usm;
using namespace usm::test;

TEST_CASE("feature sequence validation") {
  FeatureSequence seq = MakeFeatures(2, {{1.0f, 2.0f}, {3.0f, 4.0f}}, "u1");
  CHECK(seq.NumFrames() == 2);
  CHECK_NOTHROW(seq.Validate());

  SUBCASE("dim zero") {
    seq.dim = 0;
    CHECK_THROWS_AS(seq.Validate(), UsmError);
  }
  SUBCASE("ragged payload") {
    seq.data.push_back(1.0f);
    try {
      seq.Validate();
      FAIL("expected shape error");
    } catch (const UsmError& e) {
      CHECK(e.code() == ErrorCode::kShape);
    }
  }
  SUBCASE("non-finite value names utterance and frame") {
    seq.data[2] = std::numeric_limits<float>::quiet_NaN();
    try {
      seq.Validate();
      FAIL("expected data error");
    } catch (const UsmError& e) {
      CHECK(e.code() == ErrorCode::kData);
      CHECK(std::string(e.what()).find("u1") != std::string::npos);
      CHECK(std::string(e.what()).find("frame 1") != std::string::npos);
    }
  }
  SUBCASE("empty sequence is valid") {
    seq.data.clear();
    CHECK_NOTHROW(seq.Validate());
    CHECK(seq.NumFrames() == 0);
  }
}

TEST_CASE("dense posteriors renormalize within the tolerance band") {
  // Sum is 1 + 5e-6: inside the band, so the row must come out normalized.
  PosteriorSequence seq =
      MakePosteriors(2, {{0.500005f, 0.5f}});
  double sum = 0.0;
  for (const PosteriorEntry& e : seq.Frame(0)) sum += e.value;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("dense posteriors keep already-normalized rows bit-identical") {
  PosteriorSequence seq = MakePosteriors(2, {{0.25f, 0.75f}});
  std::vector<float> row = seq.DenseFrame(0);
  CHECK(row[0] == 0.25f);
  CHECK(row[1] == 0.75f);
}

TEST_CASE("dense posteriors reject rows outside the band") {
  std::vector<float> bad = {0.5f, 0.4f};
  try {
    PosteriorSequence::FromDense(2, bad);
    FAIL("expected data error");
  } catch (const UsmError& e) {
    CHECK(e.code() == ErrorCode::kData);
  }
}

TEST_CASE("dense posteriors reject negative values") {
  std::vector<float> bad = {1.2f, -0.2f};
  CHECK_THROWS_AS(PosteriorSequence::FromDense(2, bad), UsmError);
}

TEST_CASE("sparse posteriors renormalize retained mass") {
  PosteriorSequence seq = PosteriorSequence::FromSparse(
      3, {{{0, 0.5f}, {1, 0.3f}}});
  std::vector<float> row = seq.DenseFrame(0);
  CHECK(row[0] == doctest::Approx(0.625).epsilon(1e-6));
  CHECK(row[1] == doctest::Approx(0.375).epsilon(1e-6));
  CHECK(row[2] == 0.0f);
  CHECK(seq.mode() == PosteriorMode::kSparseTopK);
}

TEST_CASE("sparse one-hot survives exactly") {
  PosteriorSequence seq = PosteriorSequence::FromSparse(4, {{{2, 1.0f}}});
  std::vector<float> row = seq.DenseFrame(0);
  CHECK(row[2] == 1.0f);
}

TEST_CASE("sparse posteriors reject bad entries") {
  SUBCASE("index out of range") {
    try {
      PosteriorSequence::FromSparse(2, {{{2, 1.0f}}});
      FAIL("expected shape error");
    } catch (const UsmError& e) {
      CHECK(e.code() == ErrorCode::kShape);
    }
  }
  SUBCASE("duplicate index") {
    CHECK_THROWS_AS(
        PosteriorSequence::FromSparse(2, {{{0, 0.5f}, {0, 0.5f}}}), UsmError);
  }
  SUBCASE("zero mass") {
    CHECK_THROWS_AS(PosteriorSequence::FromSparse(2, {{{0, 0.0f}}}), UsmError);
  }
  SUBCASE("zero classes") {
    CHECK_THROWS_AS(PosteriorSequence::FromSparse(0, {}), UsmError);
  }
}

TEST_CASE("mix weight validation") {
  CHECK_NOTHROW((MixWeights{0.8, 0.2, std::nullopt}).Validate());
  CHECK_NOTHROW((MixWeights{0.2, 0.6, 0.2}).Validate());
  CHECK_NOTHROW((MixWeights{0.5 + 1e-10, 0.5, std::nullopt}).Validate());

  auto expect_invalid = [](MixWeights w) {
    try {
      w.Validate();
      FAIL_CHECK("expected invalid-weights error");
    } catch (const UsmError& e) {
      CHECK(e.code() == ErrorCode::kInvalidWeights);
    }
  };
  expect_invalid({0.5, 0.4, std::nullopt});
  expect_invalid({1.2, -0.2, std::nullopt});
  expect_invalid({0.2, 0.6, 0.3});
  expect_invalid({-0.1, 1.1, std::nullopt});
}

TEST_CASE("accumulator starts zeroed and rejects zero shapes") {
  StatsAccumulator acc(2, 3);
  CHECK(acc.frames_seen() == 0);
  for (double c : acc.counts()) CHECK(c == 0.0);
  for (double s : acc.sums()) CHECK(s == 0.0);

  // The large configuration used with 256-dim bottleneck features.
  StatsAccumulator big(600, 256);
  CHECK(big.counts().size() == 600);
  CHECK(big.sums().size() == 600 * 256);

  try {
    StatsAccumulator bad(0, 4);
    FAIL("expected invalid-dimension error");
  } catch (const UsmError& e) {
    CHECK(e.code() == ErrorCode::kInvalidDimension);
    CHECK(e.exit_code() == 2);
  }
  CHECK_THROWS_AS(StatsAccumulator(4, 0), UsmError);
}

TEST_CASE("length-mismatched pairing is rejected before accumulation") {
  StatsAccumulator acc(2, 2);
  FeatureSequence features = MakeFeatures(2, {{1.0f, 2.0f}});
  PosteriorSequence posteriors =
      MakePosteriors(2, {{1.0f, 0.0f}, {0.0f, 1.0f}});
  try {
    acc.Add(features, posteriors);
    FAIL("expected shape error");
  } catch (const UsmError& e) {
    CHECK(e.code() == ErrorCode::kShape);
  }
  CHECK(acc.frames_seen() == 0);
  for (double c : acc.counts()) CHECK(c == 0.0);
}

TEST_CASE("exit code mapping is total") {
  CHECK(ExitCodeFor(ErrorCode::kShape) == 2);
  CHECK(ExitCodeFor(ErrorCode::kFormat) == 2);
  CHECK(ExitCodeFor(ErrorCode::kData) == 2);
  CHECK(ExitCodeFor(ErrorCode::kInvalidDimension) == 2);
  CHECK(ExitCodeFor(ErrorCode::kInvalidParameter) == 2);
  CHECK(ExitCodeFor(ErrorCode::kEmptyCorpus) == 3);
  CHECK(ExitCodeFor(ErrorCode::kInvalidWeights) == 4);
  CHECK(ExitCodeFor(ErrorCode::kUnknownPreset) == 4);
  CHECK(ExitCodeFor(ErrorCode::kInsufficientData) == 5);
  CHECK(ExitCodeFor(ErrorCode::kUndefinedCorrelation) == 5);
  CHECK(ExitCodeFor(ErrorCode::kInvalidEmbedding) == 5);
}
