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

#include "usm/types.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace usm {

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShape:
    case ErrorCode::kFormat:
    case ErrorCode::kData:
    case ErrorCode::kInvalidDimension:
    case ErrorCode::kInvalidParameter:
      return 2;
    case ErrorCode::kEmptyCorpus:
      return 3;
    case ErrorCode::kInvalidWeights:
    case ErrorCode::kUnknownPreset:
      return 4;
    case ErrorCode::kInsufficientData:
    case ErrorCode::kUndefinedCorrelation:
    case ErrorCode::kInvalidEmbedding:
      return 5;
  }
  return 2;
}

void FeatureSequence::Validate() const {
  if (dim == 0) {
    throw UsmError(ErrorCode::kInvalidDimension,
                   "feature sequence '" + utterance_id + "' has dim 0");
  }
  if (data.size() % dim != 0) {
    std::ostringstream os;
    os << "feature sequence '" << utterance_id << "': payload size "
       << data.size() << " is not a multiple of dim " << dim;
    throw UsmError(ErrorCode::kShape, os.str());
  }
  for (size_t t = 0; t < NumFrames(); ++t) {
    for (float v : Frame(t)) {
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite feature value in utterance '" << utterance_id
           << "' at frame " << t;
        throw UsmError(ErrorCode::kData, os.str());
      }
    }
  }
}

double NormalizePosteriorRow(std::span<float> row, const std::string& where) {
  double sum = 0.0;
  for (float v : row) {
    if (!(v >= 0.0f) || !std::isfinite(v)) {
      throw UsmError(ErrorCode::kData,
                     "negative or non-finite posterior value at " + where);
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kPosteriorSumTolerance) {
    std::ostringstream os;
    os << "posterior frame at " << where << " sums to " << sum
       << ", outside tolerance " << kPosteriorSumTolerance;
    throw UsmError(ErrorCode::kData, os.str());
  }
  if (std::abs(sum - 1.0) > kPosteriorSkipRenormTolerance) {
    for (float& v : row) v = static_cast<float>(v / sum);
  }
  return sum;
}

PosteriorSequence PosteriorSequence::FromDense(uint32_t num_classes,
                                               std::span<const float> rows) {
  if (num_classes == 0) {
    throw UsmError(ErrorCode::kInvalidDimension,
                   "posterior sequence with 0 classes");
  }
  if (rows.size() % num_classes != 0) {
    throw UsmError(ErrorCode::kShape,
                   "dense posterior payload is not a multiple of K");
  }
  size_t num_frames = rows.size() / num_classes;
  PosteriorSequence seq;
  seq.num_classes_ = num_classes;
  seq.mode_ = PosteriorMode::kDense;
  seq.offsets_.reserve(num_frames + 1);
  seq.offsets_.push_back(0);
  std::vector<float> row(num_classes);
  for (size_t t = 0; t < num_frames; ++t) {
    std::copy(rows.begin() + t * num_classes,
              rows.begin() + (t + 1) * num_classes, row.begin());
    NormalizePosteriorRow(row, "frame " + std::to_string(t));
    for (uint32_t k = 0; k < num_classes; ++k) {
      if (row[k] != 0.0f) seq.entries_.push_back({k, row[k]});
    }
    seq.offsets_.push_back(seq.entries_.size());
  }
  return seq;
}

PosteriorSequence PosteriorSequence::FromSparse(
    uint32_t num_classes,
    const std::vector<std::vector<PosteriorEntry>>& frames) {
  if (num_classes == 0) {
    throw UsmError(ErrorCode::kInvalidDimension,
                   "posterior sequence with 0 classes");
  }
  PosteriorSequence seq;
  seq.num_classes_ = num_classes;
  seq.mode_ = PosteriorMode::kSparseTopK;
  seq.offsets_.reserve(frames.size() + 1);
  seq.offsets_.push_back(0);
  for (size_t t = 0; t < frames.size(); ++t) {
    std::vector<PosteriorEntry> frame = frames[t];
    std::sort(frame.begin(), frame.end(),
              [](const PosteriorEntry& a, const PosteriorEntry& b) {
                return a.index < b.index;
              });
    double sum = 0.0;
    uint32_t prev = 0;
    bool first = true;
    for (const PosteriorEntry& e : frame) {
      if (e.index >= num_classes) {
        throw UsmError(ErrorCode::kShape,
                       "posterior index " + std::to_string(e.index) +
                           " out of range at frame " + std::to_string(t));
      }
      if (!first && e.index == prev) {
        throw UsmError(ErrorCode::kData, "duplicate posterior index " +
                                             std::to_string(e.index) +
                                             " at frame " + std::to_string(t));
      }
      if (!(e.value >= 0.0f) || !std::isfinite(e.value)) {
        throw UsmError(ErrorCode::kData,
                       "negative or non-finite posterior value at frame " +
                           std::to_string(t));
      }
      prev = e.index;
      first = false;
      sum += e.value;
    }
    if (sum <= 0.0) {
      throw UsmError(ErrorCode::kData, "posterior frame " + std::to_string(t) +
                                           " has zero retained mass");
    }
    // Retained mass becomes the new unit mass; frames already summing to 1
    // within float truncation are kept bit-identical.
    bool renorm = std::abs(sum - 1.0) > kPosteriorSkipRenormTolerance;
    for (const PosteriorEntry& e : frame) {
      float v = renorm ? static_cast<float>(e.value / sum) : e.value;
      if (v != 0.0f) seq.entries_.push_back({e.index, v});
    }
    seq.offsets_.push_back(seq.entries_.size());
  }
  return seq;
}

std::vector<float> PosteriorSequence::DenseFrame(size_t t) const {
  std::vector<float> row(num_classes_, 0.0f);
  for (const PosteriorEntry& e : Frame(t)) row[e.index] = e.value;
  return row;
}

void MixWeights::Validate() const {
  auto in_unit = [](double w) { return w >= 0.0 && w <= 1.0; };
  if (!in_unit(w1) || !in_unit(w2) || (w3 && !in_unit(*w3))) {
    throw UsmError(ErrorCode::kInvalidWeights,
                   "mix weights must lie in [0, 1]");
  }
  double sum = w1 + w2 + (w3 ? *w3 : 0.0);
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    std::ostringstream os;
    os << "mix weights sum to " << sum << ", expected 1";
    throw UsmError(ErrorCode::kInvalidWeights, os.str());
  }
}

}  // namespace usm
