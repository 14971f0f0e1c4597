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

#include "usm/stats.h"

#include <cmath>
#include <sstream>

namespace usm {

StatsAccumulator::StatsAccumulator(uint32_t num_classes, uint32_t dim)
    : num_classes_(num_classes), dim_(dim) {
  if (num_classes == 0 || dim == 0) {
    std::ostringstream os;
    os << "accumulator needs positive shape, got K=" << num_classes
       << " d=" << dim;
    throw UsmError(ErrorCode::kInvalidDimension, os.str());
  }
  counts_.assign(num_classes, 0.0);
  sums_.assign(size_t(num_classes) * dim, 0.0);
}

void StatsAccumulator::Add(const FeatureSequence& features,
                           const PosteriorSequence& posteriors) {
  if (features.dim != dim_) {
    std::ostringstream os;
    os << "utterance '" << features.utterance_id << "' has dim "
       << features.dim << ", accumulator expects " << dim_;
    throw UsmError(ErrorCode::kShape, os.str());
  }
  if (posteriors.num_classes() != num_classes_) {
    std::ostringstream os;
    os << "utterance '" << features.utterance_id << "' has K="
       << posteriors.num_classes() << ", accumulator expects " << num_classes_;
    throw UsmError(ErrorCode::kShape, os.str());
  }
  if (features.NumFrames() != posteriors.NumFrames()) {
    std::ostringstream os;
    os << "utterance '" << features.utterance_id << "': " << features.NumFrames()
       << " feature frames vs " << posteriors.NumFrames()
       << " posterior frames";
    throw UsmError(ErrorCode::kShape, os.str());
  }
  size_t num_frames = features.NumFrames();
  for (size_t t = 0; t < num_frames; ++t) {
    std::span<const float> x = features.Frame(t);
    for (float v : x) {
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite feature value in utterance '"
           << features.utterance_id << "' at frame " << t;
        throw UsmError(ErrorCode::kData, os.str());
      }
    }
    for (const PosteriorEntry& e : posteriors.Frame(t)) {
      double gamma = e.value;
      counts_[e.index] += gamma;
      double* sum_row = sums_.data() + size_t(e.index) * dim_;
      for (uint32_t j = 0; j < dim_; ++j) sum_row[j] += gamma * x[j];
    }
  }
  frames_seen_ += num_frames;
}

void StatsAccumulator::Merge(const StatsAccumulator& other) {
  if (other.num_classes_ != num_classes_ || other.dim_ != dim_) {
    std::ostringstream os;
    os << "cannot merge accumulator of shape K=" << other.num_classes_
       << " d=" << other.dim_ << " into K=" << num_classes_ << " d=" << dim_;
    throw UsmError(ErrorCode::kShape, os.str());
  }
  for (uint32_t k = 0; k < num_classes_; ++k) counts_[k] += other.counts_[k];
  for (size_t i = 0; i < sums_.size(); ++i) sums_[i] += other.sums_[i];
  frames_seen_ += other.frames_seen_;
}

void StatsAccumulator::set_raw(std::vector<double> counts,
                               std::vector<double> sums, uint64_t frames_seen) {
  if (counts.size() != num_classes_ || sums.size() != size_t(num_classes_) * dim_) {
    throw UsmError(ErrorCode::kShape, "raw statistics do not match shape");
  }
  counts_ = std::move(counts);
  sums_ = std::move(sums);
  frames_seen_ = frames_seen;
}

SemanticDictionary Finalize(const StatsAccumulator& acc,
                            const std::string& speaker_tag) {
  SemanticDictionary dict;
  dict.num_classes = acc.num_classes();
  dict.dim = acc.dim();
  dict.speaker_tag = speaker_tag;
  dict.counts.assign(acc.counts().begin(), acc.counts().end());
  dict.entries.assign(size_t(dict.num_classes) * dict.dim, 0.0);
  for (uint32_t k = 0; k < dict.num_classes; ++k) {
    double count = dict.counts[k];
    if (count > 0.0) {
      std::span<const double> sum = acc.Sum(k);
      double* entry = dict.entries.data() + size_t(k) * dict.dim;
      for (uint32_t j = 0; j < dict.dim; ++j) entry[j] = sum[j] / count;
    }
  }
  return dict;
}

SemanticDictionary BuildDictionary(
    const std::vector<std::pair<FeatureSequence, PosteriorSequence>>& corpus,
    uint32_t num_classes, uint32_t dim,
    const std::optional<std::string>& speaker_filter) {
  StatsAccumulator acc(num_classes, dim);
  size_t used = 0;
  for (const auto& [features, posteriors] : corpus) {
    if (speaker_filter && features.speaker_id != *speaker_filter) continue;
    acc.Add(features, posteriors);
    ++used;
  }
  if (used == 0) {
    std::string msg = "no utterances to accumulate";
    if (speaker_filter) msg += " for speaker '" + *speaker_filter + "'";
    throw UsmError(ErrorCode::kEmptyCorpus, msg);
  }
  return Finalize(acc, speaker_filter ? *speaker_filter : "");
}

}  // namespace usm
