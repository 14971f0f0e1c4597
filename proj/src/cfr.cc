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

#include "usm/cfr.h"

#include <atomic>
#include <cmath>
#include <sstream>

#include "usm/parallel.h"

namespace usm {

namespace {

// Shared core: out = sum_k (v_k / s) * entry_k over the stored pairs.
// Returns the normalized posterior mass landing on non-empty entries.
double ReexpressInto(const SemanticDictionary& dict,
                     std::span<const PosteriorEntry> posterior,
                     const std::string& where, std::span<double> out) {
  double sum = 0.0;
  for (const PosteriorEntry& e : posterior) {
    if (e.index >= dict.num_classes) {
      throw UsmError(ErrorCode::kShape,
                     "posterior index " + std::to_string(e.index) +
                         " out of range for dictionary of size " +
                         std::to_string(dict.num_classes) + " at " + where);
    }
    if (!(e.value >= 0.0f) || !std::isfinite(e.value)) {
      throw UsmError(ErrorCode::kData,
                     "negative or non-finite posterior value at " + where);
    }
    sum += e.value;
  }
  if (std::abs(sum - 1.0) > kPosteriorSumTolerance) {
    std::ostringstream os;
    os << "posterior at " << where << " sums to " << sum
       << ", outside tolerance " << kPosteriorSumTolerance;
    throw UsmError(ErrorCode::kData, os.str());
  }
  for (double& v : out) v = 0.0;
  double nonempty_mass = 0.0;
  for (const PosteriorEntry& e : posterior) {
    if (e.value == 0.0f) continue;
    double weight = e.value / sum;
    if (!dict.IsEmptyEntry(e.index)) nonempty_mass += weight;
    const double* entry = dict.entries.data() + size_t(e.index) * dict.dim;
    for (uint32_t j = 0; j < dict.dim; ++j) out[j] += weight * entry[j];
  }
  return nonempty_mass;
}

std::vector<double> ToDouble(std::span<const float> v) {
  return std::vector<double>(v.begin(), v.end());
}

}  // namespace

std::vector<double> Reexpress(const SemanticDictionary& dict,
                              std::span<const PosteriorEntry> posterior) {
  std::vector<double> out(dict.dim);
  ReexpressInto(dict, posterior, "frame 0", out);
  return out;
}

std::vector<double> Reexpress(const SemanticDictionary& dict,
                              std::span<const float> posterior) {
  if (posterior.size() != dict.num_classes) {
    std::ostringstream os;
    os << "posterior has " << posterior.size() << " classes, dictionary has "
       << dict.num_classes;
    throw UsmError(ErrorCode::kShape, os.str());
  }
  std::vector<PosteriorEntry> pairs;
  pairs.reserve(posterior.size());
  for (uint32_t k = 0; k < posterior.size(); ++k) {
    if (posterior[k] != 0.0f) pairs.push_back({k, posterior[k]});
  }
  return Reexpress(dict, std::span<const PosteriorEntry>(pairs));
}

FeatureSequence ReexpressSequence(const SemanticDictionary& dict,
                                  const PosteriorSequence& posteriors,
                                  ReexpressStats* stats) {
  if (posteriors.num_classes() != dict.num_classes) {
    std::ostringstream os;
    os << "posterior sequence has K=" << posteriors.num_classes()
       << ", dictionary has K=" << dict.num_classes;
    throw UsmError(ErrorCode::kShape, os.str());
  }
  size_t num_frames = posteriors.NumFrames();
  FeatureSequence out;
  out.dim = dict.dim;
  out.data.resize(num_frames * size_t(dict.dim));
  size_t low_mass = 0;
  std::vector<double> row(dict.dim);
  for (size_t t = 0; t < num_frames; ++t) {
    double mass = ReexpressInto(dict, posteriors.Frame(t),
                                "frame " + std::to_string(t), row);
    if (mass < kLowMassThreshold) ++low_mass;
    float* dst = out.data.data() + t * dict.dim;
    for (uint32_t j = 0; j < dict.dim; ++j) dst[j] = static_cast<float>(row[j]);
  }
  if (stats != nullptr) stats->low_mass_frames = low_mass;
  return out;
}

std::vector<double> UsmMix(std::span<const double> reexpressed,
                           std::span<const double> original,
                           const MixWeights& weights) {
  if (weights.HasSpeakerTerm()) {
    throw UsmError(ErrorCode::kInvalidWeights,
                   "two-term mix given three weights");
  }
  weights.Validate();
  if (reexpressed.size() != original.size()) {
    throw UsmError(ErrorCode::kShape, "mix inputs differ in dimension");
  }
  // Endpoints return their input verbatim.
  if (weights.w1 == 1.0 && weights.w2 == 0.0) {
    return std::vector<double>(reexpressed.begin(), reexpressed.end());
  }
  if (weights.w1 == 0.0 && weights.w2 == 1.0) {
    return std::vector<double>(original.begin(), original.end());
  }
  std::vector<double> out(original.size());
  for (size_t j = 0; j < out.size(); ++j) {
    out[j] = weights.w1 * reexpressed[j] + weights.w2 * original[j];
  }
  return out;
}

std::vector<double> UsmStarMix(std::span<const double> universal,
                               std::span<const double> original,
                               std::span<const double> speaker,
                               const MixWeights& weights) {
  if (!weights.HasSpeakerTerm()) {
    throw UsmError(ErrorCode::kInvalidWeights,
                   "three-term mix needs weight w3");
  }
  weights.Validate();
  if (universal.size() != original.size() || speaker.size() != original.size()) {
    throw UsmError(ErrorCode::kShape, "mix inputs differ in dimension");
  }
  if (*weights.w3 == 0.0) {
    MixWeights two{weights.w1, weights.w2, std::nullopt};
    return UsmMix(universal, original, two);
  }
  std::vector<double> out(original.size());
  for (size_t j = 0; j < out.size(); ++j) {
    out[j] = weights.w1 * universal[j] + weights.w2 * original[j] +
             *weights.w3 * speaker[j];
  }
  return out;
}

FeatureSequence TransformSequence(const SemanticDictionary& dict,
                                  const FeatureSequence& features,
                                  const PosteriorSequence& posteriors,
                                  const MixWeights& weights,
                                  const SemanticDictionary* speaker_dict,
                                  ReexpressStats* stats, int threads) {
  weights.Validate();
  if (weights.HasSpeakerTerm() && speaker_dict == nullptr) {
    throw UsmError(ErrorCode::kInvalidWeights,
                   "weight w3 set but no speaker dictionary given");
  }
  if (features.dim != dict.dim) {
    std::ostringstream os;
    os << "utterance '" << features.utterance_id << "' has dim "
       << features.dim << ", dictionary has dim " << dict.dim;
    throw UsmError(ErrorCode::kShape, os.str());
  }
  if (posteriors.num_classes() != dict.num_classes) {
    throw UsmError(ErrorCode::kShape, "posterior classes do not match dictionary");
  }
  if (speaker_dict != nullptr &&
      (speaker_dict->dim != dict.dim ||
       speaker_dict->num_classes != dict.num_classes)) {
    throw UsmError(ErrorCode::kShape,
                   "speaker dictionary shape does not match universal");
  }
  if (features.NumFrames() != posteriors.NumFrames()) {
    std::ostringstream os;
    os << "utterance '" << features.utterance_id << "': "
       << features.NumFrames() << " feature frames vs "
       << posteriors.NumFrames() << " posterior frames";
    throw UsmError(ErrorCode::kShape, os.str());
  }

  size_t num_frames = features.NumFrames();
  FeatureSequence out;
  out.dim = dict.dim;
  out.data.resize(num_frames * size_t(dict.dim));
  out.utterance_id = features.utterance_id;
  out.speaker_id = features.speaker_id;
  bool use_speaker = weights.HasSpeakerTerm();
  std::atomic<size_t> low_mass{0};

  ParallelFor(num_frames, threads, [&](int /*worker*/, size_t begin, size_t end) {
    std::vector<double> reexpressed(dict.dim);
    std::vector<double> speaker_row(use_speaker ? dict.dim : 0);
    size_t local_low = 0;
    for (size_t t = begin; t < end; ++t) {
      std::span<const float> x = features.Frame(t);
      for (float v : x) {
        if (!std::isfinite(v)) {
          std::ostringstream os;
          os << "non-finite feature value in utterance '"
             << features.utterance_id << "' at frame " << t;
          throw UsmError(ErrorCode::kData, os.str());
        }
      }
      std::string where = "frame " + std::to_string(t);
      double mass = ReexpressInto(dict, posteriors.Frame(t), where, reexpressed);
      if (mass < kLowMassThreshold) ++local_low;
      std::vector<double> mixed;
      if (use_speaker) {
        ReexpressInto(*speaker_dict, posteriors.Frame(t), where, speaker_row);
        mixed = UsmStarMix(reexpressed, ToDouble(x), speaker_row, weights);
      } else {
        mixed = UsmMix(reexpressed, ToDouble(x), weights);
      }
      float* dst = out.data.data() + t * dict.dim;
      for (uint32_t j = 0; j < dict.dim; ++j) {
        dst[j] = static_cast<float>(mixed[j]);
      }
    }
    low_mass.fetch_add(local_low, std::memory_order_relaxed);
  });

  if (stats != nullptr) stats->low_mass_frames = low_mass.load();
  return out;
}

MixWeights LoadPreset(std::string_view name) {
  if (name == "vits-usm") return MixWeights{0.8, 0.2, std::nullopt};
  if (name == "vits-usm-star") return MixWeights{0.2, 0.6, 0.2};
  if (name == "lm-usm") return MixWeights{0.95, 0.05, std::nullopt};
  if (name == "diffusion-usm") return MixWeights{0.95, 0.05, std::nullopt};
  throw UsmError(ErrorCode::kUnknownPreset,
                 "unknown weight preset '" + std::string(name) + "'");
}

}  // namespace usm
