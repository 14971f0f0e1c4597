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

#ifndef USM_CFR_H_
#define USM_CFR_H_

#include <span>
#include <string_view>
#include <vector>

#include "usm/types.h"

namespace usm {

// Fraction of a frame's posterior mass that may fall on never-observed
// dictionary entries before the frame is counted as suspicious.
inline constexpr double kLowMassThreshold = 0.5;

struct ReexpressStats {
  size_t low_mass_frames = 0;
};

// Re-expresses one frame as the convex combination of dictionary entries
// weighted by its posterior: returns M * p. The input is renormalized first;
// a sum outside the tolerance band rejects the frame with kData. The output
// depends on the original frame only through p, never through its values.
std::vector<double> Reexpress(const SemanticDictionary& dict,
                              std::span<const float> posterior);
std::vector<double> Reexpress(const SemanticDictionary& dict,
                              std::span<const PosteriorEntry> posterior);

// Framewise re-expression of a whole sequence into a single-precision
// feature sequence of the dictionary's dimension. When `stats` is given it
// receives the number of frames whose posterior mass sits mostly on empty
// dictionary entries, one count per call.
FeatureSequence ReexpressSequence(const SemanticDictionary& dict,
                                  const PosteriorSequence& posteriors,
                                  ReexpressStats* stats = nullptr);

// Two-term residual mix: w1 * reexpressed + w2 * original, w1 + w2 = 1.
// The (1,0) and (0,1) endpoints return their input verbatim.
std::vector<double> UsmMix(std::span<const double> reexpressed,
                           std::span<const double> original,
                           const MixWeights& weights);

// Three-term mix adding a speaker-dependent re-expressed term with weight
// w3: w1 * universal + w2 * original + w3 * speaker. w3 = 0 reduces exactly
// to the two-term mix.
std::vector<double> UsmStarMix(std::span<const double> universal,
                               std::span<const double> original,
                               std::span<const double> speaker,
                               const MixWeights& weights);

// Full per-sequence pipeline: re-express each frame against `dict`
// (and `speaker_dict` when weights carry w3) and mix with the original
// frame. Output ids are copied from `features`. Frames are independent, so
// `threads` > 1 shards them without changing any output bit.
FeatureSequence TransformSequence(const SemanticDictionary& dict,
                                  const FeatureSequence& features,
                                  const PosteriorSequence& posteriors,
                                  const MixWeights& weights,
                                  const SemanticDictionary* speaker_dict = nullptr,
                                  ReexpressStats* stats = nullptr,
                                  int threads = 1);

// Named weight presets: vits-usm (0.8, 0.2), vits-usm-star (0.2, 0.6, 0.2),
// lm-usm (0.95, 0.05), diffusion-usm (0.95, 0.05).
MixWeights LoadPreset(std::string_view name);

}  // namespace usm

#endif  // USM_CFR_H_
