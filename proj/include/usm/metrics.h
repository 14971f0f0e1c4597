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

#ifndef USM_METRICS_H_
#define USM_METRICS_H_

#include <filesystem>
#include <span>
#include <vector>

#include "usm/types.h"

namespace usm {

// Frame-level F0 contour in Hz. Unvoiced frames carry no pitch and are
// excluded from every statistic.
struct F0Contour {
  std::vector<double> values;
  std::vector<bool> voiced;

  size_t NumFrames() const { return values.size(); }
  size_t NumVoiced() const;
};

// Mean F0 over voiced frames only. Throws kInsufficientData when no frame
// is voiced.
double VoicedMeanF0(const F0Contour& contour);

// Target-register ground truth: every voiced value scaled by
// mean_tar / mean_src, voicing mask preserved. Means must be positive.
F0Contour F0GroundTruth(const F0Contour& src, double mean_tar_hz,
                        double mean_src_hz);

enum class F0Scale { kLinear, kLog };

// Pearson correlation over frames voiced in both contours, on linear Hz by
// default or on log Hz with F0Scale::kLog. Needs at least two jointly
// voiced frames (kInsufficientData) and nonzero variance in both contours
// (kUndefinedCorrelation).
double Fpc(const F0Contour& pred, const F0Contour& gt,
           F0Scale scale = F0Scale::kLinear);

// Mean absolute difference of log-scale F0 over jointly voiced frames.
double LogF0L1(const F0Contour& pred, const F0Contour& gt);

// Cosine similarity between two speaker embeddings of equal dimension.
// Either input being the zero vector raises kInvalidEmbedding.
double CosineSsim(std::span<const double> a, std::span<const double> b);
double CosineSsim(std::span<const float> a, std::span<const float> b);

// Reads a contour either from two-column text (frame_index, hz; hz = 0
// marks an unvoiced frame) or from a d=1 feature file, sniffed by magic.
F0Contour ReadF0Contour(const std::filesystem::path& path);

}  // namespace usm

#endif  // USM_METRICS_H_
