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

#ifndef USM_KMEANS_H_
#define USM_KMEANS_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "usm/types.h"

namespace usm {

// Codebook size used for speech-unit dictionaries unless overridden.
inline constexpr uint32_t kDefaultCodebookSize = 4096;

struct KMeansOptions {
  uint32_t num_units = kDefaultCodebookSize;
  int max_iters = 100;
  double tol = 1e-6;   // stop when relative inertia improvement falls below
  uint64_t seed = 0;
  int threads = 1;
};

// Lloyd's algorithm over all frames of `features`, seeded with k-means++
// from `options.seed`. Clusters that run empty are reseeded to the frame
// farthest from its centroid. Identical inputs, seed, and threads = 1
// reproduce the codebook bit-for-bit. `inertia_history` (optional) receives
// the total squared distance measured at every assignment pass; the series
// is non-increasing. Throws kInsufficientData when there are fewer frames
// than clusters.
Codebook KMeansTrain(const std::vector<FeatureSequence>& features,
                     const KMeansOptions& options,
                     std::vector<double>* inertia_history = nullptr);

// Nearest centroid by Euclidean distance, ties broken toward the smaller
// index. Returns (unit, distance).
std::pair<uint32_t, double> Assign(const Codebook& codebook,
                                   std::span<const float> frame);

// Distance-derived posterior: p[k] proportional to exp(-d2_k / temperature).
// Squared distances are shifted by their minimum before exponentiation, so
// the result is invariant to a common offset and never over/underflows on
// the winning unit.
std::vector<double> SoftPosteriors(const Codebook& codebook,
                                   std::span<const float> frame,
                                   double temperature);
std::vector<double> SoftPosteriorsFromSqDists(std::span<const double> sq_dists,
                                              double temperature);

// Total squared distance of every frame to its assigned centroid.
double Inertia(const Codebook& codebook,
               const std::vector<FeatureSequence>& features);

// Mean squared nearest-centroid distance over the given sample; the default
// temperature for SoftPosteriors when none is configured. Returns 1.0 when
// every frame coincides with a centroid.
double CalibrateTemperature(const Codebook& codebook,
                            const std::vector<FeatureSequence>& features);

}  // namespace usm

#endif  // USM_KMEANS_H_
