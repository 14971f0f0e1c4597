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
//
// Reference implementations kept deliberately naive and independent of the
// library's accumulation path: class-outer triple loops over (utterance,
// frame, class) against materialized dense posteriors.

#ifndef USM_TESTS_ORACLES_H_
#define USM_TESTS_ORACLES_H_

#include <limits>
#include <vector>

#include "test_util.h"

namespace usm::test {

struct OracleStats {
  std::vector<double> counts;          // K
  std::vector<std::vector<double>> m;  // K x d weighted means (empty: zeros)
  std::vector<double> sums;            // K x d flattened numerators
};

// Direct evaluation of the posterior-mass counts and weighted mean vectors,
// summing class-by-class over the whole corpus.
inline OracleStats TripleSumOracle(const Corpus& corpus, uint32_t num_classes,
                                   uint32_t dim) {
  OracleStats oracle;
  oracle.counts.assign(num_classes, 0.0);
  oracle.sums.assign(size_t(num_classes) * dim, 0.0);
  oracle.m.assign(num_classes, std::vector<double>(dim, 0.0));
  for (uint32_t k = 0; k < num_classes; ++k) {
    double count = 0.0;
    std::vector<double> sum(dim, 0.0);
    for (const auto& [features, posteriors] : corpus) {
      for (size_t t = 0; t < features.NumFrames(); ++t) {
        double gamma = posteriors.DenseFrame(t)[k];
        count += gamma;
        std::span<const float> x = features.Frame(t);
        for (uint32_t j = 0; j < dim; ++j) sum[j] += gamma * x[j];
      }
    }
    oracle.counts[k] = count;
    for (uint32_t j = 0; j < dim; ++j) {
      oracle.sums[size_t(k) * dim + j] = sum[j];
      if (count > 0.0) oracle.m[k][j] = sum[j] / count;
    }
  }
  return oracle;
}

struct TwoClusterSolution {
  double lo_centroid = 0.0;
  double hi_centroid = 0.0;
  double sse = 0.0;
};

// Exhaustive best 2-cluster partition of 1-D points: tries every nonempty
// bipartition and keeps the lowest within-cluster squared error.
inline TwoClusterSolution ExhaustiveTwoClusters1D(
    const std::vector<double>& points) {
  size_t n = points.size();
  TwoClusterSolution best;
  best.sse = std::numeric_limits<double>::infinity();
  for (uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    double sum[2] = {0.0, 0.0};
    size_t count[2] = {0, 0};
    for (size_t i = 0; i < n; ++i) {
      int side = (mask >> i) & 1;
      sum[side] += points[i];
      ++count[side];
    }
    double mean[2] = {sum[0] / count[0], sum[1] / count[1]};
    double sse = 0.0;
    for (size_t i = 0; i < n; ++i) {
      int side = (mask >> i) & 1;
      double diff = points[i] - mean[side];
      sse += diff * diff;
    }
    if (sse < best.sse) {
      best.sse = sse;
      best.lo_centroid = std::min(mean[0], mean[1]);
      best.hi_centroid = std::max(mean[0], mean[1]);
    }
  }
  return best;
}

}  // namespace usm::test

#endif  // USM_TESTS_ORACLES_H_
