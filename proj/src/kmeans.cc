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

#include "usm/kmeans.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "usm/parallel.h"

namespace usm {

namespace {

// Uniform in [0, 1) from the generator's raw bits; avoids the
// implementation-defined std::uniform_real_distribution.
double NextUnit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double SqDist(const double* a, const double* b, uint32_t dim) {
  double sum = 0.0;
  for (uint32_t j = 0; j < dim; ++j) {
    double diff = a[j] - b[j];
    sum += diff * diff;
  }
  return sum;
}

// Flattens all frames into one double matrix, checking dimensions.
std::vector<double> GatherFrames(const std::vector<FeatureSequence>& features,
                                 uint32_t* dim_out) {
  uint32_t dim = 0;
  size_t total = 0;
  for (const FeatureSequence& seq : features) {
    if (seq.NumFrames() == 0) continue;
    if (dim == 0) {
      dim = seq.dim;
    } else if (seq.dim != dim) {
      std::ostringstream os;
      os << "utterance '" << seq.utterance_id << "' has dim " << seq.dim
         << ", expected " << dim;
      throw UsmError(ErrorCode::kShape, os.str());
    }
    total += seq.NumFrames();
  }
  std::vector<double> data;
  data.reserve(total * dim);
  for (const FeatureSequence& seq : features) {
    for (size_t t = 0; t < seq.NumFrames(); ++t) {
      for (float v : seq.Frame(t)) {
        if (!std::isfinite(v)) {
          std::ostringstream os;
          os << "non-finite feature value in utterance '" << seq.utterance_id
             << "' at frame " << t;
          throw UsmError(ErrorCode::kData, os.str());
        }
        data.push_back(v);
      }
    }
  }
  *dim_out = dim;
  return data;
}

std::vector<double> PlusPlusInit(const std::vector<double>& data, size_t n,
                                 uint32_t dim, uint32_t k, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> centroids(size_t(k) * dim);
  size_t first = std::min(n - 1, static_cast<size_t>(NextUnit(rng) * n));
  std::copy_n(data.data() + first * dim, dim, centroids.data());

  std::vector<double> best_sq(n);
  for (size_t i = 0; i < n; ++i) {
    best_sq[i] = SqDist(data.data() + i * dim, centroids.data(), dim);
  }
  for (uint32_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d2 : best_sq) total += d2;
    size_t chosen;
    if (total > 0.0) {
      double r = NextUnit(rng) * total;
      double cum = 0.0;
      chosen = n - 1;
      for (size_t i = 0; i < n; ++i) {
        cum += best_sq[i];
        if (cum > r) {
          chosen = i;
          break;
        }
      }
    } else {
      // All remaining mass is zero; any frame works.
      chosen = std::min(n - 1, static_cast<size_t>(NextUnit(rng) * n));
    }
    double* centroid = centroids.data() + size_t(c) * dim;
    std::copy_n(data.data() + chosen * dim, dim, centroid);
    for (size_t i = 0; i < n; ++i) {
      double d2 = SqDist(data.data() + i * dim, centroid, dim);
      if (d2 < best_sq[i]) best_sq[i] = d2;
    }
  }
  return centroids;
}

struct AssignResult {
  double inertia = 0.0;
};

// One assignment pass: fills labels and per-frame squared distances.
// Frame-level results do not depend on the thread count.
AssignResult AssignAll(const std::vector<double>& data, size_t n, uint32_t dim,
                       const std::vector<double>& centroids, uint32_t k,
                       int threads, std::vector<uint32_t>* labels,
                       std::vector<double>* best_sq) {
  std::vector<double> partial(static_cast<size_t>(threads < 1 ? 1 : threads),
                              0.0);
  ParallelFor(n, threads, [&](int worker, size_t begin, size_t end) {
    double local = 0.0;
    for (size_t i = begin; i < end; ++i) {
      const double* x = data.data() + i * dim;
      double best = std::numeric_limits<double>::infinity();
      uint32_t best_k = 0;
      for (uint32_t c = 0; c < k; ++c) {
        double d2 = SqDist(x, centroids.data() + size_t(c) * dim, dim);
        if (d2 < best) {
          best = d2;
          best_k = c;
        }
      }
      (*labels)[i] = best_k;
      (*best_sq)[i] = best;
      local += best;
    }
    partial[worker] += local;
  });
  AssignResult result;
  for (double p : partial) result.inertia += p;
  return result;
}

}  // namespace

Codebook KMeansTrain(const std::vector<FeatureSequence>& features,
                     const KMeansOptions& options,
                     std::vector<double>* inertia_history) {
  if (options.num_units == 0) {
    throw UsmError(ErrorCode::kInvalidDimension, "codebook size must be >= 1");
  }
  uint32_t dim = 0;
  std::vector<double> data = GatherFrames(features, &dim);
  size_t n = dim == 0 ? 0 : data.size() / dim;
  if (n < options.num_units) {
    std::ostringstream os;
    os << "k-means needs at least " << options.num_units << " frames, got "
       << n;
    throw UsmError(ErrorCode::kInsufficientData, os.str());
  }
  uint32_t k = options.num_units;
  std::vector<double> centroids = PlusPlusInit(data, n, dim, k, options.seed);

  std::vector<uint32_t> labels(n);
  std::vector<double> best_sq(n);
  if (inertia_history != nullptr) inertia_history->clear();
  double prev_inertia = std::numeric_limits<double>::infinity();
  double inertia = 0.0;

  int iter = 0;
  for (; iter < options.max_iters; ++iter) {
    inertia = AssignAll(data, n, dim, centroids, k, options.threads, &labels,
                        &best_sq)
                  .inertia;
    if (inertia_history != nullptr) inertia_history->push_back(inertia);
    if (iter > 0) {
      double improvement =
          prev_inertia > 0.0 ? (prev_inertia - inertia) / prev_inertia : 0.0;
      if (improvement < options.tol) break;
    }
    prev_inertia = inertia;

    // Update step: per-worker partial sums merged in worker order.
    int workers = options.threads < 1 ? 1 : options.threads;
    std::vector<std::vector<double>> w_sums(
        workers, std::vector<double>(size_t(k) * dim, 0.0));
    std::vector<std::vector<uint64_t>> w_counts(
        workers, std::vector<uint64_t>(k, 0));
    ParallelFor(n, options.threads, [&](int worker, size_t begin, size_t end) {
      std::vector<double>& sums = w_sums[worker];
      std::vector<uint64_t>& counts = w_counts[worker];
      for (size_t i = begin; i < end; ++i) {
        uint32_t c = labels[i];
        ++counts[c];
        const double* x = data.data() + i * dim;
        double* row = sums.data() + size_t(c) * dim;
        for (uint32_t j = 0; j < dim; ++j) row[j] += x[j];
      }
    });
    std::vector<double> sums(size_t(k) * dim, 0.0);
    std::vector<uint64_t> counts(k, 0);
    for (int w = 0; w < workers; ++w) {
      for (uint32_t c = 0; c < k; ++c) counts[c] += w_counts[w][c];
      for (size_t i = 0; i < sums.size(); ++i) sums[i] += w_sums[w][i];
    }
    std::vector<char> frame_taken(n, 0);
    for (uint32_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        double inv = 1.0 / static_cast<double>(counts[c]);
        double* row = centroids.data() + size_t(c) * dim;
        for (uint32_t j = 0; j < dim; ++j) row[j] = sums[size_t(c) * dim + j] * inv;
      } else {
        // Reseed an empty cluster to the frame farthest from its centroid.
        size_t farthest = 0;
        double farthest_sq = -1.0;
        for (size_t i = 0; i < n; ++i) {
          if (!frame_taken[i] && best_sq[i] > farthest_sq) {
            farthest_sq = best_sq[i];
            farthest = i;
          }
        }
        frame_taken[farthest] = 1;
        std::copy_n(data.data() + farthest * dim, dim,
                    centroids.data() + size_t(c) * dim);
      }
    }
  }

  if (iter == options.max_iters) {
    // Ran out of iterations after an update; measure the final centroids.
    inertia = AssignAll(data, n, dim, centroids, k, options.threads, &labels,
                        &best_sq)
                  .inertia;
    if (inertia_history != nullptr) inertia_history->push_back(inertia);
  }

  Codebook cb;
  cb.num_units = k;
  cb.dim = dim;
  cb.centroids = std::move(centroids);
  cb.training_inertia = inertia;
  return cb;
}

std::pair<uint32_t, double> Assign(const Codebook& codebook,
                                   std::span<const float> frame) {
  if (frame.size() != codebook.dim) {
    std::ostringstream os;
    os << "frame has dim " << frame.size() << ", codebook has dim "
       << codebook.dim;
    throw UsmError(ErrorCode::kShape, os.str());
  }
  std::vector<double> x(frame.begin(), frame.end());
  double best = std::numeric_limits<double>::infinity();
  uint32_t best_k = 0;
  for (uint32_t c = 0; c < codebook.num_units; ++c) {
    double d2 = SqDist(x.data(), codebook.centroids.data() + size_t(c) * codebook.dim,
                       codebook.dim);
    if (d2 < best) {
      best = d2;
      best_k = c;
    }
  }
  return {best_k, std::sqrt(best)};
}

std::vector<double> SoftPosteriorsFromSqDists(std::span<const double> sq_dists,
                                              double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw UsmError(ErrorCode::kInvalidParameter,
                   "temperature must be positive");
  }
  double min_d2 = std::numeric_limits<double>::infinity();
  for (double d2 : sq_dists) min_d2 = std::min(min_d2, d2);
  std::vector<double> p(sq_dists.size());
  double sum = 0.0;
  for (size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(-(sq_dists[k] - min_d2) / temperature);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> SoftPosteriors(const Codebook& codebook,
                                   std::span<const float> frame,
                                   double temperature) {
  if (frame.size() != codebook.dim) {
    throw UsmError(ErrorCode::kShape, "frame dim does not match codebook");
  }
  std::vector<double> x(frame.begin(), frame.end());
  std::vector<double> sq(codebook.num_units);
  for (uint32_t c = 0; c < codebook.num_units; ++c) {
    sq[c] = SqDist(x.data(),
                   codebook.centroids.data() + size_t(c) * codebook.dim,
                   codebook.dim);
  }
  return SoftPosteriorsFromSqDists(sq, temperature);
}

double Inertia(const Codebook& codebook,
               const std::vector<FeatureSequence>& features) {
  double total = 0.0;
  std::vector<double> x(codebook.dim);
  for (const FeatureSequence& seq : features) {
    if (seq.NumFrames() > 0 && seq.dim != codebook.dim) {
      throw UsmError(ErrorCode::kShape,
                     "utterance '" + seq.utterance_id +
                         "' dim does not match codebook");
    }
    for (size_t t = 0; t < seq.NumFrames(); ++t) {
      std::span<const float> frame = seq.Frame(t);
      for (uint32_t j = 0; j < codebook.dim; ++j) x[j] = frame[j];
      double best = std::numeric_limits<double>::infinity();
      for (uint32_t c = 0; c < codebook.num_units; ++c) {
        double d2 = SqDist(x.data(),
                           codebook.centroids.data() + size_t(c) * codebook.dim,
                           codebook.dim);
        if (d2 < best) best = d2;
      }
      total += best;
    }
  }
  return total;
}

double CalibrateTemperature(const Codebook& codebook,
                            const std::vector<FeatureSequence>& features) {
  size_t frames = 0;
  for (const FeatureSequence& seq : features) frames += seq.NumFrames();
  if (frames == 0) {
    throw UsmError(ErrorCode::kInsufficientData,
                   "no frames to calibrate temperature on");
  }
  double mean = Inertia(codebook, features) / static_cast<double>(frames);
  return mean > 0.0 ? mean : 1.0;
}

}  // namespace usm
