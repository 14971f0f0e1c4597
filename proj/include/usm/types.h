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

#ifndef USM_TYPES_H_
#define USM_TYPES_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "usm/error.h"

namespace usm {

// Per-frame posterior rows are accepted as valid when their sum lies within
// this band around 1 and are renormalized to exact unit mass.
inline constexpr double kPosteriorSumTolerance = 1e-5;

// Rows whose sum already deviates from 1 by less than this are kept verbatim.
// The bound is one float ulp above the truncation error of a row that was
// normalized in double and stored in single precision, so round-tripping a
// normalized row through a file never perturbs its bits.
inline constexpr double kPosteriorSkipRenormTolerance = 1e-7;

inline constexpr double kWeightSumTolerance = 1e-9;

// A per-utterance matrix of d-dimensional content frames, stored row-major
// in single precision. Frame payloads come from (and go back to) neural
// extractors that work in float32; all reductions over them happen in double.
struct FeatureSequence {
  uint32_t dim = 0;
  std::vector<float> data;  // NumFrames() x dim, row-major
  std::string utterance_id;
  std::string speaker_id;

  size_t NumFrames() const { return dim == 0 ? 0 : data.size() / dim; }

  std::span<const float> Frame(size_t t) const {
    return std::span<const float>(data.data() + t * dim, dim);
  }
  std::span<float> Frame(size_t t) {
    return std::span<float>(data.data() + t * dim, dim);
  }

  // Throws kInvalidDimension / kShape / kData (non-finite value, reported
  // with utterance id and frame index).
  void Validate() const;
};

struct PosteriorEntry {
  uint32_t index;
  float value;
};

enum class PosteriorMode : uint8_t { kDense = 0, kSparseTopK = 1 };

// Per-frame probability vectors over K classes. Zero entries are never
// stored, so dense and sparse-top-k sources share one representation; the
// mode tag remembers how the sequence was produced so writers can default
// to the same layout. Every stored frame sums to 1 up to float truncation.
class PosteriorSequence {
 public:
  PosteriorSequence() = default;

  // Builds from dense rows (frames x K, row-major). Each row must be
  // non-negative, finite, and sum to 1 within kPosteriorSumTolerance; rows
  // are renormalized on construction.
  static PosteriorSequence FromDense(uint32_t num_classes,
                                     std::span<const float> rows);

  // Builds from per-frame (index, value) pairs. Retained mass is
  // renormalized to 1 regardless of how much was truncated away, matching
  // the semantics of sparse-top-k files. Duplicate or out-of-range indices
  // are rejected.
  static PosteriorSequence FromSparse(
      uint32_t num_classes,
      const std::vector<std::vector<PosteriorEntry>>& frames);

  uint32_t num_classes() const { return num_classes_; }
  size_t NumFrames() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  PosteriorMode mode() const { return mode_; }

  std::span<const PosteriorEntry> Frame(size_t t) const {
    return std::span<const PosteriorEntry>(entries_.data() + offsets_[t],
                                           offsets_[t + 1] - offsets_[t]);
  }

  // Materializes frame t as a length-K vector with explicit zeros.
  std::vector<float> DenseFrame(size_t t) const;

 private:
  uint32_t num_classes_ = 0;
  PosteriorMode mode_ = PosteriorMode::kDense;
  std::vector<PosteriorEntry> entries_;  // nonzero entries, index-ascending
  std::vector<uint64_t> offsets_;        // NumFrames() + 1 frame boundaries
};

// Additive posterior-weighted sufficient statistics: per-class posterior
// mass n_k and per-class weighted feature sums. Single writer; parallel
// corpora use one accumulator per worker merged afterwards.
class StatsAccumulator {
 public:
  StatsAccumulator(uint32_t num_classes, uint32_t dim);

  // Adds one utterance: counts[k] += sum_t p_t[k],
  // sums[k] += sum_t p_t[k] * x_t. All arithmetic in double.
  void Add(const FeatureSequence& features, const PosteriorSequence& posteriors);

  // Element-wise addition of another accumulator with identical shape.
  void Merge(const StatsAccumulator& other);

  uint32_t num_classes() const { return num_classes_; }
  uint32_t dim() const { return dim_; }
  uint64_t frames_seen() const { return frames_seen_; }
  std::span<const double> counts() const { return counts_; }
  std::span<const double> sums() const { return sums_; }  // K x d row-major
  std::span<const double> Sum(uint32_t k) const {
    return std::span<const double>(sums_.data() + size_t(k) * dim_, dim_);
  }

  void set_raw(std::vector<double> counts, std::vector<double> sums,
               uint64_t frames_seen);  // used by the file reader

 private:
  uint32_t num_classes_;
  uint32_t dim_;
  std::vector<double> counts_;
  std::vector<double> sums_;
  uint64_t frames_seen_ = 0;
};

// K posterior-weighted mean content vectors (columns of the matrix M), plus
// the class counts they were estimated from. A class never observed keeps a
// zero entry and is flagged empty via its zero count. Empty speaker_tag
// denotes the universal dictionary.
struct SemanticDictionary {
  uint32_t num_classes = 0;
  uint32_t dim = 0;
  std::vector<double> entries;  // K x d row-major, zero rows for empty classes
  std::vector<double> counts;   // K
  std::string speaker_tag;

  std::span<const double> Entry(uint32_t k) const {
    return std::span<const double>(entries.data() + size_t(k) * dim, dim);
  }
  bool IsEmptyEntry(uint32_t k) const { return !(counts[k] > 0.0); }
};

// Residual-mix weights: w1 scales the re-expressed (timbre-free) term, w2
// the skip connection to the original frame, and the optional w3 a
// speaker-dependent re-expressed term.
struct MixWeights {
  double w1 = 0.0;
  double w2 = 0.0;
  std::optional<double> w3;

  bool HasSpeakerTerm() const { return w3.has_value(); }

  // Throws kInvalidWeights unless all weights lie in [0,1] and sum to 1
  // within kWeightSumTolerance.
  void Validate() const;
};

// k-means centroids used as a discrete speech-unit codebook.
struct Codebook {
  uint32_t num_units = 0;
  uint32_t dim = 0;
  std::vector<double> centroids;  // K x d row-major
  double training_inertia = 0.0;

  std::span<const double> Centroid(uint32_t k) const {
    return std::span<const double>(centroids.data() + size_t(k) * dim, dim);
  }
};

// Renormalizes a dense posterior row in place. Returns the pre-normalization
// sum. Throws kData when the row is negative, non-finite, or its sum falls
// outside kPosteriorSumTolerance. `where` names the frame in error messages.
double NormalizePosteriorRow(std::span<float> row, const std::string& where);

}  // namespace usm

#endif  // USM_TYPES_H_
