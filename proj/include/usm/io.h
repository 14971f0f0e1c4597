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
// Binary file formats. All files are little-endian and start with a 4-byte
// magic plus a u32 version (currently 1):
//
//   USMF features     d:u32  T:u64  dtype:u8(=1)  utterance_id  speaker_id
//                     payload: T*d float32, row-major
//   USMP posteriors   K:u32  T:u64  mode:u8(0 dense, 1 sparse)
//                     dense payload: T*K float32, row-major
//                     sparse payload per frame: nnz:u16, nnz * (index:u32,
//                     value:float32), indices ascending
//   USMA accumulator  K:u32  d:u32  frames_seen:u64
//                     counts: K float64, sums: K*d float64
//   USMD dictionary   K:u32  d:u32  speaker_tag
//                     counts: K float64, entries: K*d float32
//   USMC codebook     K:u32  d:u32  training_inertia:float64
//                     centroids: K*d float32
//
// Strings are u32 length + UTF-8 bytes. Readers check every declared size
// against the actual file length before allocating, and report malformed
// input with the byte offset where parsing stopped.

#ifndef USM_IO_H_
#define USM_IO_H_

#include <filesystem>
#include <string>
#include <vector>

#include "usm/types.h"

namespace usm {

void WriteFeatures(const std::filesystem::path& path,
                   const FeatureSequence& sequence);
FeatureSequence ReadFeatures(const std::filesystem::path& path);

// Dense layout round-trips every stored frame bit-identically.
void WritePosteriorsDense(const std::filesystem::path& path,
                          const PosteriorSequence& sequence);

// Keeps the top_k largest values per frame (ties toward the smaller index);
// readers renormalize the retained mass back to 1.
void WritePosteriorsSparse(const std::filesystem::path& path,
                           const PosteriorSequence& sequence, uint32_t top_k);

PosteriorSequence ReadPosteriors(const std::filesystem::path& path);

void WriteAccumulator(const std::filesystem::path& path,
                      const StatsAccumulator& acc);
StatsAccumulator ReadAccumulator(const std::filesystem::path& path);

// Entries are truncated to float32 on write; counts stay float64 so empty
// classes survive the round-trip exactly.
void WriteDictionary(const std::filesystem::path& path,
                     const SemanticDictionary& dict);
SemanticDictionary ReadDictionary(const std::filesystem::path& path);

void WriteCodebook(const std::filesystem::path& path, const Codebook& cb);
Codebook ReadCodebook(const std::filesystem::path& path);

// One corpus utterance per manifest line:
//   <feature_path> <posterior_path> [speaker_id]
// separated by whitespace; "-" stands for a missing posterior path. Blank
// lines and lines starting with '#' are skipped. A non-empty speaker_id
// overrides the one stored in the feature file.
struct ManifestEntry {
  std::string feature_path;
  std::string posterior_path;  // empty when not given
  std::string speaker_id;      // empty when not given
};

std::vector<ManifestEntry> ReadManifest(const std::filesystem::path& path);

}  // namespace usm

#endif  // USM_IO_H_
