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

#ifndef USM_STATS_H_
#define USM_STATS_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "usm/types.h"

namespace usm {

// Divides accumulated statistics into a semantic dictionary:
// entries[k] = sums[k] / counts[k] for observed classes, a zero row flagged
// by its zero count otherwise. Pass a non-empty speaker_tag to mark a
// speaker-dependent dictionary.
SemanticDictionary Finalize(const StatsAccumulator& acc,
                            const std::string& speaker_tag = "");

// One-shot accumulate + finalize over an in-memory corpus. When
// speaker_filter is set, only utterances whose speaker_id matches
// contribute, and the dictionary is tagged with the filter value.
// Throws kEmptyCorpus when nothing is left to accumulate.
SemanticDictionary BuildDictionary(
    const std::vector<std::pair<FeatureSequence, PosteriorSequence>>& corpus,
    uint32_t num_classes, uint32_t dim,
    const std::optional<std::string>& speaker_filter = std::nullopt);

}  // namespace usm

#endif  // USM_STATS_H_
