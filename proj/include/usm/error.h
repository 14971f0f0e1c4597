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

#ifndef USM_ERROR_H_
#define USM_ERROR_H_

#include <stdexcept>
#include <string>

namespace usm {

// Every failure the library can raise falls in one of these categories.
// The CLI maps each category to a stable process exit code, so new codes
// must not be added casually.
enum class ErrorCode {
  kShape,                 // mismatched dimensions between paired objects
  kFormat,                // malformed file: bad magic, truncation, bad header
  kData,                  // non-finite or otherwise invalid payload values
  kInvalidDimension,      // K = 0 or d = 0 where a positive size is required
  kInvalidParameter,      // out-of-range scalar parameter (e.g. mean F0 <= 0)
  kEmptyCorpus,           // no utterances left after manifest filtering
  kInvalidWeights,        // mix weights out of range or not summing to 1
  kUnknownPreset,         // unrecognized weight preset name
  kInsufficientData,      // too few frames/voiced samples for the operation
  kUndefinedCorrelation,  // zero variance makes Pearson correlation undefined
  kInvalidEmbedding,      // zero vector passed to cosine similarity
};

// CLI exit codes: 0 success, 2 shape/format, 3 empty corpus,
// 4 invalid weights, 5 insufficient data.
int ExitCodeFor(ErrorCode code);

class UsmError : public std::runtime_error {
 public:
  UsmError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }
  int exit_code() const { return ExitCodeFor(code_); }

 private:
  ErrorCode code_;
};

}  // namespace usm

#endif  // USM_ERROR_H_
