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

#include "usm/io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace usm {

namespace {

constexpr uint32_t kFormatVersion = 1;
constexpr uint8_t kDtypeFloat32 = 1;

[[noreturn]] void ThrowFormat(const std::filesystem::path& path,
                              uint64_t offset, const std::string& message) {
  std::ostringstream os;
  os << "'" << path.string() << "' at byte offset " << offset << ": "
     << message;
  throw UsmError(ErrorCode::kFormat, os.str());
}

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) {
      throw UsmError(ErrorCode::kFormat,
                     "cannot open '" + path.string() + "' for reading");
    }
    in_.seekg(0, std::ios::end);
    size_ = static_cast<uint64_t>(in_.tellg());
    in_.seekg(0, std::ios::beg);
  }

  uint64_t offset() const { return offset_; }
  uint64_t remaining() const { return size_ - offset_; }

  void Require(uint64_t n, const std::string& what) {
    if (n > remaining()) {
      std::ostringstream os;
      os << "truncated file: need " << n << " bytes for " << what
         << ", only " << remaining() << " left";
      ThrowFormat(path_, offset_, os.str());
    }
  }

  void ReadBytes(void* dst, uint64_t n, const std::string& what) {
    Require(n, what);
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<uint64_t>(in_.gcount()) != n) {
      ThrowFormat(path_, offset_, "short read for " + what);
    }
    offset_ += n;
  }

  uint8_t ReadU8(const std::string& what) {
    uint8_t b;
    ReadBytes(&b, 1, what);
    return b;
  }

  uint16_t ReadU16(const std::string& what) {
    uint8_t b[2];
    ReadBytes(b, 2, what);
    return static_cast<uint16_t>(b[0] | (uint16_t(b[1]) << 8));
  }

  uint32_t ReadU32(const std::string& what) {
    uint8_t b[4];
    ReadBytes(b, 4, what);
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
           (uint32_t(b[3]) << 24);
  }

  uint64_t ReadU64(const std::string& what) {
    uint8_t b[8];
    ReadBytes(b, 8, what);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  float ReadF32(const std::string& what) {
    return std::bit_cast<float>(ReadU32(what));
  }

  double ReadF64(const std::string& what) {
    return std::bit_cast<double>(ReadU64(what));
  }

  std::string ReadString(const std::string& what) {
    uint32_t len = ReadU32(what + " length");
    Require(len, what);
    std::string s(len, '\0');
    if (len > 0) ReadBytes(s.data(), len, what);
    return s;
  }

  void ExpectMagic(const char* magic) {
    char got[4];
    ReadBytes(got, 4, "magic");
    if (std::memcmp(got, magic, 4) != 0) {
      ThrowFormat(path_, 0,
                  std::string("bad magic, expected '") + magic + "'");
    }
    uint32_t version = ReadU32("version");
    if (version != kFormatVersion) {
      ThrowFormat(path_, 4,
                  "unsupported version " + std::to_string(version));
    }
  }

  void ExpectEnd() {
    if (remaining() != 0) {
      ThrowFormat(path_, offset_,
                  std::to_string(remaining()) + " trailing bytes");
    }
  }

  // Validates that count elements of elem_size bytes fit in the rest of the
  // file, guarding the multiplication against overflow.
  void RequireElements(uint64_t count, uint64_t elem_size,
                       const std::string& what) {
    if (elem_size != 0 &&
        count > std::numeric_limits<uint64_t>::max() / elem_size) {
      ThrowFormat(path_, offset_, "implausible element count for " + what);
    }
    Require(count * elem_size, what);
  }

  const std::filesystem::path& path() const { return path_; }

  [[noreturn]] void Fail(const std::string& message) {
    ThrowFormat(path_, offset_, message);
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  uint64_t size_ = 0;
  uint64_t offset_ = 0;
};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) {
      throw UsmError(ErrorCode::kFormat,
                     "cannot open '" + path.string() + "' for writing");
    }
  }

  void WriteBytes(const void* src, size_t n) {
    out_.write(static_cast<const char*>(src),
               static_cast<std::streamsize>(n));
  }

  void WriteU8(uint8_t v) { WriteBytes(&v, 1); }

  void WriteU16(uint16_t v) {
    uint8_t b[2] = {uint8_t(v & 0xff), uint8_t(v >> 8)};
    WriteBytes(b, 2);
  }

  void WriteU32(uint32_t v) {
    uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = uint8_t(v >> (8 * i));
    WriteBytes(b, 4);
  }

  void WriteU64(uint64_t v) {
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = uint8_t(v >> (8 * i));
    WriteBytes(b, 8);
  }

  void WriteF32(float v) { WriteU32(std::bit_cast<uint32_t>(v)); }
  void WriteF64(double v) { WriteU64(std::bit_cast<uint64_t>(v)); }

  void WriteString(const std::string& s) {
    if (s.size() > std::numeric_limits<uint32_t>::max()) {
      throw UsmError(ErrorCode::kFormat, "string field too long");
    }
    WriteU32(static_cast<uint32_t>(s.size()));
    WriteBytes(s.data(), s.size());
  }

  void WriteMagic(const char* magic) {
    WriteBytes(magic, 4);
    WriteU32(kFormatVersion);
  }

  void Finish() {
    out_.flush();
    if (!out_) {
      throw UsmError(ErrorCode::kFormat,
                     "write to '" + path_.string() + "' failed");
    }
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace

void WriteFeatures(const std::filesystem::path& path,
                   const FeatureSequence& sequence) {
  sequence.Validate();
  Writer w(path);
  w.WriteMagic("USMF");
  w.WriteU32(sequence.dim);
  w.WriteU64(sequence.NumFrames());
  w.WriteU8(kDtypeFloat32);
  w.WriteString(sequence.utterance_id);
  w.WriteString(sequence.speaker_id);
  for (float v : sequence.data) w.WriteF32(v);
  w.Finish();
}

FeatureSequence ReadFeatures(const std::filesystem::path& path) {
  Reader r(path);
  r.ExpectMagic("USMF");
  FeatureSequence seq;
  seq.dim = r.ReadU32("dim");
  if (seq.dim == 0) r.Fail("dim must be >= 1");
  uint64_t num_frames = r.ReadU64("frame count");
  uint8_t dtype = r.ReadU8("dtype");
  if (dtype != kDtypeFloat32) {
    r.Fail("unsupported dtype " + std::to_string(dtype));
  }
  seq.utterance_id = r.ReadString("utterance_id");
  seq.speaker_id = r.ReadString("speaker_id");
  r.RequireElements(num_frames, uint64_t(seq.dim) * 4, "feature payload");
  seq.data.resize(num_frames * seq.dim);
  for (size_t i = 0; i < seq.data.size(); ++i) {
    float v = r.ReadF32("feature value");
    if (!std::isfinite(v)) r.Fail("non-finite feature value");
    seq.data[i] = v;
  }
  r.ExpectEnd();
  return seq;
}

void WritePosteriorsDense(const std::filesystem::path& path,
                          const PosteriorSequence& sequence) {
  Writer w(path);
  w.WriteMagic("USMP");
  w.WriteU32(sequence.num_classes());
  w.WriteU64(sequence.NumFrames());
  w.WriteU8(static_cast<uint8_t>(PosteriorMode::kDense));
  for (size_t t = 0; t < sequence.NumFrames(); ++t) {
    for (float v : sequence.DenseFrame(t)) w.WriteF32(v);
  }
  w.Finish();
}

void WritePosteriorsSparse(const std::filesystem::path& path,
                           const PosteriorSequence& sequence, uint32_t top_k) {
  if (top_k == 0 || top_k > std::numeric_limits<uint16_t>::max()) {
    throw UsmError(ErrorCode::kInvalidParameter,
                   "sparse top-k must be in [1, 65535]");
  }
  Writer w(path);
  w.WriteMagic("USMP");
  w.WriteU32(sequence.num_classes());
  w.WriteU64(sequence.NumFrames());
  w.WriteU8(static_cast<uint8_t>(PosteriorMode::kSparseTopK));
  std::vector<PosteriorEntry> frame;
  for (size_t t = 0; t < sequence.NumFrames(); ++t) {
    std::span<const PosteriorEntry> stored = sequence.Frame(t);
    frame.assign(stored.begin(), stored.end());
    size_t keep = std::min<size_t>(top_k, frame.size());
    std::partial_sort(frame.begin(), frame.begin() + keep, frame.end(),
                      [](const PosteriorEntry& a, const PosteriorEntry& b) {
                        if (a.value != b.value) return a.value > b.value;
                        return a.index < b.index;
                      });
    frame.resize(keep);
    std::sort(frame.begin(), frame.end(),
              [](const PosteriorEntry& a, const PosteriorEntry& b) {
                return a.index < b.index;
              });
    w.WriteU16(static_cast<uint16_t>(keep));
    for (const PosteriorEntry& e : frame) {
      w.WriteU32(e.index);
      w.WriteF32(e.value);
    }
  }
  w.Finish();
}

PosteriorSequence ReadPosteriors(const std::filesystem::path& path) {
  Reader r(path);
  r.ExpectMagic("USMP");
  uint32_t num_classes = r.ReadU32("class count");
  if (num_classes == 0) r.Fail("class count must be >= 1");
  uint64_t num_frames = r.ReadU64("frame count");
  uint8_t mode = r.ReadU8("mode");

  if (mode == static_cast<uint8_t>(PosteriorMode::kDense)) {
    r.RequireElements(num_frames, uint64_t(num_classes) * 4,
                      "dense posterior payload");
    std::vector<float> rows(num_frames * num_classes);
    for (size_t i = 0; i < rows.size(); ++i) {
      float v = r.ReadF32("posterior value");
      if (!std::isfinite(v) || v < 0.0f) {
        r.Fail("negative or non-finite posterior value");
      }
      rows[i] = v;
    }
    r.ExpectEnd();
    try {
      return PosteriorSequence::FromDense(num_classes, rows);
    } catch (const UsmError& e) {
      throw UsmError(ErrorCode::kFormat,
                     "'" + path.string() + "': " + e.what());
    }
  }

  if (mode != static_cast<uint8_t>(PosteriorMode::kSparseTopK)) {
    r.Fail("unknown posterior mode " + std::to_string(mode));
  }
  // Every sparse frame spends at least 2 bytes on its nnz field; bounding
  // the declared frame count here keeps the allocation below file size.
  r.RequireElements(num_frames, 2, "sparse posterior frames");
  std::vector<std::vector<PosteriorEntry>> frames(num_frames);
  for (uint64_t t = 0; t < num_frames; ++t) {
    uint16_t nnz = r.ReadU16("frame nnz");
    if (nnz > num_classes) {
      r.Fail("frame " + std::to_string(t) + " has nnz " +
             std::to_string(nnz) + " > K " + std::to_string(num_classes));
    }
    r.RequireElements(nnz, 8, "sparse posterior entries");
    frames[t].reserve(nnz);
    for (uint16_t i = 0; i < nnz; ++i) {
      uint32_t index = r.ReadU32("posterior index");
      float value = r.ReadF32("posterior value");
      if (index >= num_classes) {
        r.Fail("posterior index " + std::to_string(index) + " out of range");
      }
      if (!std::isfinite(value) || value < 0.0f) {
        r.Fail("negative or non-finite posterior value");
      }
      frames[t].push_back({index, value});
    }
  }
  r.ExpectEnd();
  try {
    return PosteriorSequence::FromSparse(num_classes, frames);
  } catch (const UsmError& e) {
    throw UsmError(ErrorCode::kFormat, "'" + path.string() + "': " + e.what());
  }
}

void WriteAccumulator(const std::filesystem::path& path,
                      const StatsAccumulator& acc) {
  Writer w(path);
  w.WriteMagic("USMA");
  w.WriteU32(acc.num_classes());
  w.WriteU32(acc.dim());
  w.WriteU64(acc.frames_seen());
  for (double v : acc.counts()) w.WriteF64(v);
  for (double v : acc.sums()) w.WriteF64(v);
  w.Finish();
}

StatsAccumulator ReadAccumulator(const std::filesystem::path& path) {
  Reader r(path);
  r.ExpectMagic("USMA");
  uint32_t num_classes = r.ReadU32("class count");
  uint32_t dim = r.ReadU32("dim");
  if (num_classes == 0 || dim == 0) r.Fail("shape must be positive");
  uint64_t frames_seen = r.ReadU64("frames_seen");
  r.RequireElements(num_classes, 8, "counts");
  std::vector<double> counts(num_classes);
  for (double& v : counts) {
    v = r.ReadF64("count");
    if (!std::isfinite(v) || v < 0.0) r.Fail("invalid count value");
  }
  r.RequireElements(uint64_t(num_classes) * dim, 8, "sums");
  std::vector<double> sums(size_t(num_classes) * dim);
  for (double& v : sums) {
    v = r.ReadF64("sum");
    if (!std::isfinite(v)) r.Fail("non-finite sum value");
  }
  r.ExpectEnd();
  StatsAccumulator acc(num_classes, dim);
  acc.set_raw(std::move(counts), std::move(sums), frames_seen);
  return acc;
}

void WriteDictionary(const std::filesystem::path& path,
                     const SemanticDictionary& dict) {
  Writer w(path);
  w.WriteMagic("USMD");
  w.WriteU32(dict.num_classes);
  w.WriteU32(dict.dim);
  w.WriteString(dict.speaker_tag);
  for (double v : dict.counts) w.WriteF64(v);
  for (double v : dict.entries) w.WriteF32(static_cast<float>(v));
  w.Finish();
}

SemanticDictionary ReadDictionary(const std::filesystem::path& path) {
  Reader r(path);
  r.ExpectMagic("USMD");
  SemanticDictionary dict;
  dict.num_classes = r.ReadU32("class count");
  dict.dim = r.ReadU32("dim");
  if (dict.num_classes == 0 || dict.dim == 0) r.Fail("shape must be positive");
  dict.speaker_tag = r.ReadString("speaker_tag");
  r.RequireElements(dict.num_classes, 8, "counts");
  dict.counts.resize(dict.num_classes);
  for (double& v : dict.counts) {
    v = r.ReadF64("count");
    if (!std::isfinite(v) || v < 0.0) r.Fail("invalid count value");
  }
  r.RequireElements(uint64_t(dict.num_classes) * dict.dim, 4, "entries");
  dict.entries.resize(size_t(dict.num_classes) * dict.dim);
  for (double& v : dict.entries) {
    float f = r.ReadF32("entry value");
    if (!std::isfinite(f)) r.Fail("non-finite entry value");
    v = f;
  }
  r.ExpectEnd();
  return dict;
}

void WriteCodebook(const std::filesystem::path& path, const Codebook& cb) {
  Writer w(path);
  w.WriteMagic("USMC");
  w.WriteU32(cb.num_units);
  w.WriteU32(cb.dim);
  w.WriteF64(cb.training_inertia);
  for (double v : cb.centroids) w.WriteF32(static_cast<float>(v));
  w.Finish();
}

Codebook ReadCodebook(const std::filesystem::path& path) {
  Reader r(path);
  r.ExpectMagic("USMC");
  Codebook cb;
  cb.num_units = r.ReadU32("unit count");
  cb.dim = r.ReadU32("dim");
  if (cb.num_units == 0 || cb.dim == 0) r.Fail("shape must be positive");
  cb.training_inertia = r.ReadF64("training_inertia");
  if (!std::isfinite(cb.training_inertia) || cb.training_inertia < 0.0) {
    r.Fail("invalid training inertia");
  }
  r.RequireElements(uint64_t(cb.num_units) * cb.dim, 4, "centroids");
  cb.centroids.resize(size_t(cb.num_units) * cb.dim);
  for (double& v : cb.centroids) {
    float f = r.ReadF32("centroid value");
    if (!std::isfinite(f)) r.Fail("non-finite centroid value");
    v = f;
  }
  r.ExpectEnd();
  return cb;
}

std::vector<ManifestEntry> ReadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw UsmError(ErrorCode::kFormat,
                   "cannot open manifest '" + path.string() + "'");
  }
  std::vector<ManifestEntry> entries;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    ManifestEntry entry;
    if (!(is >> entry.feature_path)) continue;  // whitespace-only line
    is >> entry.posterior_path >> entry.speaker_id;
    if (entry.posterior_path == "-") entry.posterior_path.clear();
    std::string extra;
    if (is >> extra) {
      std::ostringstream os;
      os << "manifest '" << path.string() << "' line " << line_no
         << " has more than 3 fields";
      throw UsmError(ErrorCode::kFormat, os.str());
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace usm
