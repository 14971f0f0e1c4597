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

#include "usm/metrics.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "usm/io.h"

namespace usm {

size_t F0Contour::NumVoiced() const {
  size_t n = 0;
  for (bool v : voiced) n += v ? 1 : 0;
  return n;
}

double VoicedMeanF0(const F0Contour& contour) {
  double sum = 0.0;
  size_t n = 0;
  for (size_t t = 0; t < contour.values.size(); ++t) {
    if (contour.voiced[t]) {
      sum += contour.values[t];
      ++n;
    }
  }
  if (n == 0) {
    throw UsmError(ErrorCode::kInsufficientData, "contour has no voiced frame");
  }
  return sum / static_cast<double>(n);
}

F0Contour F0GroundTruth(const F0Contour& src, double mean_tar_hz,
                        double mean_src_hz) {
  if (!(mean_tar_hz > 0.0) || !(mean_src_hz > 0.0) ||
      !std::isfinite(mean_tar_hz) || !std::isfinite(mean_src_hz)) {
    throw UsmError(ErrorCode::kInvalidParameter,
                   "mean F0 values must be positive");
  }
  double scale = mean_tar_hz / mean_src_hz;
  F0Contour out = src;
  for (size_t t = 0; t < out.values.size(); ++t) {
    if (out.voiced[t]) out.values[t] = src.values[t] * scale;
  }
  return out;
}

namespace {

// Collects jointly voiced values from both contours, applying the scale.
void JointVoiced(const F0Contour& pred, const F0Contour& gt, F0Scale scale,
                 std::vector<double>* a, std::vector<double>* b) {
  if (pred.values.size() != gt.values.size()) {
    std::ostringstream os;
    os << "contours differ in length: " << pred.values.size() << " vs "
       << gt.values.size();
    throw UsmError(ErrorCode::kShape, os.str());
  }
  for (size_t t = 0; t < pred.values.size(); ++t) {
    if (!pred.voiced[t] || !gt.voiced[t]) continue;
    double x = pred.values[t];
    double y = gt.values[t];
    if (scale == F0Scale::kLog) {
      if (!(x > 0.0) || !(y > 0.0)) {
        throw UsmError(ErrorCode::kData,
                       "log-scale F0 needs positive voiced values");
      }
      x = std::log(x);
      y = std::log(y);
    }
    a->push_back(x);
    b->push_back(y);
  }
}

}  // namespace

double Fpc(const F0Contour& pred, const F0Contour& gt, F0Scale scale) {
  std::vector<double> a, b;
  JointVoiced(pred, gt, scale, &a, &b);
  size_t n = a.size();
  if (n < 2) {
    throw UsmError(ErrorCode::kInsufficientData,
                   "need at least 2 jointly voiced frames, got " +
                       std::to_string(n));
  }
  double mean_a = 0.0, mean_b = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double da = a[i] - mean_a;
    double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) {
    throw UsmError(ErrorCode::kUndefinedCorrelation,
                   "constant contour makes correlation undefined");
  }
  return cov / std::sqrt(var_a * var_b);
}

double LogF0L1(const F0Contour& pred, const F0Contour& gt) {
  std::vector<double> a, b;
  JointVoiced(pred, gt, F0Scale::kLog, &a, &b);
  if (a.empty()) {
    throw UsmError(ErrorCode::kInsufficientData, "no jointly voiced frames");
  }
  double total = 0.0;
  for (size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

namespace {

double CosineImpl(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << "embeddings differ in dimension: " << a.size() << " vs " << b.size();
    throw UsmError(ErrorCode::kShape, os.str());
  }
  double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    norm_a += a[i] * a[i];
    norm_b += b[i] * b[i];
  }
  if (norm_a <= 0.0 || norm_b <= 0.0) {
    throw UsmError(ErrorCode::kInvalidEmbedding,
                   "cosine similarity of a zero embedding is undefined");
  }
  return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

}  // namespace

double CosineSsim(std::span<const double> a, std::span<const double> b) {
  return CosineImpl(a, b);
}

double CosineSsim(std::span<const float> a, std::span<const float> b) {
  std::vector<double> da(a.begin(), a.end());
  std::vector<double> db(b.begin(), b.end());
  return CosineImpl(da, db);
}

F0Contour ReadF0Contour(const std::filesystem::path& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) {
      throw UsmError(ErrorCode::kFormat,
                     "cannot open '" + path.string() + "'");
    }
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    if (probe.gcount() == 4 && std::string_view(magic, 4) == "USMF") {
      FeatureSequence seq = ReadFeatures(path);
      if (seq.dim != 1) {
        std::ostringstream os;
        os << "F0 feature file '" << path.string() << "' has dim " << seq.dim
           << ", expected 1";
        throw UsmError(ErrorCode::kShape, os.str());
      }
      F0Contour contour;
      contour.values.reserve(seq.NumFrames());
      contour.voiced.reserve(seq.NumFrames());
      for (size_t t = 0; t < seq.NumFrames(); ++t) {
        double hz = seq.Frame(t)[0];
        if (hz < 0.0) {
          throw UsmError(ErrorCode::kData, "negative F0 value in '" +
                                               path.string() + "' at frame " +
                                               std::to_string(t));
        }
        contour.values.push_back(hz);
        contour.voiced.push_back(hz > 0.0);
      }
      return contour;
    }
  }

  std::ifstream in(path);
  if (!in) {
    throw UsmError(ErrorCode::kFormat, "cannot open '" + path.string() + "'");
  }
  F0Contour contour;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    long long frame_index;
    double hz;
    if (!(is >> frame_index >> hz)) {
      std::ostringstream os;
      os << "cannot parse '" << path.string() << "' line " << line_no
         << ": expected 'frame_index hz'";
      throw UsmError(ErrorCode::kFormat, os.str());
    }
    if (!std::isfinite(hz) || hz < 0.0) {
      std::ostringstream os;
      os << "invalid F0 value in '" << path.string() << "' line " << line_no;
      throw UsmError(ErrorCode::kData, os.str());
    }
    contour.values.push_back(hz);
    contour.voiced.push_back(hz > 0.0);
  }
  return contour;
}

}  // namespace usm
