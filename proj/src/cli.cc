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

#include "usm/cli.h"

#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "usm/cfr.h"
#include "usm/io.h"
#include "usm/kmeans.h"
#include "usm/metrics.h"
#include "usm/parallel.h"
#include "usm/stats.h"

namespace usm::cli {

namespace {

// Manifest speaker column, when present, wins over the id stored in the file.
FeatureSequence LoadManifestFeatures(const ManifestEntry& entry) {
  FeatureSequence seq = ReadFeatures(entry.feature_path);
  if (!entry.speaker_id.empty()) seq.speaker_id = entry.speaker_id;
  return seq;
}

std::vector<ManifestEntry> LoadManifestFiltered(
    const std::string& manifest_path, const std::string& speaker_filter) {
  std::vector<ManifestEntry> entries = ReadManifest(manifest_path);
  if (!speaker_filter.empty()) {
    std::erase_if(entries, [&](const ManifestEntry& e) {
      return e.speaker_id != speaker_filter;
    });
  }
  if (entries.empty()) {
    std::string msg = "no utterances in manifest '" + manifest_path + "'";
    if (!speaker_filter.empty()) {
      msg += " for speaker '" + speaker_filter + "'";
    }
    throw UsmError(ErrorCode::kEmptyCorpus, msg);
  }
  return entries;
}

// Rethrows reader/shape errors with the offending manifest entry attached.
[[noreturn]] void RethrowWithPath(const UsmError& e, const std::string& path) {
  throw UsmError(e.code(), path + ": " + e.what());
}

void PrintMetric(std::ostream& out, double value) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << value;
  out << os.str() << "\n";
}

struct StatsAccumulateArgs {
  std::string manifest;
  uint32_t num_classes = 0;
  uint32_t dim = 0;
  std::string out_path;
  std::string speaker;
  int threads = 0;
};

void RunStatsAccumulate(const StatsAccumulateArgs& args, std::ostream& err) {
  std::vector<ManifestEntry> entries =
      LoadManifestFiltered(args.manifest, args.speaker);
  for (const ManifestEntry& e : entries) {
    if (e.posterior_path.empty()) {
      throw UsmError(ErrorCode::kFormat,
                     "manifest entry '" + e.feature_path +
                         "' has no posterior path");
    }
  }
  int threads = ResolveThreadCount(args.threads);
  int workers = threads < 1 ? 1 : threads;
  std::vector<std::unique_ptr<StatsAccumulator>> partial(workers);
  ParallelFor(entries.size(), threads, [&](int worker, size_t begin, size_t end) {
    auto acc = std::make_unique<StatsAccumulator>(args.num_classes, args.dim);
    for (size_t i = begin; i < end; ++i) {
      const ManifestEntry& entry = entries[i];
      try {
        FeatureSequence features = LoadManifestFeatures(entry);
        PosteriorSequence posteriors = ReadPosteriors(entry.posterior_path);
        acc->Add(features, posteriors);
      } catch (const UsmError& e) {
        RethrowWithPath(e, entry.feature_path);
      }
    }
    partial[worker] = std::move(acc);
  });
  StatsAccumulator acc(args.num_classes, args.dim);
  for (int w = 0; w < workers; ++w) {
    if (partial[w]) acc.Merge(*partial[w]);
  }
  WriteAccumulator(args.out_path, acc);
  err << "accumulated " << entries.size() << " utterances ("
      << acc.frames_seen() << " frames) into '" << args.out_path << "'\n";
}

struct TransformArgs {
  std::string dict_path;
  std::string features_path;
  std::string posteriors_path;
  std::string speaker_dict_path;
  std::string preset;
  std::optional<double> w1, w2, w3;
  std::string out_path;
  int threads = 0;
};

MixWeights ResolveWeights(const TransformArgs& args) {
  bool manual = args.w1.has_value() || args.w2.has_value() || args.w3.has_value();
  if (!args.preset.empty() && manual) {
    throw UsmError(ErrorCode::kInvalidWeights,
                   "--preset conflicts with explicit --w1/--w2/--w3");
  }
  if (!args.preset.empty()) return LoadPreset(args.preset);
  if (!args.w1.has_value() || !args.w2.has_value()) {
    throw UsmError(ErrorCode::kInvalidWeights,
                   "need --preset or both --w1 and --w2");
  }
  MixWeights weights{*args.w1, *args.w2, args.w3};
  weights.Validate();
  return weights;
}

void RunTransform(const TransformArgs& args, std::ostream& err) {
  MixWeights weights = ResolveWeights(args);
  if (weights.HasSpeakerTerm() && args.speaker_dict_path.empty()) {
    throw UsmError(ErrorCode::kInvalidWeights,
                   "weight w3 needs --speaker-dict");
  }
  if (!weights.HasSpeakerTerm() && !args.speaker_dict_path.empty()) {
    throw UsmError(ErrorCode::kInvalidWeights,
                   "--speaker-dict needs a three-term weight setting");
  }
  SemanticDictionary dict = ReadDictionary(args.dict_path);
  FeatureSequence features = ReadFeatures(args.features_path);
  PosteriorSequence posteriors = ReadPosteriors(args.posteriors_path);
  SemanticDictionary speaker_dict;
  if (weights.HasSpeakerTerm()) {
    speaker_dict = ReadDictionary(args.speaker_dict_path);
  }
  ReexpressStats stats;
  FeatureSequence out = TransformSequence(
      dict, features, posteriors, weights,
      weights.HasSpeakerTerm() ? &speaker_dict : nullptr, &stats,
      ResolveThreadCount(args.threads));
  if (stats.low_mass_frames > 0) {
    err << "warning: utterance '" << features.utterance_id << "': "
        << stats.low_mass_frames
        << " frames put most posterior mass on empty dictionary entries\n";
  }
  WriteFeatures(args.out_path, out);
}

struct KmeansTrainArgs {
  std::string manifest;
  KMeansOptions options;
  std::string out_path;
};

void RunKmeansTrain(const KmeansTrainArgs& args, std::ostream& err) {
  std::vector<ManifestEntry> entries = LoadManifestFiltered(args.manifest, "");
  std::vector<FeatureSequence> features;
  features.reserve(entries.size());
  for (const ManifestEntry& entry : entries) {
    try {
      features.push_back(LoadManifestFeatures(entry));
    } catch (const UsmError& e) {
      RethrowWithPath(e, entry.feature_path);
    }
  }
  std::vector<double> history;
  KMeansOptions options = args.options;
  options.threads = ResolveThreadCount(options.threads);
  Codebook cb = KMeansTrain(features, options, &history);
  WriteCodebook(args.out_path, cb);
  err << "k-means finished after " << history.size()
      << " assignment passes, inertia " << cb.training_inertia << "\n";
}

struct FileAndCodebookArgs {
  std::string codebook_path;
  std::string features_path;
  std::string out_path;
  double temperature = 0.0;  // 0 = calibrate from the input
  uint32_t sparse_top_k = 0;  // 0 = dense
  int threads = 0;
};

void RunKmeansAssign(const FileAndCodebookArgs& args, std::ostream& out) {
  Codebook cb = ReadCodebook(args.codebook_path);
  FeatureSequence features = ReadFeatures(args.features_path);
  size_t num_frames = features.NumFrames();
  std::vector<uint32_t> units(num_frames);
  ParallelFor(num_frames, ResolveThreadCount(args.threads),
              [&](int /*worker*/, size_t begin, size_t end) {
                for (size_t t = begin; t < end; ++t) {
                  units[t] = Assign(cb, features.Frame(t)).first;
                }
              });
  for (uint32_t unit : units) out << unit << "\n";
}

void RunKmeansPosteriors(const FileAndCodebookArgs& args, std::ostream& err) {
  Codebook cb = ReadCodebook(args.codebook_path);
  FeatureSequence features = ReadFeatures(args.features_path);
  double temperature = args.temperature;
  if (temperature <= 0.0) {
    temperature = CalibrateTemperature(cb, {features});
    err << "calibrated temperature " << temperature << "\n";
  }
  size_t num_frames = features.NumFrames();
  std::vector<float> rows(num_frames * size_t(cb.num_units));
  ParallelFor(num_frames, ResolveThreadCount(args.threads),
              [&](int /*worker*/, size_t begin, size_t end) {
                for (size_t t = begin; t < end; ++t) {
                  std::vector<double> p =
                      SoftPosteriors(cb, features.Frame(t), temperature);
                  float* dst = rows.data() + t * cb.num_units;
                  for (uint32_t k = 0; k < cb.num_units; ++k) {
                    dst[k] = static_cast<float>(p[k]);
                  }
                }
              });
  PosteriorSequence seq = PosteriorSequence::FromDense(cb.num_units, rows);
  if (args.sparse_top_k > 0) {
    WritePosteriorsSparse(args.out_path, seq, args.sparse_top_k);
  } else {
    WritePosteriorsDense(args.out_path, seq);
  }
}

// Mean-pools a stored embedding sequence into one vector.
std::vector<double> LoadEmbedding(const std::string& path) {
  FeatureSequence seq = ReadFeatures(path);
  if (seq.NumFrames() == 0) {
    throw UsmError(ErrorCode::kInsufficientData,
                   "embedding file '" + path + "' has no frames");
  }
  std::vector<double> mean(seq.dim, 0.0);
  for (size_t t = 0; t < seq.NumFrames(); ++t) {
    std::span<const float> frame = seq.Frame(t);
    for (uint32_t j = 0; j < seq.dim; ++j) mean[j] += frame[j];
  }
  for (double& v : mean) v /= static_cast<double>(seq.NumFrames());
  return mean;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"semantic dictionary and speech-unit toolkit"};
  app.require_subcommand(1);

  // stats
  auto* stats_cmd = app.add_subcommand(
      "stats", "accumulate, merge, and finalize dictionary statistics");
  stats_cmd->require_subcommand(1);

  StatsAccumulateArgs acc_args;
  auto* acc_cmd = stats_cmd->add_subcommand(
      "accumulate", "accumulate posterior-weighted statistics over a corpus");
  acc_cmd->add_option("--manifest", acc_args.manifest)->required();
  acc_cmd->add_option("--classes", acc_args.num_classes)->required();
  acc_cmd->add_option("--dim", acc_args.dim)->required();
  acc_cmd->add_option("--out", acc_args.out_path)->required();
  acc_cmd->add_option("--speaker", acc_args.speaker,
                      "only accumulate utterances of this speaker");
  acc_cmd->add_option("--threads", acc_args.threads);
  acc_cmd->callback([&] { RunStatsAccumulate(acc_args, err); });

  std::vector<std::string> merge_inputs;
  std::string merge_out;
  auto* merge_cmd =
      stats_cmd->add_subcommand("merge", "merge partial accumulators");
  merge_cmd->add_option("inputs", merge_inputs)->required()->expected(-1);
  merge_cmd->add_option("--out", merge_out)->required();
  merge_cmd->callback([&] {
    StatsAccumulator acc = ReadAccumulator(merge_inputs.front());
    for (size_t i = 1; i < merge_inputs.size(); ++i) {
      acc.Merge(ReadAccumulator(merge_inputs[i]));
    }
    WriteAccumulator(merge_out, acc);
  });

  std::string finalize_input, finalize_out, finalize_tag;
  auto* finalize_cmd = stats_cmd->add_subcommand(
      "finalize", "turn an accumulator into a semantic dictionary");
  finalize_cmd->add_option("input", finalize_input)->required();
  finalize_cmd->add_option("--out", finalize_out)->required();
  finalize_cmd->add_option("--speaker-tag", finalize_tag,
                           "tag the dictionary as speaker-dependent");
  finalize_cmd->callback([&] {
    StatsAccumulator acc = ReadAccumulator(finalize_input);
    WriteDictionary(finalize_out, Finalize(acc, finalize_tag));
  });

  // transform
  TransformArgs tf_args;
  auto* tf_cmd = app.add_subcommand(
      "transform", "re-express content features and apply the residual mix");
  tf_cmd->add_option("--dict", tf_args.dict_path)->required();
  tf_cmd->add_option("--features", tf_args.features_path)->required();
  tf_cmd->add_option("--posteriors", tf_args.posteriors_path)->required();
  tf_cmd->add_option("--speaker-dict", tf_args.speaker_dict_path);
  tf_cmd->add_option("--preset", tf_args.preset,
                     "vits-usm, vits-usm-star, lm-usm, or diffusion-usm");
  tf_cmd->add_option("--w1", tf_args.w1);
  tf_cmd->add_option("--w2", tf_args.w2);
  tf_cmd->add_option("--w3", tf_args.w3);
  tf_cmd->add_option("--out", tf_args.out_path)->required();
  tf_cmd->add_option("--threads", tf_args.threads);
  tf_cmd->callback([&] { RunTransform(tf_args, err); });

  // kmeans
  auto* kmeans_cmd =
      app.add_subcommand("kmeans", "speech-unit codebook operations");
  kmeans_cmd->require_subcommand(1);

  KmeansTrainArgs train_args;
  auto* train_cmd =
      kmeans_cmd->add_subcommand("train", "train a codebook with k-means");
  train_cmd->add_option("--manifest", train_args.manifest)->required();
  train_cmd->add_option("--k", train_args.options.num_units,
                        "codebook size")
      ->default_val(kDefaultCodebookSize);
  train_cmd->add_option("--seed", train_args.options.seed)->default_val(0);
  train_cmd->add_option("--max-iters", train_args.options.max_iters)
      ->default_val(100);
  train_cmd->add_option("--tol", train_args.options.tol)->default_val(1e-6);
  train_cmd->add_option("--out", train_args.out_path)->required();
  train_cmd->add_option("--threads", train_args.options.threads);
  train_cmd->callback([&] { RunKmeansTrain(train_args, err); });

  FileAndCodebookArgs assign_args;
  auto* assign_cmd = kmeans_cmd->add_subcommand(
      "assign", "print the nearest unit id for every frame");
  assign_cmd->add_option("--codebook", assign_args.codebook_path)->required();
  assign_cmd->add_option("--features", assign_args.features_path)->required();
  assign_cmd->add_option("--threads", assign_args.threads);
  assign_cmd->callback([&] { RunKmeansAssign(assign_args, out); });

  FileAndCodebookArgs post_args;
  auto* post_cmd = kmeans_cmd->add_subcommand(
      "posteriors", "write distance-derived posteriors for every frame");
  post_cmd->add_option("--codebook", post_args.codebook_path)->required();
  post_cmd->add_option("--features", post_args.features_path)->required();
  post_cmd->add_option("--temperature", post_args.temperature,
                       "softmax temperature; calibrated from the input when "
                       "not given");
  post_cmd->add_option("--sparse-top-k", post_args.sparse_top_k,
                       "write sparse posteriors keeping this many entries");
  post_cmd->add_option("--out", post_args.out_path)->required();
  post_cmd->add_option("--threads", post_args.threads);
  post_cmd->callback([&] { RunKmeansPosteriors(post_args, err); });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "objective metrics");
  eval_cmd->require_subcommand(1);

  std::string fpc_pred, fpc_src;
  double fpc_mean_tar = 0.0, fpc_mean_src = 0.0;
  bool fpc_log = false;
  auto* fpc_cmd = eval_cmd->add_subcommand(
      "fpc", "Pearson correlation against the mean-shifted source contour");
  fpc_cmd->add_option("--pred", fpc_pred)->required();
  fpc_cmd->add_option("--src", fpc_src)->required();
  fpc_cmd->add_option("--mean-tar", fpc_mean_tar)->required();
  fpc_cmd->add_option("--mean-src", fpc_mean_src)->required();
  fpc_cmd->add_flag("--log", fpc_log, "correlate log-scale F0");
  fpc_cmd->callback([&] {
    F0Contour pred = ReadF0Contour(fpc_pred);
    F0Contour src = ReadF0Contour(fpc_src);
    F0Contour gt = F0GroundTruth(src, fpc_mean_tar, fpc_mean_src);
    PrintMetric(out, Fpc(pred, gt, fpc_log ? F0Scale::kLog : F0Scale::kLinear));
  });

  std::string ssim_a, ssim_b;
  auto* ssim_cmd = eval_cmd->add_subcommand(
      "ssim", "cosine similarity between two stored speaker embeddings");
  ssim_cmd->add_option("--a", ssim_a)->required();
  ssim_cmd->add_option("--b", ssim_b)->required();
  ssim_cmd->callback([&] {
    std::vector<double> a = LoadEmbedding(ssim_a);
    std::vector<double> b = LoadEmbedding(ssim_b);
    PrintMetric(out, CosineSsim(std::span<const double>(a),
                                std::span<const double>(b)));
  });

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("usm");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsmError& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  }
  return 0;
}

}  // namespace usm::cli
