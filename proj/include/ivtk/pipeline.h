// ivtk/pipeline.h

// Copyright 2026  The ivtk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef IVTK_PIPELINE_H_
#define IVTK_PIPELINE_H_

// Training and extraction drivers.
//
// One training iteration:
//   1. align the corpus against the current UBM if the cached alignment is
//      stale, then accumulate Baum-Welch statistics from the features;
//   2. E-step;
//   3. update T, then Sigma if enabled;
//   4. minimum divergence re-estimation if enabled;
//   5. if realign_interval > 0, the iteration number is a multiple of it and
//      this is not the last iteration, move the UBM means to the model's
//      bias terms and mark the alignment stale.
//
// Checkpoint directory layout:
//   iter-<k>.tvm    model after iteration k
//   alignment.aln   the cached frame alignment
//   state.txt       last completed iteration, config hash, alignment
//                   staleness and the per-iteration metrics so far

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ivtk/backend.h"
#include "ivtk/corpus.h"
#include "ivtk/dataflow.h"
#include "ivtk/gmm.h"
#include "ivtk/io-formats.h"
#include "ivtk/tvm.h"

namespace ivtk {

struct TrainConfig {
  Formulation formulation = Formulation::kAugmented;
  int latent_dim = 400;
  int iterations = 22;
  bool min_div = true;
  bool sigma_update = true;
  int realign_interval = 0;  // 0: never
  int top_k = kDefaultTopK;
  double prune = kDefaultPrune;
  double prior_offset = kDefaultPriorOffset;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  size_t batch_size_utts = 64;
  int workers = 1;
  bool deterministic = true;
  bool mean_update = false;  // standard formulation only

  // Throws std::invalid_argument on a violated invariant.
  void Check() const;
  DataflowOptions Dataflow() const;
};

// Flat "key = value" text, '#' starts a comment.  Unknown keys and malformed
// values are errors (DataError).  seeds is a comma-separated list.
TrainConfig ParseTrainConfig(const std::string &text);
TrainConfig ReadTrainConfig(const std::string &path);
std::string FormatTrainConfig(const TrainConfig &config);

// FNV-1a hash of everything that affects the trained model for `seed`
// (workers and the seed list are excluded).
uint64_t ConfigHash(const TrainConfig &config, uint64_t seed);

struct IterationRecord {
  int iteration = 0;
  double aux = 0.0;  // log-likelihood of the parameters entering the iteration
  double eer = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;  // cumulative training time
};

struct RunMetrics {
  std::string seed;  // "avg" for averaged series
  std::vector<IterationRecord> records;
};

// Element-wise mean over runs with the same number of records.
RunMetrics AverageMetrics(const std::vector<RunMetrics> &runs);

// Alignment against `ubm_full` with `ubm_diag` preselection.
std::vector<SparseAlignment> AlignCorpus(const FeatureStore &store,
                                         const GmmDiag &ubm_diag,
                                         const GmmFull &ubm_full, int top_k,
                                         double prune,
                                         const DataflowOptions &opts,
                                         DataflowStats *stats = nullptr);

// Statistics are recomputed from the features and `alignments`, centered as
// the model requires.  Partial accumulators are merged in batch order when
// opts.deterministic is set.
EmAccumulators EStepCorpus(const TvModel &model, const FeatureStore &store,
                           const std::vector<SparseAlignment> &alignments,
                           const DataflowOptions &opts,
                           DataflowStats *stats = nullptr);

// UBMs used for aligning with `model`: the base UBMs with their means moved
// to model.ubm_means (the diagonal model moves by the same offset).
std::pair<GmmDiag, GmmFull> AlignmentUbms(const TvModel &model,
                                          const GmmDiag &base_diag,
                                          const GmmFull &base_full);

struct TrainRuntime {
  std::string checkpoint_dir;  // empty: no checkpoints
  bool resume = false;
  int stop_after = 0;  // > 0: stop after this iteration (for testing resume)
  // Called after iterations where eval_interval divides the iteration number
  // and after the last one; returns an EER in percent.
  std::function<double(const TvModel &, int iteration)> evaluate;
  int eval_interval = 1;  // 0: last iteration only
};

struct TrainResult {
  TvModel model;
  RunMetrics metrics;
};

TrainResult TrainExtractor(const TrainConfig &config, const FeatureStore &corpus,
                           const GmmDiag &ubm_diag, const GmmFull &ubm_full,
                           uint64_t seed,
                           const TrainRuntime &runtime = TrainRuntime());

struct Embeddings {
  std::vector<std::string> ids;
  Matrix vectors;  // one row per utterance
};

// i-vectors of every utterance, aligned with the model's UBM means.
Embeddings ExtractCorpus(const TvModel &model, const FeatureStore &corpus,
                         const GmmDiag &ubm_diag, const GmmFull &ubm_full,
                         int top_k, double prune, const DataflowOptions &opts);

// Matrix file plus "<path>.ids", one id per line.
void WriteEmbeddings(const Embeddings &e, const std::string &path);
Embeddings ReadEmbeddings(const std::string &path);

// Scores trials against a back-end; every id must be present in `emb`.
std::vector<double> ScoreTrials(const Backend &backend, const Embeddings &emb,
                                const std::vector<Trial> &trials);

struct EvalProtocol {
  const FeatureStore *backend_train = nullptr;
  std::vector<std::string> backend_speakers;  // per backend_train utterance
  const FeatureStore *eval = nullptr;
  std::vector<Trial> trials;
  BackendConfig backend;
};

// Extracts both sets with `model`, trains the back-end and returns the EER
// (percent) on the trials.
double EvaluateEer(const TvModel &model, const EvalProtocol &protocol,
                   const GmmDiag &ubm_diag, const GmmFull &ubm_full,
                   const TrainConfig &config);

struct EnsembleResult {
  std::vector<RunMetrics> per_seed;
  RunMetrics average;
  bool complete = true;
  std::vector<std::string> failures;  // "seed: message"
};

// Trains one extractor per seed in config.seeds.  A failing seed is logged
// and recorded, the others still run.
EnsembleResult EnsembleRun(const TrainConfig &config, const FeatureStore &corpus,
                           const GmmDiag &ubm_diag, const GmmFull &ubm_full,
                           const EvalProtocol *protocol, int eval_interval = 1,
                           const std::string &checkpoint_root = "");

// Header seed,iteration,aux,eer,wall_seconds; per-seed blocks followed by the
// averaged block with seed "avg" ("avg-incomplete" if a seed failed).
void WriteMetricsCsv(const EnsembleResult &result, const std::string &path);

}  // namespace ivtk

#endif  // IVTK_PIPELINE_H_
