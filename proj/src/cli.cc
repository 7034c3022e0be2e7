// src/cli.cc

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

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ivtk/backend.h"
#include "ivtk/cli.h"
#include "ivtk/gmm.h"
#include "ivtk/io-formats.h"
#include "ivtk/pipeline.h"
#include "ivtk/synth.h"

namespace ivtk {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> ReadUtt2Spk(const std::string &path,
                                     const std::vector<std::string> &ids) {
  std::map<std::string, std::string> map;
  for (auto &[utt, spk] : ReadKeyValueFile(path)) map[utt] = spk;
  std::vector<std::string> out;
  for (const std::string &id : ids) {
    auto it = map.find(id);
    if (it == map.end()) throw DataError(path + ": no speaker for " + id);
    out.push_back(it->second);
  }
  return out;
}

// ---- ubm-train -------------------------------------------------------------

struct UbmTrainArgs {
  std::string feats, out_diag, out_full;
  int num_components = 0, diag_iterations = 10, full_iterations = 4;
  uint64_t seed = 0;
  int workers = 1;
};

void AddUbmTrain(CLI::App &app, UbmTrainArgs &a) {
  app.add_option("--feats", a.feats, "Feature list (utt_id path lines)")
      ->required()->check(CLI::ExistingFile);
  app.add_option("--num-components", a.num_components, "Number of Gaussians")
      ->required()->check(CLI::PositiveNumber);
  app.add_option("--diag-iterations", a.diag_iterations,
                 "EM iterations for the diagonal model")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--full-iterations", a.full_iterations,
                 "EM iterations for the full-covariance model")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--seed", a.seed, "Random seed")->capture_default_str();
  app.add_option("--workers", a.workers, "Worker threads")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out-diag", a.out_diag, "Output diagonal UBM")->required();
  app.add_option("--out-full", a.out_full, "Output full-covariance UBM")
      ->required();
}

int RunUbmTrain(const UbmTrainArgs &a) {
  ScpFeatureStore store(a.feats);
  GmmTrainOptions opts;
  opts.num_components = a.num_components;
  opts.seed = a.seed;
  opts.workers = a.workers;
  opts.iterations = a.diag_iterations;
  GmmDiag diag = TrainGmmDiag(store, opts);
  opts.iterations = a.full_iterations;
  GmmFull full = TrainGmmFull(store, diag, opts);
  WriteMatrix(GmmDiagToMatrix(ToDiag(full)), Dtype::kF64, a.out_diag);
  WriteMatrix(GmmFullToMatrix(full), Dtype::kF64, a.out_full);
  return kExitOk;
}

// ---- align -----------------------------------------------------------------

struct UbmArgs {
  std::string diag, full;
};

void AddUbmOptions(CLI::App &app, UbmArgs &u) {
  app.add_option("--ubm-diag", u.diag, "Diagonal UBM (preselection)")
      ->required()->check(CLI::ExistingFile);
  app.add_option("--ubm-full", u.full, "Full-covariance UBM")
      ->required()->check(CLI::ExistingFile);
}

struct AlignArgs {
  std::string feats, model, out;
  UbmArgs ubm;
  int top_k = kDefaultTopK;
  double prune = kDefaultPrune;
  int workers = 1;
  size_t batch_size = 64;
};

void AddAlignmentOptions(CLI::App &app, int &top_k, double &prune) {
  app.add_option("--top-k", top_k, "Components kept by diagonal preselection")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--prune", prune, "Posterior pruning threshold")
      ->capture_default_str()->check(CLI::Range(0.0, 0.999999));
}

void AddDataflowOptions(CLI::App &app, int &workers, size_t &batch_size) {
  app.add_option("--workers", workers, "Worker threads per pipeline stage")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--batch-size", batch_size, "Utterances per batch")
      ->capture_default_str()->check(CLI::PositiveNumber);
}

void AddAlign(CLI::App &app, AlignArgs &a) {
  app.add_option("--feats", a.feats, "Feature list")
      ->required()->check(CLI::ExistingFile);
  AddUbmOptions(app, a.ubm);
  app.add_option("--model", a.model,
                 "Align with the UBM means carried by this model")
      ->check(CLI::ExistingFile);
  AddAlignmentOptions(app, a.top_k, a.prune);
  AddDataflowOptions(app, a.workers, a.batch_size);
  app.add_option("--out", a.out, "Output alignment archive")->required();
}

DataflowOptions MakeDataflow(int workers, size_t batch_size) {
  DataflowOptions opts;
  opts.workers = workers;
  opts.batch_size = batch_size;
  return opts;
}

int RunAlign(const AlignArgs &a) {
  ScpFeatureStore store(a.feats);
  GmmDiag diag = GmmDiagFromMatrix(ReadMatrix(a.ubm.diag));
  GmmFull full = GmmFullFromMatrix(ReadMatrix(a.ubm.full));
  if (!a.model.empty()) {
    TvModel model = LoadModel(a.model);
    std::tie(diag, full) = AlignmentUbms(model, diag, full);
  }
  AlignmentArchive archive;
  archive.top_k = static_cast<uint32_t>(a.top_k);
  archive.alignments = AlignCorpus(store, diag, full, a.top_k, a.prune,
                                   MakeDataflow(a.workers, a.batch_size));
  for (size_t i = 0; i < store.Size(); ++i) archive.ids.push_back(store.Id(i));
  WriteAlignment(archive, a.out);
  return kExitOk;
}

// ---- tv-train --------------------------------------------------------------

struct TvTrainArgs {
  std::string config, feats, out, checkpoint_dir, metrics;
  UbmArgs ubm;
  uint64_t seed = 0;
  int workers = 0;
  bool resume = false;
};

void AddTvTrain(CLI::App &app, TvTrainArgs &a) {
  app.add_option("--config", a.config,
                 "Training configuration (key = value lines; iterations "
                 "defaults to 22)")
      ->required()->check(CLI::ExistingFile);
  app.add_option("--feats", a.feats, "Feature list")
      ->required()->check(CLI::ExistingFile);
  AddUbmOptions(app, a.ubm);
  app.add_option("--out", a.out, "Output model")->required();
  app.add_option("--seed", a.seed,
                 "Initialization seed (default: first seed of the config)");
  app.add_option("--workers", a.workers, "Override the config's workers")
      ->check(CLI::PositiveNumber);
  app.add_option("--checkpoint-dir", a.checkpoint_dir,
                 "Write a checkpoint after every iteration");
  app.add_flag("--resume", a.resume,
               "Continue from the checkpoint directory if it has state");
  app.add_option("--metrics", a.metrics, "Per-iteration metrics CSV");
}

int RunTvTrain(const TvTrainArgs &a, const CLI::App &app) {
  TrainConfig config = ReadTrainConfig(a.config);
  if (a.workers > 0) config.workers = a.workers;
  const uint64_t seed = app.count("--seed") ? a.seed : config.seeds.front();
  if (a.resume && a.checkpoint_dir.empty())
    throw std::invalid_argument("--resume needs --checkpoint-dir");
  ScpFeatureStore store(a.feats);
  GmmDiag diag = GmmDiagFromMatrix(ReadMatrix(a.ubm.diag));
  GmmFull full = GmmFullFromMatrix(ReadMatrix(a.ubm.full));
  TrainRuntime runtime;
  runtime.checkpoint_dir = a.checkpoint_dir;
  runtime.resume = a.resume;
  TrainResult r = TrainExtractor(config, store, diag, full, seed, runtime);
  SaveModel(r.model, a.out);
  if (!a.metrics.empty()) {
    EnsembleResult e;
    e.per_seed.push_back(r.metrics);
    e.average = AverageMetrics(e.per_seed);
    WriteMetricsCsv(e, a.metrics);
  }
  for (const IterationRecord &rec : r.metrics.records)
    std::cout << "iteration " << rec.iteration << " aux " << std::setprecision(12)
              << rec.aux << '\n';
  return kExitOk;
}

// ---- extract ---------------------------------------------------------------

struct ExtractArgs {
  std::string model, feats, out;
  UbmArgs ubm;
  int top_k = kDefaultTopK;
  double prune = kDefaultPrune;
  int workers = 1;
  size_t batch_size = 64;
};

void AddExtract(CLI::App &app, ExtractArgs &a) {
  app.add_option("--model", a.model, "Total variability model")
      ->required()->check(CLI::ExistingFile);
  app.add_option("--feats", a.feats, "Feature list")
      ->required()->check(CLI::ExistingFile);
  AddUbmOptions(app, a.ubm);
  AddAlignmentOptions(app, a.top_k, a.prune);
  AddDataflowOptions(app, a.workers, a.batch_size);
  app.add_option("--out", a.out, "Output embeddings (matrix + .ids)")
      ->required();
}

int RunExtract(const ExtractArgs &a) {
  TvModel model = LoadModel(a.model);
  ScpFeatureStore store(a.feats);
  GmmDiag diag = GmmDiagFromMatrix(ReadMatrix(a.ubm.diag));
  GmmFull full = GmmFullFromMatrix(ReadMatrix(a.ubm.full));
  Embeddings e = ExtractCorpus(model, store, diag, full, a.top_k, a.prune,
                               MakeDataflow(a.workers, a.batch_size));
  WriteEmbeddings(e, a.out);
  return kExitOk;
}

// ---- backend-train ---------------------------------------------------------

struct BackendArgs {
  bool whiten = false;
  int lda_dim = 0;
  std::string scoring = "plda";
  int plda_iterations = 10;
};

void AddBackendOptions(CLI::App &app, BackendArgs &b) {
  app.add_flag("--whiten", b.whiten,
               "Whiten before length normalization (use when training "
               "without minimum divergence)");
  app.add_option("--lda-dim", b.lda_dim, "LDA output dimension (0: no LDA)")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--scoring", b.scoring, "cosine or plda")
      ->capture_default_str()->check(CLI::IsMember({"cosine", "plda"}));
  app.add_option("--plda-iterations", b.plda_iterations, "PLDA EM iterations")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
}

BackendConfig MakeBackendConfig(const BackendArgs &b) {
  BackendConfig c;
  c.whiten = b.whiten;
  c.lda_dim = b.lda_dim;
  c.scoring = ParseScoring(b.scoring);
  c.plda_iterations = b.plda_iterations;
  return c;
}

struct BackendTrainArgs {
  std::string embeddings, utt2spk, out;
  BackendArgs backend;
  int max_speakers = 0;
};

void AddBackendTrain(CLI::App &app, BackendTrainArgs &a) {
  app.add_option("--embeddings", a.embeddings, "Training embeddings")
      ->required()->check(CLI::ExistingFile);
  app.add_option("--utt2spk", a.utt2spk, "Utterance to speaker map")
      ->required()->check(CLI::ExistingFile);
  app.add_option("--out", a.out, "Output back-end model (JSON)")->required();
  AddBackendOptions(app, a.backend);
  app.add_option("--max-speakers", a.max_speakers,
                 "Train on the first N speakers only (0: all)")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
}

int RunBackendTrain(const BackendTrainArgs &a) {
  Embeddings e = ReadEmbeddings(a.embeddings);
  std::vector<std::string> speakers = ReadUtt2Spk(a.utt2spk, e.ids);
  if (a.max_speakers > 0) {
    std::set<std::string> kept;
    std::vector<Eigen::Index> rows;
    std::vector<std::string> kept_speakers;
    for (size_t i = 0; i < speakers.size(); ++i) {
      if (!kept.count(speakers[i]) &&
          kept.size() >= static_cast<size_t>(a.max_speakers))
        continue;
      kept.insert(speakers[i]);
      rows.push_back(static_cast<Eigen::Index>(i));
      kept_speakers.push_back(speakers[i]);
    }
    Matrix subset(rows.size(), e.vectors.cols());
    for (size_t i = 0; i < rows.size(); ++i) subset.row(i) = e.vectors.row(rows[i]);
    e.vectors = std::move(subset);
    speakers = std::move(kept_speakers);
  }
  Backend be = Backend::Train(e.vectors, IndexLabels(speakers),
                              MakeBackendConfig(a.backend));
  be.Save(a.out);
  return kExitOk;
}

// ---- score -----------------------------------------------------------------

struct ScoreArgs {
  std::string backend, embeddings, trials, out;
};

void AddScore(CLI::App &app, ScoreArgs &a) {
  app.add_option("--backend", a.backend, "Back-end model")
      ->required()->check(CLI::ExistingFile);
  app.add_option("--embeddings", a.embeddings,
                 "Embeddings holding every enrol and test id")
      ->required()->check(CLI::ExistingFile);
  app.add_option("--trials", a.trials, "Trial list")
      ->required()->check(CLI::ExistingFile);
  app.add_option("--out", a.out, "Output scores (enrol test score)")
      ->required();
}

int RunScore(const ScoreArgs &a) {
  Backend be = Backend::Load(a.backend);
  Embeddings e = ReadEmbeddings(a.embeddings);
  std::vector<Trial> trials = ReadTrials(a.trials);
  std::vector<double> scores = ScoreTrials(be, e, trials);
  std::ofstream out(a.out);
  if (!out) throw DataError("cannot write " + a.out);
  out << std::setprecision(10);
  for (size_t i = 0; i < trials.size(); ++i)
    out << trials[i].enrol << ' ' << trials[i].test << ' ' << scores[i] << '\n';
  if (!out) throw DataError("write to " + a.out + " failed");
  return kExitOk;
}

// ---- eer -------------------------------------------------------------------

struct EerArgs {
  std::string scores, trials, det_csv;
};

void AddEer(CLI::App &app, EerArgs &a) {
  app.add_option("--scores", a.scores, "Scores (enrol test score)")
      ->required()->check(CLI::ExistingFile);
  app.add_option("--trials", a.trials, "Trial list with target labels")
      ->required()->check(CLI::ExistingFile);
  app.add_option("--det-csv", a.det_csv, "Write DET points here");
}

int RunEer(const EerArgs &a) {
  std::map<std::pair<std::string, std::string>, bool> labels;
  for (const Trial &t : ReadTrials(a.trials)) labels[{t.enrol, t.test}] = t.target;
  std::ifstream in(a.scores);
  if (!in) throw DataError("cannot open " + a.scores);
  std::vector<double> scores;
  std::vector<bool> target;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string enrol, test, extra;
    double s;
    if (!(ss >> enrol)) continue;
    if (!(ss >> test >> s) || (ss >> extra))
      throw DataError(a.scores + ":" + std::to_string(lineno) +
                      ": expected 'enrol test score'");
    auto it = labels.find({enrol, test});
    if (it == labels.end())
      throw DataError(a.scores + ":" + std::to_string(lineno) +
                      ": trial not in the trial list");
    scores.push_back(s);
    target.push_back(it->second);
  }
  EerResult r = ComputeEer(scores, target);
  if (!a.det_csv.empty()) WriteDetCsv(r, a.det_csv);
  std::cout << "EER " << std::setprecision(6) << r.eer << "% at threshold "
            << r.threshold << '\n';
  return kExitOk;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  SynthSpec spec;
  std::string formulation = "augmented";
  std::string out_dir;
};

void AddSynth(CLI::App &app, SynthArgs &a) {
  SynthSpec &s = a.spec;
  app.add_option("--out-dir", a.out_dir, "Output directory")->required();
  app.add_option("--components", s.num_components, "Generator Gaussians")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--feat-dim", s.feat_dim, "Feature dimension")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--latent-dim", s.latent_dim, "Latent dimension")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--speakers", s.speakers, "Number of speakers")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--utts-per-speaker", s.utts_per_speaker,
                 "Utterances per speaker")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--min-frames", s.min_frames, "Shortest utterance")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--max-frames", s.max_frames, "Longest utterance")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--seed", s.seed, "Random seed")->capture_default_str();
  app.add_option("--formulation", a.formulation, "standard or augmented")
      ->capture_default_str()->check(CLI::IsMember({"standard", "augmented"}));
  app.add_option("--within-noise", s.within_noise,
                 "Std. dev. of the per-utterance latent jitter")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--prior-offset", s.prior_offset, "Prior offset p")
      ->capture_default_str();
}

int RunSynth(SynthArgs a) {
  a.spec.formulation = ParseFormulation(a.formulation);
  SynthCorpus corpus = SampleCorpus(a.spec);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir / "feats");
  std::ofstream scp(dir / "feats.scp");
  std::vector<std::pair<std::string, std::string>> utt2spk;
  std::vector<std::string> ids;
  for (size_t i = 0; i < corpus.features.Size(); ++i) {
    const std::string &id = corpus.features.Id(i);
    const std::string rel = "feats/" + id + ".mat";
    WriteMatrix(corpus.features.Get(i), Dtype::kF32, (dir / rel).string());
    scp << id << ' ' << rel << '\n';
    utt2spk.emplace_back(id, corpus.speakers[i]);
    ids.push_back(id);
  }
  if (!scp) throw DataError("cannot write " + (dir / "feats.scp").string());
  WriteKeyValueFile(utt2spk, (dir / "utt2spk").string());
  WriteTrials(AllPairsTrials(ids, corpus.speakers), (dir / "trials").string());
  SaveModel(corpus.truth, (dir / "truth.tvm").string());
  WriteMatrix(GmmFullToMatrix(corpus.truth_ubm), Dtype::kF64,
              (dir / "truth-ubm.mat").string());
  return kExitOk;
}

// ---- ensemble --------------------------------------------------------------

struct EnsembleArgs {
  std::string config, feats, out, seeds, checkpoint_root;
  UbmArgs ubm;
  std::string eval_feats, eval_trials, backend_feats, backend_utt2spk;
  BackendArgs backend;
  int eval_interval = 1;
  int workers = 0;
};

void AddEnsemble(CLI::App &app, EnsembleArgs &a) {
  app.add_option("--config", a.config, "Training configuration")
      ->required()->check(CLI::ExistingFile);
  app.add_option("--feats", a.feats, "Training feature list")
      ->required()->check(CLI::ExistingFile);
  AddUbmOptions(app, a.ubm);
  app.add_option("--out", a.out, "Metrics CSV")->required();
  app.add_option("--seeds", a.seeds,
                 "Comma-separated seeds (default: the config's seeds)");
  app.add_option("--workers", a.workers, "Override the config's workers")
      ->check(CLI::PositiveNumber);
  app.add_option("--checkpoint-root", a.checkpoint_root,
                 "Per-seed checkpoint directories go here");
  app.add_option("--eval-feats", a.eval_feats, "Evaluation feature list")
      ->check(CLI::ExistingFile);
  app.add_option("--eval-trials", a.eval_trials, "Evaluation trials")
      ->check(CLI::ExistingFile);
  app.add_option("--backend-feats", a.backend_feats,
                 "Back-end training feature list")
      ->check(CLI::ExistingFile);
  app.add_option("--backend-utt2spk", a.backend_utt2spk,
                 "Speakers of the back-end training utterances")
      ->check(CLI::ExistingFile);
  app.add_option("--eval-interval", a.eval_interval,
                 "Evaluate every N iterations (0: last only)")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  AddBackendOptions(app, a.backend);
}

int RunEnsemble(const EnsembleArgs &a) {
  TrainConfig config = ReadTrainConfig(a.config);
  if (a.workers > 0) config.workers = a.workers;
  if (!a.seeds.empty()) {
    config.seeds = ParseTrainConfig("seeds = " + a.seeds).seeds;
  }
  const int given = !a.eval_feats.empty() + !a.eval_trials.empty() +
                    !a.backend_feats.empty() + !a.backend_utt2spk.empty();
  if (given != 0 && given != 4)
    throw std::invalid_argument(
        "--eval-feats, --eval-trials, --backend-feats and --backend-utt2spk "
        "go together");
  ScpFeatureStore store(a.feats);
  GmmDiag diag = GmmDiagFromMatrix(ReadMatrix(a.ubm.diag));
  GmmFull full = GmmFullFromMatrix(ReadMatrix(a.ubm.full));
  std::optional<ScpFeatureStore> eval_store, backend_store;
  EvalProtocol protocol;
  if (given == 4) {
    eval_store.emplace(a.eval_feats);
    backend_store.emplace(a.backend_feats);
    protocol.eval = &*eval_store;
    protocol.backend_train = &*backend_store;
    std::vector<std::string> ids;
    for (size_t i = 0; i < backend_store->Size(); ++i)
      ids.push_back(backend_store->Id(i));
    protocol.backend_speakers = ReadUtt2Spk(a.backend_utt2spk, ids);
    protocol.trials = ReadTrials(a.eval_trials);
    protocol.backend = MakeBackendConfig(a.backend);
  }
  EnsembleResult r = EnsembleRun(config, store, diag, full,
                                 given == 4 ? &protocol : nullptr,
                                 a.eval_interval, a.checkpoint_root);
  WriteMetricsCsv(r, a.out);
  if (!r.complete) {
    for (const std::string &f : r.failures)
      std::cerr << "seed failed: " << f << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace

int RunCli(int argc, const char *const *argv) {
  CLI::App app{"ivtk: total variability (i-vector) training toolkit"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress messages");

  UbmTrainArgs ubm_train;
  AlignArgs align;
  TvTrainArgs tv_train;
  ExtractArgs extract;
  BackendTrainArgs backend_train;
  ScoreArgs score;
  EerArgs eer;
  SynthArgs synth;
  EnsembleArgs ensemble;
  std::vector<std::pair<CLI::App *, std::function<int()>>> commands;
  CLI::App *sub;

  sub = app.add_subcommand("ubm-train", "Train diagonal and full-covariance UBMs");
  AddUbmTrain(*sub, ubm_train);
  commands.emplace_back(sub, [&] { return RunUbmTrain(ubm_train); });
  sub = app.add_subcommand("align", "Sparse frame alignment against a UBM");
  AddAlign(*sub, align);
  commands.emplace_back(sub, [&] { return RunAlign(align); });
  sub = app.add_subcommand("tv-train", "Train a total variability model");
  AddTvTrain(*sub, tv_train);
  CLI::App *tv_sub = sub;
  commands.emplace_back(sub, [&] { return RunTvTrain(tv_train, *tv_sub); });
  sub = app.add_subcommand("extract", "Extract i-vectors");
  AddExtract(*sub, extract);
  commands.emplace_back(sub, [&] { return RunExtract(extract); });
  sub = app.add_subcommand("backend-train", "Train the scoring back-end");
  AddBackendTrain(*sub, backend_train);
  commands.emplace_back(sub, [&] { return RunBackendTrain(backend_train); });
  sub = app.add_subcommand("score", "Score a trial list");
  AddScore(*sub, score);
  commands.emplace_back(sub, [&] { return RunScore(score); });
  sub = app.add_subcommand("eer", "Equal error rate of scored trials");
  AddEer(*sub, eer);
  commands.emplace_back(sub, [&] { return RunEer(eer); });
  sub = app.add_subcommand("synth", "Sample a synthetic corpus");
  AddSynth(*sub, synth);
  commands.emplace_back(sub, [&] { return RunSynth(synth); });
  sub = app.add_subcommand("ensemble",
                           "Train one model per seed and report metrics");
  AddEnsemble(*sub, ensemble);
  commands.emplace_back(sub, [&] { return RunEnsemble(ensemble); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (verbose) SetLogLevel(LogLevel::kInfo);
  try {
    for (auto &[cmd, run] : commands)
      if (cmd->parsed()) return run();
  } catch (const NumericError &e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument &e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

int RunCli(const std::vector<std::string> &args) {
  std::vector<const char *> argv;
  for (const std::string &a : args) argv.push_back(a.c_str());
  return RunCli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace ivtk
