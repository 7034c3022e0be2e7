// src/pipeline.cc

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

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ivtk/pipeline.h"

namespace ivtk {

namespace fs = std::filesystem;

namespace {

std::string Trim(const std::string &s) {
  const char *ws = " \t\r\n";
  size_t b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <class Int>
Int ParseInt(const std::string &key, const std::string &value) {
  Int out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw DataError("config: bad integer for " + key + ": '" + value + "'");
  return out;
}

double ParseDouble(const std::string &key, const std::string &value) {
  char *end = nullptr;
  double out = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size())
    throw DataError("config: bad number for " + key + ": '" + value + "'");
  return out;
}

bool ParseBool(const std::string &key, const std::string &value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw DataError("config: bad boolean for " + key + ": '" + value + "'");
}

std::string FormatDouble(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

std::string ModelPath(const std::string &dir, int iteration) {
  return (fs::path(dir) / ("iter-" + std::to_string(iteration) + ".tvm")).string();
}

struct CheckpointState {
  int iteration = 0;
  uint64_t config_hash = 0;
  bool alignment_stale = true;
  std::vector<IterationRecord> records;
};

void WriteState(const CheckpointState &st, const std::string &dir) {
  const fs::path path = fs::path(dir) / "state.txt";
  const fs::path tmp = fs::path(dir) / "state.txt.tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << "iteration " << st.iteration << '\n'
        << "config_hash " << st.config_hash << '\n'
        << "alignment_stale " << (st.alignment_stale ? 1 : 0) << '\n';
    for (const IterationRecord &r : st.records)
      out << "record " << r.iteration << ' ' << FormatDouble(r.aux) << ' '
          << FormatDouble(r.eer) << ' ' << FormatDouble(r.wall_seconds) << '\n';
    if (!out) throw DataError("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, path);
}

std::optional<CheckpointState> ReadState(const std::string &dir) {
  const fs::path path = fs::path(dir) / "state.txt";
  if (!fs::exists(path)) return std::nullopt;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  CheckpointState st;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    std::vector<std::string> fields;
    for (std::string f; ss >> f;) fields.push_back(f);
    auto need = [&](size_t n) {
      if (fields.size() != n)
        throw DataError(path.string() + ": malformed line '" + line + "'");
    };
    if (key == "iteration") {
      need(1);
      st.iteration = ParseInt<int>(key, fields[0]);
    } else if (key == "config_hash") {
      need(1);
      st.config_hash = ParseInt<uint64_t>(key, fields[0]);
    } else if (key == "alignment_stale") {
      need(1);
      st.alignment_stale = ParseBool(key, fields[0]);
    } else if (key == "record") {
      need(4);
      st.records.push_back({ParseInt<int>(key, fields[0]),
                            ParseDouble(key, fields[1]),
                            ParseDouble(key, fields[2]),
                            ParseDouble(key, fields[3])});
    } else {
      throw DataError(path.string() + ": unknown key " + key);
    }
  }
  return st;
}

}  // namespace

void TrainConfig::Check() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (realign_interval < 0)
    throw std::invalid_argument("realign_interval must be >= 0");
  if (seeds.empty()) throw std::invalid_argument("seeds must not be empty");
  if (latent_dim < 0) throw std::invalid_argument("latent_dim must be >= 0");
  if (formulation == Formulation::kAugmented && latent_dim < 2)
    throw std::invalid_argument("the augmented formulation needs latent_dim >= 2");
  if (formulation == Formulation::kAugmented && prior_offset == 0.0)
    throw std::invalid_argument("prior_offset must be nonzero");
  if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  if (!(prune >= 0.0 && prune < 1.0))
    throw std::invalid_argument("prune must be in [0, 1)");
  if (batch_size_utts < 1)
    throw std::invalid_argument("batch_size_utts must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (mean_update && formulation != Formulation::kStandard)
    throw std::invalid_argument(
        "mean_update applies to the standard formulation only");
}

DataflowOptions TrainConfig::Dataflow() const {
  DataflowOptions opts;
  opts.batch_size = batch_size_utts;
  opts.workers = workers;
  opts.deterministic = deterministic;
  return opts;
}

TrainConfig ParseTrainConfig(const std::string &text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = Trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("config line " + std::to_string(lineno) +
                      ": expected key = value");
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (!seen.insert(key).second)
      throw DataError("config: duplicate key " + key);
    if (key == "formulation") {
      try {
        c.formulation = ParseFormulation(value);
      } catch (const std::invalid_argument &e) {
        throw DataError(std::string("config: ") + e.what());
      }
    } else if (key == "latent_dim") {
      c.latent_dim = ParseInt<int>(key, value);
    } else if (key == "iterations") {
      c.iterations = ParseInt<int>(key, value);
    } else if (key == "min_div") {
      c.min_div = ParseBool(key, value);
    } else if (key == "sigma_update") {
      c.sigma_update = ParseBool(key, value);
    } else if (key == "realign_interval") {
      c.realign_interval = ParseInt<int>(key, value);
    } else if (key == "top_k") {
      c.top_k = ParseInt<int>(key, value);
    } else if (key == "prune") {
      c.prune = ParseDouble(key, value);
    } else if (key == "prior_offset") {
      c.prior_offset = ParseDouble(key, value);
    } else if (key == "seeds") {
      c.seeds.clear();
      std::stringstream ss(value);
      for (std::string tok; std::getline(ss, tok, ',');)
        c.seeds.push_back(ParseInt<uint64_t>(key, Trim(tok)));
    } else if (key == "batch_size_utts") {
      c.batch_size_utts = ParseInt<size_t>(key, value);
    } else if (key == "workers") {
      c.workers = ParseInt<int>(key, value);
    } else if (key == "deterministic") {
      c.deterministic = ParseBool(key, value);
    } else if (key == "mean_update") {
      c.mean_update = ParseBool(key, value);
    } else {
      throw DataError("config: unknown key " + key);
    }
  }
  try {
    c.Check();
  } catch (const std::invalid_argument &e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return c;
}

TrainConfig ReadTrainConfig(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseTrainConfig(ss.str());
}

std::string FormatTrainConfig(const TrainConfig &c) {
  std::ostringstream out;
  out << "formulation = " << FormulationName(c.formulation) << '\n'
      << "latent_dim = " << c.latent_dim << '\n'
      << "iterations = " << c.iterations << '\n'
      << "min_div = " << (c.min_div ? "true" : "false") << '\n'
      << "sigma_update = " << (c.sigma_update ? "true" : "false") << '\n'
      << "realign_interval = " << c.realign_interval << '\n'
      << "top_k = " << c.top_k << '\n'
      << "prune = " << FormatDouble(c.prune) << '\n'
      << "prior_offset = " << FormatDouble(c.prior_offset) << '\n'
      << "seeds = ";
  for (size_t i = 0; i < c.seeds.size(); ++i)
    out << (i ? "," : "") << c.seeds[i];
  out << '\n'
      << "batch_size_utts = " << c.batch_size_utts << '\n'
      << "workers = " << c.workers << '\n'
      << "deterministic = " << (c.deterministic ? "true" : "false") << '\n'
      << "mean_update = " << (c.mean_update ? "true" : "false") << '\n';
  return out.str();
}

uint64_t ConfigHash(const TrainConfig &config, uint64_t seed) {
  TrainConfig c = config;
  c.workers = 1;
  c.seeds = {seed};
  const std::string text = FormatTrainConfig(c);
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

RunMetrics AverageMetrics(const std::vector<RunMetrics> &runs) {
  if (runs.empty()) throw std::invalid_argument("AverageMetrics: no runs");
  RunMetrics avg;
  avg.seed = "avg";
  const size_t n = runs[0].records.size();
  for (const RunMetrics &r : runs)
    if (r.records.size() != n)
      throw std::invalid_argument("AverageMetrics: runs differ in length");
  for (size_t i = 0; i < n; ++i) {
    IterationRecord rec;
    rec.iteration = runs[0].records[i].iteration;
    rec.aux = rec.eer = rec.wall_seconds = 0.0;
    for (const RunMetrics &r : runs) {
      if (r.records[i].iteration != rec.iteration)
        throw std::invalid_argument("AverageMetrics: iteration mismatch");
      rec.aux += r.records[i].aux;
      rec.eer += r.records[i].eer;
      rec.wall_seconds += r.records[i].wall_seconds;
    }
    rec.aux /= runs.size();
    rec.eer /= runs.size();
    rec.wall_seconds /= runs.size();
    avg.records.push_back(rec);
  }
  return avg;
}

std::vector<SparseAlignment> AlignCorpus(const FeatureStore &store,
                                         const GmmDiag &ubm_diag,
                                         const GmmFull &ubm_full, int top_k,
                                         double prune,
                                         const DataflowOptions &opts,
                                         DataflowStats *stats) {
  using Loaded = std::pair<size_t, std::vector<Matrix>>;
  using Computed = std::pair<size_t, std::vector<SparseAlignment>>;
  std::vector<SparseAlignment> out(store.Size());
  DataflowStats st = RunDataflow<Loaded, Computed>(
      store.Size(), opts,
      [&](size_t begin, size_t end) {
        Loaded l{begin, {}};
        for (size_t i = begin; i < end; ++i) l.second.push_back(store.Load(i));
        return l;
      },
      [&](Loaded &&l) {
        Computed c{l.first, {}};
        for (const Matrix &feats : l.second)
          c.second.push_back(AlignFrames(ubm_diag, ubm_full, feats, top_k, prune));
        return c;
      },
      [&](size_t, Computed &&c) {
        for (size_t i = 0; i < c.second.size(); ++i)
          out[c.first + i] = std::move(c.second[i]);
      });
  if (stats) *stats = st;
  return out;
}

EmAccumulators EStepCorpus(const TvModel &model, const FeatureStore &store,
                           const std::vector<SparseAlignment> &alignments,
                           const DataflowOptions &opts, DataflowStats *stats) {
  if (alignments.size() != store.Size())
    throw std::invalid_argument("EStepCorpus: alignment count mismatch");
  const int C = model.NumComponents();
  const Matrix *center = CenteringMeans(model);
  TvPosteriorEngine engine(model);
  EmAccumulators total(C, model.FeatDim(), model.LatentDim());
  DataflowStats st = RunDataflow<std::vector<BaumWelchStats>, EmAccumulators>(
      store.Size(), opts,
      [&](size_t begin, size_t end) {
        std::vector<BaumWelchStats> batch;
        for (size_t i = begin; i < end; ++i)
          batch.push_back(
              AccumulateStats(store.Load(i), alignments[i], C, center, true));
        return batch;
      },
      [&](std::vector<BaumWelchStats> &&batch) {
        EmAccumulators partial(C, model.FeatDim(), model.LatentDim());
        for (const BaumWelchStats &s : batch)
          AccumulateUtterance(engine, s, &partial);
        return partial;
      },
      [&](size_t, EmAccumulators &&partial) { total.Add(partial); });
  if (stats) *stats = st;
  return total;
}

std::pair<GmmDiag, GmmFull> AlignmentUbms(const TvModel &model,
                                          const GmmDiag &base_diag,
                                          const GmmFull &base_full) {
  if (base_diag.NumComponents() != model.NumComponents() ||
      base_full.NumComponents() != model.NumComponents() ||
      base_diag.Dim() != model.FeatDim() || base_full.Dim() != model.FeatDim())
    throw DataError("UBM and model dimensions disagree");
  GmmDiag diag = base_diag;
  GmmFull full = base_full;
  diag.SetMeans(base_diag.means() + (model.ubm_means - base_full.means()));
  full.SetMeans(model.ubm_means);
  return {std::move(diag), std::move(full)};
}

TrainResult TrainExtractor(const TrainConfig &config, const FeatureStore &corpus,
                           const GmmDiag &ubm_diag, const GmmFull &ubm_full,
                           uint64_t seed, const TrainRuntime &runtime) {
  config.Check();
  if (corpus.Size() == 0) throw DataError("training corpus is empty");
  if (ubm_diag.NumComponents() != ubm_full.NumComponents() ||
      ubm_diag.Dim() != ubm_full.Dim() || ubm_full.Dim() != corpus.FeatDim())
    throw DataError("UBMs and features have inconsistent dimensions");
  if (config.mean_update && config.sigma_update)
    IVTK_WARN << "mean_update combined with sigma_update is known to train "
                 "poorly";
  const DataflowOptions opts = config.Dataflow();
  const std::string &dir = runtime.checkpoint_dir;
  const uint64_t hash = ConfigHash(config, seed);

  TrainResult result;
  TvModel &model = result.model;
  result.metrics.seed = std::to_string(seed);
  std::vector<SparseAlignment> alignments;
  bool stale = true;
  int start = 1;
  double elapsed = 0.0;

  std::optional<CheckpointState> state;
  if (!dir.empty()) {
    fs::create_directories(dir);
    if (runtime.resume) state = ReadState(dir);
  }
  if (state) {
    if (state->config_hash != hash)
      throw DataError("checkpoint in " + dir +
                      " was written with a different configuration");
    model = LoadModel(ModelPath(dir, state->iteration));
    start = state->iteration + 1;
    stale = state->alignment_stale;
    result.metrics.records = state->records;
    if (!state->records.empty()) elapsed = state->records.back().wall_seconds;
    if (!stale) {
      AlignmentArchive archive =
          ReadAlignment((fs::path(dir) / "alignment.aln").string());
      bool match = archive.ids.size() == corpus.Size();
      for (size_t i = 0; match && i < corpus.Size(); ++i)
        match = archive.ids[i] == corpus.Id(i);
      if (!match)
        throw DataError("cached alignment does not match the training corpus");
      alignments = std::move(archive.alignments);
    }
    IVTK_LOG << "Resuming from iteration " << state->iteration;
  } else {
    model = InitTvModel(ubm_full, config.latent_dim, config.formulation, seed,
                        config.prior_offset);
  }
  if (model.NumComponents() != ubm_full.NumComponents() ||
      model.FeatDim() != ubm_full.Dim() || model.LatentDim() != config.latent_dim ||
      model.formulation != config.formulation)
    throw DataError("model does not match the configuration and UBMs");

  for (int iter = start; iter <= config.iterations; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    if (stale) {
      auto [diag, full] = AlignmentUbms(model, ubm_diag, ubm_full);
      alignments =
          AlignCorpus(corpus, diag, full, config.top_k, config.prune, opts);
      stale = false;
      if (!dir.empty()) {
        AlignmentArchive archive;
        archive.top_k = static_cast<uint32_t>(config.top_k);
        for (size_t i = 0; i < corpus.Size(); ++i)
          archive.ids.push_back(corpus.Id(i));
        archive.alignments = alignments;
        WriteAlignment(archive, (fs::path(dir) / "alignment.aln").string());
      }
    }
    EmAccumulators acc = EStepCorpus(model, corpus, alignments, opts);
    IterationRecord rec;
    rec.iteration = iter;
    rec.aux = AuxFromAccumulators(TvPosteriorEngine(model), acc);

    std::vector<Matrix> new_T = UpdateT(acc, model.T);
    if (config.sigma_update) model.sigma = UpdateSigma(acc, new_T, model.sigma);
    model.T = std::move(new_T);
    if (config.min_div) {
      const Vector h = acc.h();
      MinDivTransforms tr = ComputeMinDiv(acc, config.formulation);
      if (config.mean_update) UpdateMeanStandard(h, &model);
      ApplyMinDiv(tr, h, &model);
    }
    if (config.realign_interval > 0 && iter % config.realign_interval == 0 &&
        iter != config.iterations) {
      if (model.formulation == Formulation::kAugmented)
        UpdateUbmMeansAugmented(&model);
      else
        model.ubm_means = model.bias;
      stale = true;
    }
    elapsed += Seconds(t0);
    rec.wall_seconds = elapsed;
    if (runtime.evaluate &&
        ((runtime.eval_interval > 0 && iter % runtime.eval_interval == 0) ||
         iter == config.iterations))
      rec.eer = runtime.evaluate(model, iter);
    result.metrics.records.push_back(rec);
    IVTK_LOG << "Iteration " << iter << ": log-likelihood " << rec.aux
             << " (" << rec.aux / acc.N.sum() << " per frame)";

    if (!dir.empty()) {
      SaveModel(model, ModelPath(dir, iter));
      WriteState({iter, hash, stale, result.metrics.records}, dir);
      std::error_code ec;
      if (iter > 1) fs::remove(ModelPath(dir, iter - 1), ec);
    }
    if (runtime.stop_after > 0 && iter == runtime.stop_after) break;
  }
  return result;
}

Embeddings ExtractCorpus(const TvModel &model, const FeatureStore &corpus,
                         const GmmDiag &ubm_diag, const GmmFull &ubm_full,
                         int top_k, double prune, const DataflowOptions &opts) {
  model.Check();
  if (corpus.Size() > 0 && corpus.FeatDim() != model.FeatDim())
    throw DataError("feature dimension does not match the model");
  auto [diag, full] = AlignmentUbms(model, ubm_diag, ubm_full);
  const Matrix *center = CenteringMeans(model);
  TvPosteriorEngine engine(model);
  Embeddings out;
  out.vectors.resize(corpus.Size(), model.LatentDim());
  for (size_t i = 0; i < corpus.Size(); ++i) out.ids.push_back(corpus.Id(i));
  using Loaded = std::pair<size_t, std::vector<Matrix>>;
  using Computed = std::pair<size_t, std::vector<Vector>>;
  RunDataflow<Loaded, Computed>(
      corpus.Size(), opts,
      [&](size_t begin, size_t end) {
        Loaded l{begin, {}};
        for (size_t i = begin; i < end; ++i) l.second.push_back(corpus.Load(i));
        return l;
      },
      [&](Loaded &&l) {
        Computed c{l.first, {}};
        for (Matrix &feats : l.second) {
          if (feats.rows() == 0) feats.resize(0, model.FeatDim());
          if (feats.cols() != model.FeatDim())
            throw DataError("feature dimension does not match the model");
          SparseAlignment ali = AlignFrames(diag, full, feats, top_k, prune);
          BaumWelchStats stats = AccumulateStats(
              feats, ali, model.NumComponents(), center, false);
          c.second.push_back(engine.Posterior(stats).phi);
        }
        return c;
      },
      [&](size_t, Computed &&c) {
        for (size_t i = 0; i < c.second.size(); ++i)
          out.vectors.row(c.first + i) = c.second[i].transpose();
      });
  return out;
}

void WriteEmbeddings(const Embeddings &e, const std::string &path) {
  if (static_cast<Eigen::Index>(e.ids.size()) != e.vectors.rows())
    throw std::invalid_argument("WriteEmbeddings: ids and rows differ");
  WriteMatrix(e.vectors, Dtype::kF64, path);
  std::ofstream out(path + ".ids");
  if (!out) throw DataError("cannot write " + path + ".ids");
  for (const std::string &id : e.ids) out << id << '\n';
  if (!out) throw DataError("write to " + path + ".ids failed");
}

Embeddings ReadEmbeddings(const std::string &path) {
  Embeddings e;
  e.vectors = ReadMatrix(path);
  std::ifstream in(path + ".ids");
  if (!in) throw DataError("cannot open " + path + ".ids");
  for (std::string line; std::getline(in, line);) {
    line = Trim(line);
    if (!line.empty()) e.ids.push_back(line);
  }
  if (static_cast<Eigen::Index>(e.ids.size()) != e.vectors.rows())
    throw DataError(path + ": number of ids does not match number of rows");
  return e;
}

std::vector<double> ScoreTrials(const Backend &backend, const Embeddings &emb,
                                const std::vector<Trial> &trials) {
  std::unordered_map<std::string, Eigen::Index> index;
  for (size_t i = 0; i < emb.ids.size(); ++i)
    index.emplace(emb.ids[i], static_cast<Eigen::Index>(i));
  auto row = [&](const std::string &id) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("no embedding for " + id);
    return it->second;
  };
  for (const Trial &t : trials) {
    row(t.enrol);
    row(t.test);
  }
  const Matrix transformed = backend.TransformRows(emb.vectors);
  std::vector<double> scores;
  scores.reserve(trials.size());
  for (const Trial &t : trials)
    scores.push_back(backend.ScoreTransformed(
        transformed.row(row(t.enrol)).transpose(),
        transformed.row(row(t.test)).transpose()));
  return scores;
}

double EvaluateEer(const TvModel &model, const EvalProtocol &protocol,
                   const GmmDiag &ubm_diag, const GmmFull &ubm_full,
                   const TrainConfig &config) {
  if (!protocol.backend_train || !protocol.eval)
    throw std::invalid_argument("EvaluateEer: protocol needs two feature sets");
  const DataflowOptions opts = config.Dataflow();
  Embeddings train = ExtractCorpus(model, *protocol.backend_train, ubm_diag,
                                   ubm_full, config.top_k, config.prune, opts);
  Embeddings eval = ExtractCorpus(model, *protocol.eval, ubm_diag, ubm_full,
                                  config.top_k, config.prune, opts);
  Backend backend = Backend::Train(
      train.vectors, IndexLabels(protocol.backend_speakers), protocol.backend);
  std::vector<double> scores = ScoreTrials(backend, eval, protocol.trials);
  std::vector<bool> target;
  for (const Trial &t : protocol.trials) target.push_back(t.target);
  return ComputeEer(scores, target).eer;
}

EnsembleResult EnsembleRun(const TrainConfig &config, const FeatureStore &corpus,
                           const GmmDiag &ubm_diag, const GmmFull &ubm_full,
                           const EvalProtocol *protocol, int eval_interval,
                           const std::string &checkpoint_root) {
  config.Check();
  EnsembleResult result;
  for (uint64_t seed : config.seeds) {
    TrainRuntime runtime;
    runtime.eval_interval = eval_interval;
    if (!checkpoint_root.empty())
      runtime.checkpoint_dir =
          (fs::path(checkpoint_root) / ("seed-" + std::to_string(seed))).string();
    if (protocol)
      runtime.evaluate = [&](const TvModel &m, int) {
        return EvaluateEer(m, *protocol, ubm_diag, ubm_full, config);
      };
    try {
      TrainResult r =
          TrainExtractor(config, corpus, ubm_diag, ubm_full, seed, runtime);
      result.per_seed.push_back(std::move(r.metrics));
    } catch (const std::exception &e) {
      IVTK_WARN << "Seed " << seed << " failed: " << e.what();
      result.complete = false;
      result.failures.push_back(std::to_string(seed) + ": " + e.what());
    }
  }
  if (!result.per_seed.empty()) result.average = AverageMetrics(result.per_seed);
  result.average.seed = result.complete ? "avg" : "avg-incomplete";
  return result;
}

void WriteMetricsCsv(const EnsembleResult &result, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "seed,iteration,aux,eer,wall_seconds\n" << std::setprecision(12);
  auto block = [&](const RunMetrics &m) {
    for (const IterationRecord &r : m.records)
      out << m.seed << ',' << r.iteration << ',' << r.aux << ',' << r.eer << ','
          << r.wall_seconds << '\n';
  };
  for (const RunMetrics &m : result.per_seed) block(m);
  block(result.average);
  if (!out) throw DataError("write to " + path + " failed");
}

}  // namespace ivtk
