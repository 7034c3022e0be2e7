// ivtk/backend.h

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

#ifndef IVTK_BACKEND_H_
#define IVTK_BACKEND_H_

#include <optional>
#include <string>
#include <vector>

#include "ivtk/base.h"

namespace ivtk {

// Embeddings are stored one per row throughout this module.

// Center, optionally whiten, then length-normalize.
struct GaussianizerChain {
  Vector mean;
  std::optional<Matrix> whitener;  // applied as W (x - mean)

  // Output before length normalization.
  Vector PreNormalize(const Vector &x) const;
  Vector Apply(const Vector &x) const;
  Matrix ApplyRows(const Matrix &x) const;
};

// Needs at least two rows.  The whitener is Lambda^-1/2 Q' of the sample
// covariance; eigenvalues below 1e-10 times the largest are floored with a
// warning.
GaussianizerChain FitChain(const Matrix &train, bool whiten);

// Throws std::invalid_argument for a zero vector.
Vector LengthNormalize(const Vector &x);

struct LdaModel {
  Matrix projection;  // D x d; y = projection' x

  int OutputDim() const { return static_cast<int>(projection.cols()); }
  Vector Project(const Vector &x) const { return projection.transpose() * x; }
};

// Solves S_b v = lambda S_w v and keeps the d leading directions, scaled so
// that v' S_w v = 1.  The within-class scatter is eigenvalue-floored at 1e-6
// times its mean eigenvalue (or of the total scatter if it vanishes).
LdaModel FitLda(const Matrix &x, const std::vector<int> &labels, int output_dim);

// Two-covariance model: x = mean + y + e with y ~ N(0, between) shared by
// all samples of a class and e ~ N(0, within) per sample.
struct PldaModel {
  Vector mean;
  Matrix between;
  Matrix within;
};

struct PldaOptions {
  int iterations = 10;
};

// EM estimate of the between- and within-class covariances, started from the
// scatter matrices of the class means and of the residuals.  If `trace` is
// given it receives the log-likelihood of the training data before each
// iteration and after the last one.
PldaModel FitPlda(const Matrix &x, const std::vector<int> &labels,
                  const PldaOptions &opts = PldaOptions(),
                  std::vector<double> *trace = nullptr);

// Log-likelihood of the data under the model, classes marginalized.
double PldaLogLikelihood(const PldaModel &model, const Matrix &x,
                         const std::vector<int> &labels);

// Precomputed scoring matrices: llr = a'Qa/2 + b'Qb/2 + a'Pb + k for
// centered a, b.
class PldaScorer {
 public:
  explicit PldaScorer(const PldaModel &model);
  double Score(const Vector &enrol, const Vector &test) const;

 private:
  Vector mean_;
  Matrix Q_, P_;
  double constant_ = 0.0;
};

// log p(a, b | same class) - log p(a, b | different classes).
double ScorePlda(const PldaModel &model, const Vector &enrol, const Vector &test);

double ScoreCosine(const Vector &a, const Vector &b);

struct DetPoint {
  double threshold;
  double far;  // fraction of nontarget scores >= threshold
  double frr;  // fraction of target scores < threshold
};

struct EerResult {
  double eer = 0.0;        // percent
  double threshold = 0.0;
  std::vector<DetPoint> det;  // ROC vertices by increasing threshold
};

// Trials are accepted when score >= threshold.  The EER is read off the
// piecewise-linear curve through the operating points at each distinct score
// (plus the two trivial end points); if several points lie exactly on the
// diagonal the highest threshold is reported.
EerResult ComputeEer(const std::vector<double> &scores,
                     const std::vector<bool> &is_target);
void WriteDetCsv(const EerResult &result, const std::string &path);

enum class Scoring { kCosine, kPlda };
std::string ScoringName(Scoring s);
Scoring ParseScoring(const std::string &name);

struct BackendConfig {
  bool whiten = false;
  int lda_dim = 0;  // 0 disables LDA
  Scoring scoring = Scoring::kPlda;
  int plda_iterations = 10;
};

class Backend {
 public:
  Backend() = default;
  static Backend Train(const Matrix &x, const std::vector<int> &labels,
                       const BackendConfig &config);

  // Chain, then LDA when present.
  Vector Transform(const Vector &x) const;
  Matrix TransformRows(const Matrix &x) const;
  // Scores two transformed embeddings.
  double ScoreTransformed(const Vector &a, const Vector &b) const;
  double Score(const Vector &a, const Vector &b) const {
    return ScoreTransformed(Transform(a), Transform(b));
  }

  const BackendConfig &config() const { return config_; }
  const GaussianizerChain &chain() const { return chain_; }

  void Save(const std::string &path) const;
  static Backend Load(const std::string &path);

 private:
  void Prepare();

  BackendConfig config_;
  GaussianizerChain chain_;
  std::optional<LdaModel> lda_;
  std::optional<PldaModel> plda_;
  std::optional<PldaScorer> scorer_;
};

// Maps string labels to dense integer ids in order of first appearance.
std::vector<int> IndexLabels(const std::vector<std::string> &labels);

}  // namespace ivtk

#endif  // IVTK_BACKEND_H_
