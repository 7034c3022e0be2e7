// ivtk/gmm.h

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

#ifndef IVTK_GMM_H_
#define IVTK_GMM_H_

#include <optional>
#include <vector>

#include "ivtk/alignment.h"
#include "ivtk/base.h"
#include "ivtk/corpus.h"

namespace ivtk {

// Gaussian mixture with diagonal covariances.  Used for top-K component
// preselection during alignment.
class GmmDiag {
 public:
  GmmDiag() = default;
  // Throws std::invalid_argument when the weights do not sum to one or a
  // variance is not positive.
  GmmDiag(Vector weights, Matrix means, Matrix variances);

  int NumComponents() const { return static_cast<int>(weights_.size()); }
  int Dim() const { return static_cast<int>(means_.cols()); }
  const Vector &weights() const { return weights_; }
  const Matrix &means() const { return means_; }
  const Matrix &variances() const { return variances_; }

  void SetMeans(const Matrix &means);

  // log w_c + log N(x; m_c, diag(v_c)) for every component.
  Vector LogLikelihoods(const Eigen::Ref<const Vector> &x) const;
  double LogLikelihood(const Eigen::Ref<const Vector> &x) const;

 private:
  void ComputeGconsts();

  Vector weights_;
  Matrix means_;
  Matrix variances_;
  Matrix inv_vars_;
  Vector gconsts_;  // log w_c - 0.5 (F log 2pi + log|V_c| + m' V^-1 m)
  Matrix means_invvars_;
};

// Gaussian mixture with full covariances.  Each covariance is cached as a
// Cholesky factor.
class GmmFull {
 public:
  GmmFull() = default;
  // Throws NumericError when a covariance is not symmetric positive definite.
  GmmFull(Vector weights, Matrix means, std::vector<Matrix> covariances);

  int NumComponents() const { return static_cast<int>(weights_.size()); }
  int Dim() const { return static_cast<int>(means_.cols()); }
  const Vector &weights() const { return weights_; }
  const Matrix &means() const { return means_; }
  const std::vector<Matrix> &covariances() const { return covars_; }

  void SetMeans(const Matrix &means);

  // log w_c + log N(x; m_c, S_c) for component c.
  double ComponentLogLikelihood(int c, const Eigen::Ref<const Vector> &x) const;
  Vector LogLikelihoods(const Eigen::Ref<const Vector> &x) const;
  double LogLikelihood(const Eigen::Ref<const Vector> &x) const;

 private:
  Vector weights_;
  Matrix means_;
  std::vector<Matrix> covars_;
  std::vector<Eigen::LLT<Matrix>> chol_;
  Vector gconsts_;  // log w_c - 0.5 (F log 2pi + log|S_c|)
};

GmmDiag ToDiag(const GmmFull &full);

// Matrix-file encodings of the UBMs, one row per component:
//   diag: [weight, mean(F), variance(F)]
//   full: [weight, mean(F), covariance(F*F) row-major]
Matrix GmmDiagToMatrix(const GmmDiag &gmm);
GmmDiag GmmDiagFromMatrix(const Matrix &m);
Matrix GmmFullToMatrix(const GmmFull &gmm);
GmmFull GmmFullFromMatrix(const Matrix &m);

struct GmmTrainOptions {
  int num_components = 8;
  int iterations = 10;
  uint64_t seed = 0;
  int workers = 1;
  size_t batch_size = 64;
};

// Per-iteration average log-likelihood per frame, measured in the E-step of
// each iteration (i.e. for the parameters entering that iteration).
using LogLikelihoodTrace = std::vector<double>;

// EM for a diagonal-covariance GMM.  Means start at randomly sampled frames,
// variances at the global variance; variances are floored at 1e-5 times the
// mean global variance.  A component whose occupancy drops below one frame
// is re-seeded at a random frame with a warning.
GmmDiag TrainGmmDiag(const FeatureStore &corpus, const GmmTrainOptions &opts,
                     LogLikelihoodTrace *trace = nullptr);

// EM for a full-covariance GMM started from `init`.  Covariance eigenvalues
// are floored at 1e-5 times the component's mean eigenvalue.
GmmFull TrainGmmFull(const FeatureStore &corpus, const GmmDiag &init,
                     const GmmTrainOptions &opts,
                     LogLikelihoodTrace *trace = nullptr);
GmmFull TrainGmmFull(const FeatureStore &corpus, const GmmFull &init,
                     const GmmTrainOptions &opts,
                     LogLikelihoodTrace *trace = nullptr);

constexpr int kDefaultTopK = 20;
constexpr double kDefaultPrune = 0.025;

// Indices of the K components with the largest diagonal-model posteriors,
// ordered by decreasing posterior with ties going to the lower index.
std::vector<uint32_t> SelectTopK(const GmmDiag &ubm_diag,
                                 const Eigen::Ref<const Vector> &frame, int k);

// Sparse frame alignment: diagonal top-K preselection, full-covariance
// posteriors over the selected components, pruning of posteriors below
// `prune` and linear rescaling of the rest.  If every posterior of a frame is
// pruned, the largest one is kept with weight 1.
SparseAlignment AlignFrames(const GmmDiag &ubm_diag, const GmmFull &ubm_full,
                            const Matrix &feats, int top_k = kDefaultTopK,
                            double prune = kDefaultPrune);

// Zeroth, first and second order Baum-Welch statistics of one utterance.
struct BaumWelchStats {
  Vector n;               // C
  Matrix f;               // C x F
  std::vector<Matrix> S;  // C matrices of F x F; empty if not requested
  bool centered = false;

  int NumComponents() const { return static_cast<int>(n.size()); }
  int Dim() const { return static_cast<int>(f.cols()); }
  bool HasSecondOrder() const { return !S.empty(); }
};

// Accumulates statistics of `feats` under `alignment`.  When center_means is
// given, frames are shifted by the mean of the component they are credited to
// (x_t - m_c).
BaumWelchStats AccumulateStats(const Matrix &feats,
                               const SparseAlignment &alignment,
                               int num_components,
                               const Matrix *center_means = nullptr,
                               bool second_order = true);

}  // namespace ivtk

#endif  // IVTK_GMM_H_
