// ivtk/tvm.h

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

#ifndef IVTK_TVM_H_
#define IVTK_TVM_H_

// Total variability model: latent posteriors, EM updates and minimum
// divergence re-estimation for both the standard and the augmented
// formulation.

#include <span>
#include <vector>

#include "ivtk/base.h"
#include "ivtk/gmm.h"
#include "ivtk/tv-model.h"

namespace ivtk {

// Standard: T ~ N(0, 1), bias and sigma copied from the UBM, p = 0.
// Augmented: same random T but the first column of T_c is m_c / p.
TvModel InitTvModel(const GmmFull &ubm, int latent_dim, Formulation formulation,
                    uint64_t seed, double prior_offset = kDefaultPriorOffset);

// Posterior N(phi, Phi) of the latent vector of one utterance.
struct LatentPosterior {
  Matrix Phi;  // D x D
  Vector phi;  // D
};

// Immutable per-model quantities reused across utterances: Cholesky factors
// of sigma_c, Sigma_c^-1 T_c and T_c' Sigma_c^-1 T_c.  Safe to share between
// threads.
class TvPosteriorEngine {
 public:
  explicit TvPosteriorEngine(const TvModel &model);

  const TvModel &model() const { return model_; }

  // Phi = (I + sum_c n_c T_c' S_c^-1 T_c)^-1,
  // phi = Phi (p e_1 + sum_c T_c' S_c^-1 f_c), over components with n_c > 0.
  // Throws std::invalid_argument if the statistics' centering does not match
  // the formulation and NumericError if the precision is not SPD.
  LatentPosterior Posterior(const BaumWelchStats &stats) const;

  // Log marginal likelihood contribution of the latent part of one
  // utterance: -p'p/2 + l' phi / 2 - log|precision| / 2, where l is the
  // linear term of the posterior.
  double LatentLogLikelihood(const BaumWelchStats &stats,
                             const LatentPosterior &post) const;

  // sum_c -N_c/2 (F log 2pi + log|S_c|) - tr(S_c^-1 Ssum_c)/2.
  double DataLogLikelihood(const Vector &occupancy,
                           const std::vector<Matrix> &second_order) const;

 private:
  void CheckStats(const BaumWelchStats &stats) const;
  Vector Linear(const BaumWelchStats &stats) const;

  const TvModel &model_;
  std::vector<Eigen::LLT<Matrix>> sigma_chol_;
  std::vector<Matrix> sigma_inv_T_;  // F x D
  std::vector<Matrix> quadratic_;     // D x D
  Vector sigma_logdet_;
};

LatentPosterior ComputeLatentPosterior(const TvModel &model,
                                       const BaumWelchStats &stats);

// The i-vector: the posterior mean, including the prior offset.
Vector ExtractIvector(const TvModel &model, const BaumWelchStats &stats);

// Sufficient statistics of one E-step.  Partials over disjoint sets of
// utterances merge by addition.
struct EmAccumulators {
  std::vector<Matrix> A;      // C x (D x D): sum_u n_c (Phi + phi phi')
  std::vector<Matrix> B;      // C x (F x D): sum_u f_c phi'
  Vector N;                   // C occupancies
  std::vector<Matrix> Ssum;   // C x (F x F) second-order totals
  Vector phi_sum;             // sum_u phi
  Matrix phi_scatter;         // sum_u (Phi + phi phi')
  double num_utts = 0.0;
  double latent_loglik = 0.0;  // sum of LatentLogLikelihood
  bool has_second_order = true;

  EmAccumulators() = default;
  EmAccumulators(int num_gauss, int feat_dim, int ivector_dim);
  void Add(const EmAccumulators &other);
  Vector h() const { return phi_sum / num_utts; }
  Matrix H() const { return phi_scatter / num_utts; }
};

void AccumulateUtterance(const TvPosteriorEngine &engine,
                         const BaumWelchStats &stats, EmAccumulators *acc);
EmAccumulators EmAccumulate(const TvModel &model,
                            std::span<const BaumWelchStats> stats);

// Observed-data log-likelihood of the model for the corpus the accumulators
// were gathered on (requires second-order statistics).
double AuxFromAccumulators(const TvPosteriorEngine &engine,
                           const EmAccumulators &acc);
double AuxObjective(const TvModel &model, std::span<const BaumWelchStats> stats);

// T_c = B_c A_c^-1.  Components whose A_c is not positive definite keep
// their previous T_c (a warning is emitted).
std::vector<Matrix> UpdateT(const EmAccumulators &acc,
                            const std::vector<Matrix> &old_T);

// Sigma_c = (Ssum_c - T_c B_c') / N_c, symmetrized and eigenvalue-floored at
// 1e-5 times the mean eigenvalue of the occupancy-weighted average of the
// new covariances.  Components with N_c = 0 keep their old value.
std::vector<Matrix> UpdateSigma(const EmAccumulators &acc,
                                const std::vector<Matrix> &new_T,
                                const std::vector<Matrix> &old_sigma);

struct MinDivTransforms {
  Matrix P1;          // whitening Lambda^-1/2 Q'
  Matrix P1_inverse;  // Q Lambda^1/2
  Matrix P2;          // Householder reflection (identity for standard)
  Matrix G;           // H - h h'
  int num_floored = 0;
};

// Whitening of the latent covariance G = H - h h' and, for the augmented
// formulation, the reflection that sends P1 h onto the first axis.
// Eigenvalues of G below 1e-10 times the largest are floored with a warning.
MinDivTransforms ComputeMinDiv(const EmAccumulators &acc,
                               Formulation formulation);

// P = I - 2 a a' with a = (v/|v| - e_1) / sqrt(2 (1 - v[0]/|v|)), so that
// P v = |v| e_1.  Returns the identity when v already points along e_1.
Matrix HouseholderToE1(const Vector &v);

// T_c <- T_c P1^-1 P2^-1; for the augmented formulation also
// p <- (P2 P1 h)[0].
void ApplyMinDiv(const MinDivTransforms &tr, const Vector &h, TvModel *model);

// UBM means <- p T_c[:, 0] (augmented only).
void UpdateUbmMeansAugmented(TvModel *model);

// m_c <- m_c + T_c h (standard only).  Statistics must be re-centered on the
// new means afterwards.
void UpdateMeanStandard(const Vector &h, TvModel *model);

// D_c(u) = T_c Phi(u) T_c' + Sigma_c.
Matrix ModelCovariance(const TvModel &model, const LatentPosterior &post, int c);

// Center on which utterance statistics must be computed for this model:
// the bias for the standard formulation, none for the augmented one.
const Matrix *CenteringMeans(const TvModel &model);

}  // namespace ivtk

#endif  // IVTK_TVM_H_
