// src/tvm.cc

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

#include <cmath>
#include <random>

#include "ivtk/linalg.h"
#include "ivtk/tvm.h"

namespace ivtk {

namespace {

constexpr double kSigmaFloorFactor = 1e-5;
constexpr double kLatentCovFloorFactor = 1e-10;
constexpr double kHouseholderDegenerate = 1e-12;

}  // namespace

TvModel InitTvModel(const GmmFull &ubm, int latent_dim, Formulation formulation,
                    uint64_t seed, double prior_offset) {
  if (latent_dim < 0)
    throw std::invalid_argument("InitTvModel: latent dimension must be >= 0");
  if (formulation == Formulation::kAugmented && latent_dim < 2)
    throw std::invalid_argument(
        "InitTvModel: the augmented formulation needs D >= 2");
  if (formulation == Formulation::kAugmented && prior_offset == 0.0)
    throw std::invalid_argument("InitTvModel: prior offset must be nonzero");
  const int num_gauss = ubm.NumComponents(), feat_dim = ubm.Dim();
  TvModel model;
  model.formulation = formulation;
  model.ubm_weights = ubm.weights();
  model.ubm_means = ubm.means();
  model.sigma = ubm.covariances();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> randn(0.0, 1.0);
  model.T.assign(num_gauss, Matrix(feat_dim, latent_dim));
  for (Matrix &t : model.T)
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = randn(rng);
  if (formulation == Formulation::kStandard) {
    model.bias = ubm.means();
    model.prior_offset = 0.0;
  } else {
    model.prior_offset = prior_offset;
    for (int c = 0; c < num_gauss; ++c)
      model.T[c].col(0) = ubm.means().row(c).transpose() / prior_offset;
  }
  return model;
}

const Matrix *CenteringMeans(const TvModel &model) {
  return model.formulation == Formulation::kStandard ? &model.bias : nullptr;
}

TvPosteriorEngine::TvPosteriorEngine(const TvModel &model) : model_(model) {
  const int num_gauss = model.NumComponents();
  sigma_chol_.reserve(num_gauss);
  sigma_inv_T_.resize(num_gauss);
  quadratic_.resize(num_gauss);
  sigma_logdet_.resize(num_gauss);
  for (int c = 0; c < num_gauss; ++c) {
    sigma_chol_.push_back(CholeskyOrThrow(
        model.sigma[c], "residual covariance " + std::to_string(c)));
    sigma_logdet_(c) = LogDet(sigma_chol_.back());
    sigma_inv_T_[c] = sigma_chol_.back().solve(model.T[c]);
    quadratic_[c] = Symmetrize(model.T[c].transpose() * sigma_inv_T_[c]);
  }
}

void TvPosteriorEngine::CheckStats(const BaumWelchStats &stats) const {
  if (stats.NumComponents() != model_.NumComponents() ||
      (stats.f.rows() > 0 && stats.Dim() != model_.FeatDim()))
    throw std::invalid_argument("statistics do not match the model dimensions");
  const bool want_centered = model_.formulation == Formulation::kStandard;
  if (stats.centered != want_centered)
    throw std::invalid_argument(
        want_centered
            ? "standard formulation needs statistics centered on the bias"
            : "augmented formulation needs uncentered statistics");
}

Vector TvPosteriorEngine::Linear(const BaumWelchStats &stats) const {
  Vector linear = model_.PriorMean();
  for (int c = 0; c < model_.NumComponents(); ++c) {
    if (stats.n(c) == 0.0) continue;
    linear.noalias() += sigma_inv_T_[c].transpose() * stats.f.row(c).transpose();
  }
  return linear;
}

LatentPosterior TvPosteriorEngine::Posterior(const BaumWelchStats &stats) const {
  CheckStats(stats);
  const int ivector_dim = model_.LatentDim();
  Matrix precision = Matrix::Identity(ivector_dim, ivector_dim);
  for (int c = 0; c < model_.NumComponents(); ++c) {
    if (stats.n(c) == 0.0) continue;
    precision.noalias() += stats.n(c) * quadratic_[c];
  }
  Eigen::LLT<Matrix> llt = CholeskyOrThrow(precision, "latent precision");
  LatentPosterior post;
  post.Phi = InverseSpd(llt);
  post.phi = llt.solve(Linear(stats));
  return post;
}

double TvPosteriorEngine::LatentLogLikelihood(const BaumWelchStats &stats,
                                              const LatentPosterior &post) const {
  Vector prior = model_.PriorMean();
  Vector linear = Linear(stats);
  Eigen::LLT<Matrix> llt = CholeskyOrThrow(post.Phi, "latent covariance");
  // -log|precision| = log|Phi|.
  return -0.5 * prior.squaredNorm() + 0.5 * linear.dot(post.phi) +
         0.5 * LogDet(llt);
}

double TvPosteriorEngine::DataLogLikelihood(
    const Vector &occupancy, const std::vector<Matrix> &second_order) const {
  const int feat_dim = model_.FeatDim();
  double ans = 0.0;
  for (int c = 0; c < model_.NumComponents(); ++c) {
    if (occupancy(c) == 0.0) continue;
    ans -= 0.5 * occupancy(c) * (feat_dim * kLog2Pi + sigma_logdet_(c));
    ans -= 0.5 * sigma_chol_[c].solve(second_order[c]).trace();
  }
  return ans;
}

LatentPosterior ComputeLatentPosterior(const TvModel &model,
                                       const BaumWelchStats &stats) {
  return TvPosteriorEngine(model).Posterior(stats);
}

Vector ExtractIvector(const TvModel &model, const BaumWelchStats &stats) {
  return ComputeLatentPosterior(model, stats).phi;
}

EmAccumulators::EmAccumulators(int num_gauss, int feat_dim, int ivector_dim)
    : A(num_gauss, Matrix::Zero(ivector_dim, ivector_dim)),
      B(num_gauss, Matrix::Zero(feat_dim, ivector_dim)),
      N(Vector::Zero(num_gauss)),
      Ssum(num_gauss, Matrix::Zero(feat_dim, feat_dim)),
      phi_sum(Vector::Zero(ivector_dim)),
      phi_scatter(Matrix::Zero(ivector_dim, ivector_dim)) {}

void EmAccumulators::Add(const EmAccumulators &other) {
  if (other.A.size() != A.size() || other.phi_sum.size() != phi_sum.size())
    throw std::invalid_argument("EmAccumulators::Add: dimension mismatch");
  for (size_t c = 0; c < A.size(); ++c) {
    A[c] += other.A[c];
    B[c] += other.B[c];
    Ssum[c] += other.Ssum[c];
  }
  N += other.N;
  phi_sum += other.phi_sum;
  phi_scatter += other.phi_scatter;
  num_utts += other.num_utts;
  latent_loglik += other.latent_loglik;
  has_second_order = has_second_order && other.has_second_order;
}

void AccumulateUtterance(const TvPosteriorEngine &engine,
                         const BaumWelchStats &stats, EmAccumulators *acc) {
  const TvModel &model = engine.model();
  if (static_cast<int>(acc->A.size()) != model.NumComponents())
    throw std::invalid_argument("AccumulateUtterance: accumulator/model mismatch");
  LatentPosterior post = engine.Posterior(stats);
  Matrix scatter = post.Phi;
  scatter.selfadjointView<Eigen::Lower>().rankUpdate(post.phi, 1.0);
  scatter = scatter.selfadjointView<Eigen::Lower>();
  for (int c = 0; c < model.NumComponents(); ++c) {
    const double n = stats.n(c);
    if (n == 0.0) continue;
    acc->A[c].noalias() += n * scatter;
    acc->B[c].noalias() += stats.f.row(c).transpose() * post.phi.transpose();
    acc->N(c) += n;
    if (stats.HasSecondOrder()) acc->Ssum[c] += stats.S[c];
  }
  if (!stats.HasSecondOrder()) acc->has_second_order = false;
  acc->phi_sum += post.phi;
  acc->phi_scatter += scatter;
  acc->num_utts += 1.0;
  acc->latent_loglik += engine.LatentLogLikelihood(stats, post);
}

EmAccumulators EmAccumulate(const TvModel &model,
                            std::span<const BaumWelchStats> stats) {
  TvPosteriorEngine engine(model);
  EmAccumulators acc(model.NumComponents(), model.FeatDim(), model.LatentDim());
  for (const BaumWelchStats &s : stats) AccumulateUtterance(engine, s, &acc);
  return acc;
}

double AuxFromAccumulators(const TvPosteriorEngine &engine,
                           const EmAccumulators &acc) {
  if (!acc.has_second_order)
    throw std::invalid_argument(
        "the objective needs second-order statistics");
  return acc.latent_loglik + engine.DataLogLikelihood(acc.N, acc.Ssum);
}

double AuxObjective(const TvModel &model, std::span<const BaumWelchStats> stats) {
  TvPosteriorEngine engine(model);
  EmAccumulators acc(model.NumComponents(), model.FeatDim(), model.LatentDim());
  for (const BaumWelchStats &s : stats) AccumulateUtterance(engine, s, &acc);
  return AuxFromAccumulators(engine, acc);
}

std::vector<Matrix> UpdateT(const EmAccumulators &acc,
                            const std::vector<Matrix> &old_T) {
  std::vector<Matrix> T = old_T;
  for (size_t c = 0; c < acc.A.size(); ++c) {
    if (acc.N(c) <= 0.0) {
      IVTK_WARN << "Component " << c << " has no occupancy; T unchanged";
      continue;
    }
    Eigen::LLT<Matrix> llt(acc.A[c]);
    if (llt.info() != Eigen::Success ||
        (acc.A[c].rows() > 0 && llt.matrixLLT().diagonal().minCoeff() <= 0.0)) {
      IVTK_WARN << "A_" << c << " is singular; T unchanged";
      continue;
    }
    // T_c A_c = B_c with A_c symmetric  <=>  A_c T_c' = B_c'.
    T[c] = llt.solve(acc.B[c].transpose()).transpose();
  }
  return T;
}

std::vector<Matrix> UpdateSigma(const EmAccumulators &acc,
                                const std::vector<Matrix> &new_T,
                                const std::vector<Matrix> &old_sigma) {
  if (!acc.has_second_order)
    throw std::invalid_argument("UpdateSigma needs second-order statistics");
  const size_t num_gauss = acc.A.size();
  std::vector<Matrix> sigma = old_sigma;
  std::vector<bool> updated(num_gauss, false);
  const Eigen::Index feat_dim = old_sigma.empty() ? 0 : old_sigma[0].rows();
  Matrix pooled_new = Matrix::Zero(feat_dim, feat_dim),
         pooled_old = Matrix::Zero(feat_dim, feat_dim);
  double total = 0.0;
  for (size_t c = 0; c < num_gauss; ++c) {
    if (acc.N(c) <= 0.0) continue;
    Matrix s = (acc.Ssum[c] - new_T[c] * acc.B[c].transpose()) / acc.N(c);
    sigma[c] = Symmetrize(s);
    updated[c] = true;
    pooled_new += acc.N(c) * sigma[c];
    pooled_old += acc.N(c) * old_sigma[c];
    total += acc.N(c);
  }
  if (total == 0.0) return sigma;
  double floor = kSigmaFloorFactor * MeanEigenvalue(pooled_new / total);
  if (!(floor > 0.0))
    floor = kSigmaFloorFactor * MeanEigenvalue(pooled_old / total);
  if (!(floor > 0.0))
    throw NumericError("UpdateSigma: cannot establish a positive floor");
  int num_floored = 0;
  for (size_t c = 0; c < num_gauss; ++c)
    if (updated[c]) num_floored += FloorEigenvalues(floor, &sigma[c]);
  if (num_floored > 0)
    IVTK_VLOG << "Floored " << num_floored
              << " eigenvalues of residual covariances";
  return sigma;
}

Matrix HouseholderToE1(const Vector &v) {
  const Eigen::Index dim = v.size();
  const double norm = v.norm();
  if (dim == 0 || !(norm > 0.0))
    throw std::invalid_argument("HouseholderToE1: vector must be nonzero");
  Vector x = v / norm;
  // 1 - x[0], computed without cancellation when x[0] is close to 1.
  const double tail = x.tail(dim - 1).squaredNorm();
  const double one_minus_x0 = x(0) > 0.0 ? tail / (1.0 + x(0)) : 1.0 - x(0);
  if (one_minus_x0 < kHouseholderDegenerate)
    return Matrix::Identity(dim, dim);
  const double alpha = 1.0 / std::sqrt(2.0 * one_minus_x0);
  Vector a = alpha * x;
  a(0) = -alpha * one_minus_x0;  // alpha * x0 + beta with beta = -alpha
  return Matrix::Identity(dim, dim) - 2.0 * a * a.transpose();
}

MinDivTransforms ComputeMinDiv(const EmAccumulators &acc,
                               Formulation formulation) {
  if (acc.num_utts < 1.0)
    throw std::invalid_argument("ComputeMinDiv: no utterances accumulated");
  const Vector h = acc.h();
  MinDivTransforms tr;
  tr.G = Symmetrize(acc.H() - h * h.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(tr.G);
  if (eig.info() != Eigen::Success)
    throw NumericError("ComputeMinDiv: eigendecomposition failed");
  Vector s = eig.eigenvalues();
  const double floor = kLatentCovFloorFactor * std::max(s.maxCoeff(), 0.0);
  if (!(floor > 0.0))
    throw NumericError("ComputeMinDiv: latent covariance is zero");
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) < floor) {
      s(i) = floor;
      ++tr.num_floored;
    }
  }
  if (tr.num_floored > 0)
    IVTK_WARN << "Floored " << tr.num_floored
              << " eigenvalues of the latent covariance; a latent dimension"
                 " has collapsed";
  const Matrix &q = eig.eigenvectors();
  tr.P1 = s.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
  tr.P1_inverse = q * s.cwiseSqrt().asDiagonal();
  const Eigen::Index dim = h.size();
  if (formulation == Formulation::kAugmented)
    tr.P2 = HouseholderToE1(tr.P1 * h);
  else
    tr.P2 = Matrix::Identity(dim, dim);
  return tr;
}

void ApplyMinDiv(const MinDivTransforms &tr, const Vector &h, TvModel *model) {
  // (P2 P1)^-1 = P1^-1 P2 since P2 is its own inverse.
  const Matrix inverse = tr.P1_inverse * tr.P2;
  for (Matrix &t : model->T) t = t * inverse;
  if (model->formulation == Formulation::kAugmented) {
    Vector offset = tr.P2 * (tr.P1 * h);
    const double residual = offset.tail(offset.size() - 1).cwiseAbs().maxCoeff();
    if (residual >= 1e-10)
      IVTK_WARN << "Transformed prior mean has off-axis entries up to "
                << residual;
    model->prior_offset = offset(0);
  }
}

void UpdateUbmMeansAugmented(TvModel *model) {
  if (model->formulation != Formulation::kAugmented)
    throw std::invalid_argument(
        "UpdateUbmMeansAugmented called on a standard-formulation model");
  for (int c = 0; c < model->NumComponents(); ++c)
    model->ubm_means.row(c) =
        model->prior_offset * model->T[c].col(0).transpose();
}

void UpdateMeanStandard(const Vector &h, TvModel *model) {
  if (model->formulation != Formulation::kStandard)
    throw std::invalid_argument(
        "UpdateMeanStandard called on an augmented-formulation model");
  if (h.size() != model->LatentDim())
    throw std::invalid_argument("UpdateMeanStandard: h has wrong dimension");
  for (int c = 0; c < model->NumComponents(); ++c)
    model->bias.row(c) += (model->T[c] * h).transpose();
}

Matrix ModelCovariance(const TvModel &model, const LatentPosterior &post, int c) {
  if (c < 0 || c >= model.NumComponents())
    throw std::invalid_argument("ModelCovariance: component out of range");
  return Symmetrize(model.T[c] * post.Phi * model.T[c].transpose() +
                    model.sigma[c]);
}

}  // namespace ivtk
