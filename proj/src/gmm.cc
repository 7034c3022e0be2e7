// src/gmm.cc

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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include "ivtk/dataflow.h"
#include "ivtk/gmm.h"
#include "ivtk/linalg.h"

namespace ivtk {

namespace {

constexpr double kWeightSumTolerance = 1e-10;
constexpr double kVarianceFloorFactor = 1e-5;

void CheckWeights(const Vector &weights) {
  if (weights.size() == 0) throw std::invalid_argument("GMM has no components");
  if ((weights.array() < 0.0).any() || !weights.allFinite())
    throw std::invalid_argument("GMM weights must be non-negative");
  if (std::abs(weights.sum() - 1.0) > kWeightSumTolerance)
    throw std::invalid_argument("GMM weights must sum to 1");
}

}  // namespace

GmmDiag::GmmDiag(Vector weights, Matrix means, Matrix variances)
    : weights_(std::move(weights)), means_(std::move(means)),
      variances_(std::move(variances)) {
  CheckWeights(weights_);
  if (means_.rows() != weights_.size() || variances_.rows() != means_.rows() ||
      variances_.cols() != means_.cols())
    throw std::invalid_argument("GmmDiag: inconsistent dimensions");
  if (!(variances_.array() > 0.0).all())
    throw std::invalid_argument("GmmDiag: variances must be positive");
  ComputeGconsts();
}

void GmmDiag::SetMeans(const Matrix &means) {
  if (means.rows() != means_.rows() || means.cols() != means_.cols())
    throw std::invalid_argument("GmmDiag::SetMeans: dimension mismatch");
  means_ = means;
  ComputeGconsts();
}

void GmmDiag::ComputeGconsts() {
  const int num_gauss = NumComponents(), dim = Dim();
  inv_vars_ = variances_.cwiseInverse();
  means_invvars_ = means_.cwiseProduct(inv_vars_);
  gconsts_.resize(num_gauss);
  for (int c = 0; c < num_gauss; ++c) {
    gconsts_(c) = std::log(weights_(c)) -
                  0.5 * (dim * kLog2Pi + variances_.row(c).array().log().sum() +
                         means_.row(c).dot(means_invvars_.row(c)));
  }
}

Vector GmmDiag::LogLikelihoods(const Eigen::Ref<const Vector> &x) const {
  Vector sq = x.cwiseProduct(x);
  return gconsts_ + means_invvars_ * x - 0.5 * (inv_vars_ * sq);
}

double GmmDiag::LogLikelihood(const Eigen::Ref<const Vector> &x) const {
  return LogSumExp(LogLikelihoods(x));
}

GmmFull::GmmFull(Vector weights, Matrix means, std::vector<Matrix> covariances)
    : weights_(std::move(weights)), means_(std::move(means)),
      covars_(std::move(covariances)) {
  CheckWeights(weights_);
  const int num_gauss = NumComponents(), dim = Dim();
  if (means_.rows() != num_gauss || static_cast<int>(covars_.size()) != num_gauss)
    throw std::invalid_argument("GmmFull: inconsistent dimensions");
  chol_.reserve(num_gauss);
  gconsts_.resize(num_gauss);
  for (int c = 0; c < num_gauss; ++c) {
    if (covars_[c].rows() != dim || covars_[c].cols() != dim)
      throw std::invalid_argument("GmmFull: covariance has wrong shape");
    if (MaxAsymmetry(covars_[c]) > 1e-10)
      throw NumericError("GmmFull: covariance " + std::to_string(c) +
                         " is not symmetric");
    chol_.push_back(CholeskyOrThrow(covars_[c], "GmmFull covariance " +
                                                    std::to_string(c)));
    gconsts_(c) = std::log(weights_(c)) -
                  0.5 * (dim * kLog2Pi + LogDet(chol_.back()));
  }
}

void GmmFull::SetMeans(const Matrix &means) {
  if (means.rows() != means_.rows() || means.cols() != means_.cols())
    throw std::invalid_argument("GmmFull::SetMeans: dimension mismatch");
  means_ = means;
}

double GmmFull::ComponentLogLikelihood(int c,
                                       const Eigen::Ref<const Vector> &x) const {
  Vector d = x - means_.row(c).transpose();
  chol_[c].matrixL().solveInPlace(d);
  return gconsts_(c) - 0.5 * d.squaredNorm();
}

Vector GmmFull::LogLikelihoods(const Eigen::Ref<const Vector> &x) const {
  Vector ll(NumComponents());
  for (int c = 0; c < NumComponents(); ++c) ll(c) = ComponentLogLikelihood(c, x);
  return ll;
}

double GmmFull::LogLikelihood(const Eigen::Ref<const Vector> &x) const {
  return LogSumExp(LogLikelihoods(x));
}

GmmDiag ToDiag(const GmmFull &full) {
  Matrix vars(full.NumComponents(), full.Dim());
  for (int c = 0; c < full.NumComponents(); ++c)
    vars.row(c) = full.covariances()[c].diagonal().transpose();
  return GmmDiag(full.weights(), full.means(), vars);
}

Matrix GmmDiagToMatrix(const GmmDiag &gmm) {
  const int dim = gmm.Dim();
  Matrix m(gmm.NumComponents(), 1 + 2 * dim);
  m.col(0) = gmm.weights();
  m.middleCols(1, dim) = gmm.means();
  m.middleCols(1 + dim, dim) = gmm.variances();
  return m;
}

GmmDiag GmmDiagFromMatrix(const Matrix &m) {
  if (m.cols() < 3 || (m.cols() - 1) % 2 != 0)
    throw DataError("diagonal GMM matrix must have 1 + 2F columns");
  const Eigen::Index dim = (m.cols() - 1) / 2;
  return GmmDiag(m.col(0), m.middleCols(1, dim), m.middleCols(1 + dim, dim));
}

Matrix GmmFullToMatrix(const GmmFull &gmm) {
  const int dim = gmm.Dim();
  Matrix m(gmm.NumComponents(), 1 + dim + dim * dim);
  m.col(0) = gmm.weights();
  m.middleCols(1, dim) = gmm.means();
  for (int c = 0; c < gmm.NumComponents(); ++c)
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        m(c, 1 + dim + i * dim + j) = gmm.covariances()[c](i, j);
  return m;
}

GmmFull GmmFullFromMatrix(const Matrix &m) {
  // Solve 1 + F + F^2 = cols for F.
  Eigen::Index dim = 0;
  while (1 + dim + dim * dim < m.cols()) ++dim;
  if (dim == 0 || 1 + dim + dim * dim != m.cols())
    throw DataError("full GMM matrix must have 1 + F + F^2 columns");
  std::vector<Matrix> covars(m.rows(), Matrix(dim, dim));
  for (Eigen::Index c = 0; c < m.rows(); ++c)
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index j = 0; j < dim; ++j)
        covars[c](i, j) = m(c, 1 + dim + i * dim + j);
  return GmmFull(m.col(0), m.middleCols(1, dim), std::move(covars));
}

namespace {

using Batch = std::vector<Matrix>;

DataflowOptions FlowOptions(const GmmTrainOptions &opts) {
  DataflowOptions flow;
  flow.batch_size = opts.batch_size;
  flow.workers = opts.workers;
  flow.deterministic = true;
  return flow;
}

std::function<Batch(size_t, size_t)> BatchLoader(const FeatureStore &corpus) {
  return [&corpus](size_t begin, size_t end) {
    Batch b;
    b.reserve(end - begin);
    for (size_t i = begin; i < end; ++i) b.push_back(corpus.Load(i));
    return b;
  };
}

struct GlobalMoments {
  size_t frames = 0;
  Vector sum, sumsq;
};

GlobalMoments ComputeGlobalMoments(const FeatureStore &corpus,
                                   const GmmTrainOptions &opts) {
  const int dim = corpus.FeatDim();
  GlobalMoments total{0, Vector::Zero(dim), Vector::Zero(dim)};
  RunDataflow<Batch, GlobalMoments>(
      corpus.Size(), FlowOptions(opts), BatchLoader(corpus),
      [dim](Batch &&b) {
        GlobalMoments g{0, Vector::Zero(dim), Vector::Zero(dim)};
        for (const Matrix &m : b) {
          g.frames += m.rows();
          g.sum += m.colwise().sum().transpose();
          g.sumsq += m.cwiseProduct(m).colwise().sum().transpose();
        }
        return g;
      },
      [&total](size_t, GlobalMoments &&g) {
        total.frames += g.frames;
        total.sum += g.sum;
        total.sumsq += g.sumsq;
      });
  return total;
}

// Floyd's algorithm: `count` distinct indices in [0, n), sorted.
std::vector<size_t> SampleDistinct(size_t n, size_t count, std::mt19937_64 *rng) {
  std::unordered_set<size_t> chosen;
  for (size_t j = n - count; j < n; ++j) {
    size_t t = std::uniform_int_distribution<size_t>(0, j)(*rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<size_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

Matrix GatherFrames(const FeatureStore &corpus, const std::vector<size_t> &idx) {
  Matrix out(idx.size(), corpus.FeatDim());
  size_t offset = 0, k = 0;
  for (size_t u = 0; u < corpus.Size() && k < idx.size(); ++u) {
    Matrix feats = corpus.Load(u);
    const size_t rows = feats.rows();
    while (k < idx.size() && idx[k] < offset + rows) {
      out.row(k) = feats.row(idx[k] - offset);
      ++k;
    }
    offset += rows;
  }
  return out;
}

struct DiagAccs {
  double loglik = 0.0;
  size_t frames = 0;
  Vector occ;
  Matrix x, x2;
  DiagAccs(int num_gauss, int dim)
      : occ(Vector::Zero(num_gauss)), x(Matrix::Zero(num_gauss, dim)),
        x2(Matrix::Zero(num_gauss, dim)) {}
  void Add(const DiagAccs &o) {
    loglik += o.loglik;
    frames += o.frames;
    occ += o.occ;
    x += o.x;
    x2 += o.x2;
  }
};

struct FullAccs {
  double loglik = 0.0;
  size_t frames = 0;
  Vector occ;
  Matrix x;
  std::vector<Matrix> xx;
  FullAccs(int num_gauss, int dim)
      : occ(Vector::Zero(num_gauss)), x(Matrix::Zero(num_gauss, dim)),
        xx(num_gauss, Matrix::Zero(dim, dim)) {}
  void Add(const FullAccs &o) {
    loglik += o.loglik;
    frames += o.frames;
    occ += o.occ;
    x += o.x;
    for (size_t c = 0; c < xx.size(); ++c) xx[c] += o.xx[c];
  }
};

}  // namespace

GmmDiag TrainGmmDiag(const FeatureStore &corpus, const GmmTrainOptions &opts,
                     LogLikelihoodTrace *trace) {
  if (opts.num_components < 1)
    throw std::invalid_argument("TrainGmmDiag: need at least one component");
  if (corpus.Size() == 0) throw DataError("TrainGmmDiag: empty corpus");
  const int num_gauss = opts.num_components, dim = corpus.FeatDim();
  GlobalMoments moments = ComputeGlobalMoments(corpus, opts);
  if (moments.frames == 0) throw DataError("TrainGmmDiag: corpus has no frames");
  if (moments.frames < 10 * static_cast<size_t>(num_gauss))
    throw std::invalid_argument(
        "TrainGmmDiag: need at least 10 frames per component");
  const double n = static_cast<double>(moments.frames);
  Vector global_mean = moments.sum / n;
  Vector global_var =
      (moments.sumsq / n - global_mean.cwiseProduct(global_mean))
          .cwiseMax(0.0);
  const double var_floor = kVarianceFloorFactor * global_var.mean();
  if (!(var_floor > 0.0))
    throw NumericError("TrainGmmDiag: corpus has zero variance");
  global_var = global_var.cwiseMax(var_floor);

  std::mt19937_64 rng(opts.seed);
  Matrix means = GatherFrames(
      corpus, SampleDistinct(moments.frames, num_gauss, &rng));
  Matrix vars = global_var.transpose().replicate(num_gauss, 1);
  Vector weights = Vector::Constant(num_gauss, 1.0 / num_gauss);
  GmmDiag gmm(weights, means, vars);
  if (trace) trace->clear();

  for (int iter = 0; iter < opts.iterations; ++iter) {
    DiagAccs acc(num_gauss, dim);
    RunDataflow<Batch, DiagAccs>(
        corpus.Size(), FlowOptions(opts), BatchLoader(corpus),
        [&gmm, num_gauss, dim](Batch &&b) {
          DiagAccs a(num_gauss, dim);
          for (const Matrix &feats : b) {
            for (Eigen::Index t = 0; t < feats.rows(); ++t) {
              Vector x = feats.row(t).transpose();
              Vector ll = gmm.LogLikelihoods(x);
              double tot = LogSumExp(ll);
              Vector post = (ll.array() - tot).exp().matrix();
              a.loglik += tot;
              a.occ += post;
              a.x.noalias() += post * x.transpose();
              a.x2.noalias() += post * x.cwiseProduct(x).transpose();
            }
            a.frames += feats.rows();
          }
          return a;
        },
        [&acc](size_t, DiagAccs &&a) { acc.Add(a); });
    if (trace) trace->push_back(acc.loglik / n);
    IVTK_VLOG << "Diagonal GMM iteration " << iter << ": average loglik "
              << acc.loglik / n;

    for (int c = 0; c < num_gauss; ++c) {
      if (acc.occ(c) < 1.0) {
        IVTK_WARN << "Diagonal GMM component " << c << " has occupancy "
                  << acc.occ(c) << " < 1; re-seeding it at a random frame";
        size_t idx = std::uniform_int_distribution<size_t>(
            0, moments.frames - 1)(rng);
        means.row(c) = GatherFrames(corpus, {idx}).row(0);
        vars.row(c) = global_var.transpose();
        weights(c) = 1.0 / num_gauss;
        continue;
      }
      weights(c) = acc.occ(c) / n;
      Eigen::RowVectorXd mean = acc.x.row(c) / acc.occ(c);
      means.row(c) = mean;
      vars.row(c) = (acc.x2.row(c) / acc.occ(c) - mean.cwiseProduct(mean))
                        .cwiseMax(var_floor);
    }
    weights /= weights.sum();
    gmm = GmmDiag(weights, means, vars);
  }
  return gmm;
}

GmmFull TrainGmmFull(const FeatureStore &corpus, const GmmDiag &init,
                     const GmmTrainOptions &opts, LogLikelihoodTrace *trace) {
  std::vector<Matrix> covars;
  for (int c = 0; c < init.NumComponents(); ++c)
    covars.push_back(init.variances().row(c).asDiagonal());
  return TrainGmmFull(corpus, GmmFull(init.weights(), init.means(), covars),
                      opts, trace);
}

GmmFull TrainGmmFull(const FeatureStore &corpus, const GmmFull &init,
                     const GmmTrainOptions &opts, LogLikelihoodTrace *trace) {
  if (corpus.Size() == 0) throw DataError("TrainGmmFull: empty corpus");
  if (corpus.FeatDim() != init.Dim())
    throw DataError("TrainGmmFull: feature dimension differs from the GMM's");
  const int num_gauss = init.NumComponents(), dim = init.Dim();
  GmmFull gmm = init;
  if (trace) trace->clear();

  for (int iter = 0; iter < opts.iterations; ++iter) {
    FullAccs acc(num_gauss, dim);
    RunDataflow<Batch, FullAccs>(
        corpus.Size(), FlowOptions(opts), BatchLoader(corpus),
        [&gmm, num_gauss, dim](Batch &&b) {
          FullAccs a(num_gauss, dim);
          for (const Matrix &feats : b) {
            for (Eigen::Index t = 0; t < feats.rows(); ++t) {
              Vector x = feats.row(t).transpose();
              Vector ll = gmm.LogLikelihoods(x);
              double tot = LogSumExp(ll);
              a.loglik += tot;
              for (int c = 0; c < num_gauss; ++c) {
                double p = std::exp(ll(c) - tot);
                if (p == 0.0) continue;
                a.occ(c) += p;
                a.x.row(c) += p * x.transpose();
                a.xx[c].selfadjointView<Eigen::Lower>().rankUpdate(x, p);
              }
            }
            a.frames += feats.rows();
          }
          return a;
        },
        [&acc](size_t, FullAccs &&a) { acc.Add(a); });
    const double n = static_cast<double>(acc.frames);
    if (acc.frames == 0) throw DataError("TrainGmmFull: corpus has no frames");
    if (trace) trace->push_back(acc.loglik / n);
    IVTK_VLOG << "Full GMM iteration " << iter << ": average loglik "
              << acc.loglik / n;

    Vector weights = gmm.weights();
    Matrix means = gmm.means();
    std::vector<Matrix> covars = gmm.covariances();
    for (int c = 0; c < num_gauss; ++c) {
      if (acc.occ(c) < 1.0) {
        IVTK_WARN << "Full GMM component " << c << " has occupancy "
                  << acc.occ(c) << " < 1; keeping its parameters";
        continue;
      }
      weights(c) = acc.occ(c) / n;
      Vector mean = acc.x.row(c).transpose() / acc.occ(c);
      Matrix cov = acc.xx[c].selfadjointView<Eigen::Lower>();
      cov = Symmetrize(cov / acc.occ(c) - mean * mean.transpose());
      const double floor = kVarianceFloorFactor * MeanEigenvalue(cov);
      if (!(floor > 0.0) || !std::isfinite(floor))
        throw NumericError("TrainGmmFull: covariance of component " +
                           std::to_string(c) + " is singular after flooring");
      FloorEigenvalues(floor, &cov);
      means.row(c) = mean.transpose();
      covars[c] = cov;
    }
    weights /= weights.sum();
    gmm = GmmFull(weights, means, covars);
  }
  return gmm;
}

std::vector<uint32_t> SelectTopK(const GmmDiag &ubm_diag,
                                 const Eigen::Ref<const Vector> &frame, int k) {
  const int num_gauss = ubm_diag.NumComponents();
  if (k < 1 || k > num_gauss)
    throw std::invalid_argument("SelectTopK: need 1 <= K <= C");
  Vector ll = ubm_diag.LogLikelihoods(frame);
  std::vector<uint32_t> idx(num_gauss);
  std::iota(idx.begin(), idx.end(), 0u);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    [&ll](uint32_t a, uint32_t b) {
                      return ll(a) > ll(b) || (ll(a) == ll(b) && a < b);
                    });
  idx.resize(k);
  return idx;
}

SparseAlignment AlignFrames(const GmmDiag &ubm_diag, const GmmFull &ubm_full,
                            const Matrix &feats, int top_k, double prune) {
  if (ubm_diag.NumComponents() != ubm_full.NumComponents() ||
      ubm_diag.Dim() != ubm_full.Dim())
    throw std::invalid_argument("AlignFrames: diagonal and full UBM differ");
  if (feats.rows() > 0 && feats.cols() != ubm_full.Dim())
    throw DataError("AlignFrames: feature dimension differs from the UBM's");
  if (!(prune >= 0.0 && prune < 1.0))
    throw std::invalid_argument("AlignFrames: prune must be in [0, 1)");
  top_k = std::min(top_k, ubm_full.NumComponents());
  SparseAlignment ali(feats.rows());
  Vector ll(top_k);
  for (Eigen::Index t = 0; t < feats.rows(); ++t) {
    Vector x = feats.row(t).transpose();
    std::vector<uint32_t> sel = SelectTopK(ubm_diag, x, top_k);
    for (int k = 0; k < top_k; ++k)
      ll(k) = ubm_full.ComponentLogLikelihood(sel[k], x);
    Eigen::Index best;
    double max = ll.maxCoeff(&best);
    Vector post = (ll.array() - max).exp().matrix();
    post /= post.sum();
    double kept = 0.0;
    for (int k = 0; k < top_k; ++k)
      if (post(k) >= prune) kept += post(k);
    FrameAlignment &frame = ali[t];
    if (kept == 0.0) {
      frame.push_back({sel[best], 1.0f});
      continue;
    }
    for (int k = 0; k < top_k; ++k) {
      if (post(k) < prune) continue;
      float w = static_cast<float>(post(k) / kept);
      // Rounding to float must not push a weight under the threshold.
      while (static_cast<double>(w) < prune) w = std::nextafter(w, 2.0f);
      frame.push_back({sel[k], w});
    }
  }
  return ali;
}

BaumWelchStats AccumulateStats(const Matrix &feats,
                               const SparseAlignment &alignment,
                               int num_components, const Matrix *center_means,
                               bool second_order) {
  const Eigen::Index dim = feats.cols();
  if (static_cast<Eigen::Index>(alignment.size()) != feats.rows())
    throw DataError("AccumulateStats: alignment has " +
                    std::to_string(alignment.size()) + " frames, features " +
                    std::to_string(feats.rows()));
  if (center_means && (center_means->rows() != num_components ||
                       center_means->cols() != dim))
    throw std::invalid_argument("AccumulateStats: centering means have wrong shape");
  BaumWelchStats stats;
  stats.n = Vector::Zero(num_components);
  stats.f = Matrix::Zero(num_components, dim);
  stats.centered = center_means != nullptr;
  if (second_order) stats.S.assign(num_components, Matrix::Zero(dim, dim));
  Vector x(dim);
  for (Eigen::Index t = 0; t < feats.rows(); ++t) {
    const FrameAlignment &frame = alignment[t];
    // Weights are stored in single precision; renormalizing in double keeps
    // the occupancies summing to the frame count.
    double wsum = 0.0;
    for (const AlignmentEntry &e : frame) wsum += e.weight;
    if (frame.empty() || !(wsum > 0.0))
      throw DataError("AccumulateStats: frame " + std::to_string(t) +
                      " has no posterior mass");
    for (const AlignmentEntry &e : frame) {
      if (e.component >= static_cast<uint32_t>(num_components))
        throw DataError("AccumulateStats: component index " +
                        std::to_string(e.component) + " out of range");
      const double gamma = e.weight / wsum;
      const int c = static_cast<int>(e.component);
      x = feats.row(t).transpose();
      if (center_means) x -= center_means->row(c).transpose();
      stats.n(c) += gamma;
      stats.f.row(c) += gamma * x.transpose();
      if (second_order)
        stats.S[c].selfadjointView<Eigen::Lower>().rankUpdate(x, gamma);
    }
  }
  for (Matrix &s : stats.S) s = s.selfadjointView<Eigen::Lower>();
  return stats;
}

}  // namespace ivtk
