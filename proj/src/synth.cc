// src/synth.cc

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
#include <cstdio>
#include <random>

#include "ivtk/linalg.h"
#include "ivtk/synth.h"

namespace ivtk {

namespace {

std::string Numbered(const char *prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%04d", prefix, i);
  return buf;
}

}  // namespace

void SynthSpec::Check() const {
  if (num_components < 1 || feat_dim < 1 || speakers < 1 ||
      utts_per_speaker < 1)
    throw std::invalid_argument("SynthSpec: counts must be >= 1");
  if (latent_dim < 0) throw std::invalid_argument("SynthSpec: D must be >= 0");
  if (formulation == Formulation::kAugmented && latent_dim < 2)
    throw std::invalid_argument(
        "SynthSpec: the augmented formulation needs D >= 2");
  if (min_frames < 0 || max_frames < min_frames)
    throw std::invalid_argument("SynthSpec: bad frame range");
  if (!(within_noise >= 0.0) || !(mean_scale >= 0.0) ||
      !(loading_scale >= 0.0) || !(residual_scale > 0.0))
    throw std::invalid_argument("SynthSpec: scales must be non-negative");
  if (formulation == Formulation::kAugmented && prior_offset == 0.0)
    throw std::invalid_argument("SynthSpec: prior offset must be nonzero");
}

SynthCorpus SampleCorpus(const SynthSpec &spec) {
  spec.Check();
  const int C = spec.num_components, F = spec.feat_dim, D = spec.latent_dim;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> randn(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto gaussian = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = randn(rng);
    return m;
  };

  Vector weights(C);
  for (int c = 0; c < C; ++c) weights(c) = 1.0 + unif(rng);
  weights /= weights.sum();
  Matrix means = spec.mean_scale * gaussian(C, F);
  std::vector<Matrix> sigma(C);
  for (int c = 0; c < C; ++c) {
    Matrix a = gaussian(F, F);
    sigma[c] = spec.residual_scale * spec.residual_scale *
               Symmetrize(0.5 * Matrix::Identity(F, F) + 0.5 * a * a.transpose() / F);
  }

  SynthCorpus out;
  TvModel &truth = out.truth;
  truth.formulation = spec.formulation;
  truth.sigma = sigma;
  truth.ubm_weights = weights;
  truth.ubm_means = means;
  truth.T.resize(C);
  for (int c = 0; c < C; ++c) truth.T[c] = spec.loading_scale * gaussian(F, D);
  if (spec.formulation == Formulation::kStandard) {
    truth.bias = means;
    truth.prior_offset = 0.0;
  } else {
    truth.prior_offset = spec.prior_offset;
    for (int c = 0; c < C; ++c)
      truth.T[c].col(0) = means.row(c).transpose() / spec.prior_offset;
  }
  truth.Check();
  out.truth_ubm = GmmFull(weights, means, sigma);

  std::vector<Matrix> chol(C);
  for (int c = 0; c < C; ++c)
    chol[c] = CholeskyOrThrow(sigma[c], "generator covariance").matrixL();
  std::discrete_distribution<int> pick(weights.data(), weights.data() + C);
  std::uniform_int_distribution<int> num_frames(spec.min_frames, spec.max_frames);
  const Vector prior = truth.PriorMean();
  const int num_utts = spec.speakers * spec.utts_per_speaker;
  out.latents.resize(num_utts, D);
  Matrix bias = spec.formulation == Formulation::kStandard
                    ? means
                    : Matrix::Zero(C, F);
  for (int s = 0; s < spec.speakers; ++s) {
    const std::string speaker = Numbered("spk", s);
    Vector speaker_latent = prior + gaussian(D, 1);
    for (int u = 0; u < spec.utts_per_speaker; ++u) {
      Vector w = speaker_latent + spec.within_noise * gaussian(D, 1);
      const int row = s * spec.utts_per_speaker + u;
      out.latents.row(row) = w.transpose();
      Matrix shifted(C, F);
      for (int c = 0; c < C; ++c)
        shifted.row(c) = bias.row(c) + (truth.T[c] * w).transpose();
      const int frames = num_frames(rng);
      Matrix feats(frames, F);
      for (int t = 0; t < frames; ++t) {
        const int c = pick(rng);
        feats.row(t) =
            shifted.row(c) + (chol[c] * gaussian(F, 1)).transpose();
      }
      out.features.Add(speaker + "-" + Numbered("utt", u), std::move(feats));
      out.speakers.push_back(speaker);
    }
  }
  return out;
}

std::vector<Trial> AllPairsTrials(const std::vector<std::string> &ids,
                                  const std::vector<std::string> &speakers) {
  if (ids.size() != speakers.size())
    throw std::invalid_argument("AllPairsTrials: ids and speakers differ in size");
  std::vector<Trial> trials;
  for (size_t i = 0; i < ids.size(); ++i)
    for (size_t j = i + 1; j < ids.size(); ++j)
      trials.push_back({ids[i], ids[j], speakers[i] == speakers[j]});
  return trials;
}

namespace {

Matrix Stack(const std::vector<Matrix> &T) {
  if (T.empty()) throw std::invalid_argument("SubspaceAngles: empty model");
  const Eigen::Index F = T[0].rows(), D = T[0].cols();
  Matrix out(F * static_cast<Eigen::Index>(T.size()), D);
  for (size_t c = 0; c < T.size(); ++c) {
    if (T[c].rows() != F || T[c].cols() != D)
      throw std::invalid_argument("SubspaceAngles: inconsistent T_c sizes");
    out.middleRows(c * F, F) = T[c];
  }
  return out;
}

Matrix OrthonormalBasis(const Matrix &m) {
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  if (qr.rank() < m.cols())
    throw DataError("SubspaceAngles: matrix is rank deficient");
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  return q;
}

}  // namespace

Vector SubspaceAngles(const std::vector<Matrix> &T_true,
                      const std::vector<Matrix> &T_learned) {
  Matrix a = Stack(T_true), b = Stack(T_learned);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("SubspaceAngles: dimension mismatch");
  Matrix qa = OrthonormalBasis(a), qb = OrthonormalBasis(b);
  const Matrix overlap = qa.transpose() * qb;
  // Cosines lose accuracy for small angles, sines for angles near 90
  // degrees; each angle is taken from whichever is better conditioned.
  Vector cosines = Eigen::JacobiSVD<Matrix>(overlap).singularValues();
  Vector sines =
      Eigen::JacobiSVD<Matrix>(qb - qa * overlap).singularValues().reverse();
  Vector angles(cosines.size());
  for (Eigen::Index i = 0; i < cosines.size(); ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    const double rad = c * c > 0.5 ? std::asin(std::clamp(sines(i), 0.0, 1.0))
                                   : std::acos(c);
    angles(i) = rad * 180.0 / M_PI;
  }
  return angles;
}

}  // namespace ivtk
