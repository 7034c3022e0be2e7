// src/tv-model.cc

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

#include "ivtk/linalg.h"
#include "ivtk/tv-model.h"

namespace ivtk {

std::string FormulationName(Formulation f) {
  return f == Formulation::kStandard ? "standard" : "augmented";
}

Formulation ParseFormulation(const std::string &name) {
  if (name == "standard") return Formulation::kStandard;
  if (name == "augmented") return Formulation::kAugmented;
  throw std::invalid_argument("unknown formulation '" + name +
                              "' (expected standard or augmented)");
}

Vector TvModel::PriorMean() const {
  Vector mean = Vector::Zero(LatentDim());
  if (formulation == Formulation::kAugmented && mean.size() > 0)
    mean(0) = prior_offset;
  return mean;
}

void TvModel::Check() const {
  const int num_gauss = NumComponents(), feat_dim = FeatDim(),
            ivector_dim = LatentDim();
  if (num_gauss == 0) throw DataError("TvModel has no components");
  if (static_cast<int>(sigma.size()) != num_gauss)
    throw DataError("TvModel: sigma count does not match T count");
  if (ubm_weights.size() != num_gauss || ubm_means.rows() != num_gauss ||
      ubm_means.cols() != feat_dim)
    throw DataError("TvModel: UBM weights/means have wrong dimensions");
  for (int c = 0; c < num_gauss; ++c) {
    if (T[c].rows() != feat_dim || T[c].cols() != ivector_dim)
      throw DataError("TvModel: T matrices differ in shape");
    if (sigma[c].rows() != feat_dim || sigma[c].cols() != feat_dim)
      throw DataError("TvModel: sigma has wrong shape");
    if (MaxAsymmetry(sigma[c]) > 1e-10)
      throw NumericError("TvModel: sigma is not symmetric");
    CholeskyOrThrow(sigma[c], "TvModel residual covariance");
  }
  if (formulation == Formulation::kStandard) {
    if (prior_offset != 0.0)
      throw DataError("TvModel: standard formulation requires p = 0");
    if (bias.rows() != num_gauss || bias.cols() != feat_dim)
      throw DataError("TvModel: standard formulation requires a C x F bias");
  } else {
    if (bias.size() != 0)
      throw DataError("TvModel: augmented formulation carries no bias");
    if (ivector_dim < 2)
      throw DataError("TvModel: augmented formulation requires D >= 2");
  }
}

}  // namespace ivtk
