// ivtk/tv-model.h

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

#ifndef IVTK_TV_MODEL_H_
#define IVTK_TV_MODEL_H_

#include <string>
#include <vector>

#include "ivtk/base.h"

namespace ivtk {

// Standard: mu_c(u) = m_c + T_c w(u), w ~ N(0, I), statistics centered on m_c.
// Augmented: mu_c(u) = T_c w(u), w ~ N(p e_1, I); the bias lives in the first
// column of T_c and statistics are not centered.
enum class Formulation : uint32_t { kStandard = 0, kAugmented = 1 };

std::string FormulationName(Formulation f);
// Accepts "standard" and "augmented".
Formulation ParseFormulation(const std::string &name);

constexpr double kDefaultPriorOffset = 100.0;

// Total variability model.  The UBM weights and means used for frame
// alignment travel with the model since realignment moves the means; the UBM
// covariances stay with the UBM files.
struct TvModel {
  Formulation formulation = Formulation::kAugmented;
  std::vector<Matrix> T;      // C matrices of F x D.
  std::vector<Matrix> sigma;  // C residual covariances, F x F.
  Matrix bias;                // C x F, standard formulation only.
  double prior_offset = 0.0;  // augmented only; prior mean is p e_1.
  Vector ubm_weights;         // C
  Matrix ubm_means;           // C x F

  int NumComponents() const { return static_cast<int>(T.size()); }
  int FeatDim() const { return T.empty() ? 0 : static_cast<int>(T[0].rows()); }
  int LatentDim() const {
    return T.empty() ? 0 : static_cast<int>(T[0].cols());
  }
  // p e_1 for the augmented formulation, zero otherwise.
  Vector PriorMean() const;

  // Throws DataError on inconsistent dimensions or a violated formulation
  // invariant, NumericError when some sigma is not SPD.
  void Check() const;
};

}  // namespace ivtk

#endif  // IVTK_TV_MODEL_H_
