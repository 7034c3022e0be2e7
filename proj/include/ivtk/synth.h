// ivtk/synth.h

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

#ifndef IVTK_SYNTH_H_
#define IVTK_SYNTH_H_

// Corpora sampled from a known total variability model.

#include <string>
#include <vector>

#include "ivtk/base.h"
#include "ivtk/corpus.h"
#include "ivtk/gmm.h"
#include "ivtk/io-formats.h"
#include "ivtk/tv-model.h"

namespace ivtk {

struct SynthSpec {
  int num_components = 8;
  int feat_dim = 10;
  int latent_dim = 4;
  int speakers = 10;
  int utts_per_speaker = 5;
  int min_frames = 100;
  int max_frames = 200;
  uint64_t seed = 0;
  Formulation formulation = Formulation::kAugmented;
  double within_noise = 0.5;  // std. dev. of the per-utterance latent jitter
  double prior_offset = kDefaultPriorOffset;
  double mean_scale = 3.0;     // std. dev. of the component means
  double loading_scale = 0.5;  // std. dev. of the entries of T
  double residual_scale = 1.0;

  // Throws std::invalid_argument on a violated invariant.
  void Check() const;
};

struct SynthCorpus {
  InMemoryFeatureStore features;
  std::vector<std::string> speakers;  // per utterance
  Matrix latents;                     // per utterance, one row each
  TvModel truth;
  GmmFull truth_ubm;  // generator weights, bias means and residual covariances
};

// Per speaker: w_s ~ N(prior mean, I).  Per utterance: w = w_s + noise * z,
// z ~ N(0, I).  Per frame: c ~ weights, x ~ N(mu_c(w), Sigma_c).  D = 0 is
// allowed for the standard formulation and gives a plain GMM corpus.
SynthCorpus SampleCorpus(const SynthSpec &spec);

// Every unordered pair of distinct utterances, labelled by speaker identity.
std::vector<Trial> AllPairsTrials(const std::vector<std::string> &ids,
                                  const std::vector<std::string> &speakers);

// Principal angles in degrees, ascending, between the column spaces of the
// supervector-space matrices obtained by stacking the T_c.  Throws
// DataError when either stack is rank deficient.
Vector SubspaceAngles(const std::vector<Matrix> &T_true,
                      const std::vector<Matrix> &T_learned);

}  // namespace ivtk

#endif  // IVTK_SYNTH_H_
