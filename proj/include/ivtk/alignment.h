// ivtk/alignment.h

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

#ifndef IVTK_ALIGNMENT_H_
#define IVTK_ALIGNMENT_H_

#include <cstdint>
#include <string>
#include <vector>

namespace ivtk {

// One (component, posterior) pair of a sparse frame alignment.
struct AlignmentEntry {
  uint32_t component = 0;
  float weight = 0.0f;
  bool operator==(const AlignmentEntry &) const = default;
};

using FrameAlignment = std::vector<AlignmentEntry>;

// Pruned and renormalized component posteriors of every frame of one
// utterance.  Per frame, weights sum to one and each weight is at least the
// pruning threshold used to create it.
using SparseAlignment = std::vector<FrameAlignment>;

// Tolerance on the per-frame weight sum of a stored alignment.
constexpr double kAlignmentSumTolerance = 1e-5;

// Throws DataError if any frame violates the sum-to-one invariant, has more
// than `top_k` entries, or has a weight outside [0, 1].
void ValidateAlignment(const SparseAlignment &alignment, uint32_t top_k);

}  // namespace ivtk

#endif  // IVTK_ALIGNMENT_H_
