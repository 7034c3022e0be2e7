// ivtk/corpus.h

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

#ifndef IVTK_CORPUS_H_
#define IVTK_CORPUS_H_

#include <string>
#include <vector>

#include "ivtk/base.h"

namespace ivtk {

// A collection of utterances, each a (num_frames x feat_dim) matrix with one
// frame per row.  Load() must be safe to call concurrently.
class FeatureStore {
 public:
  virtual ~FeatureStore() = default;
  virtual size_t Size() const = 0;
  virtual const std::string &Id(size_t i) const = 0;
  virtual Matrix Load(size_t i) const = 0;
  virtual int FeatDim() const = 0;
};

class InMemoryFeatureStore : public FeatureStore {
 public:
  InMemoryFeatureStore() = default;
  InMemoryFeatureStore(std::vector<std::string> ids, std::vector<Matrix> feats);
  void Add(std::string id, Matrix feats);
  size_t Size() const override { return ids_.size(); }
  const std::string &Id(size_t i) const override { return ids_[i]; }
  Matrix Load(size_t i) const override { return feats_[i]; }
  const Matrix &Get(size_t i) const { return feats_[i]; }
  int FeatDim() const override;

 private:
  std::vector<std::string> ids_;
  std::vector<Matrix> feats_;
};

// Utterances listed in a text file of "utt_id path" lines, each path a matrix
// file.  Features are read from disk on every Load().
class ScpFeatureStore : public FeatureStore {
 public:
  // Relative paths are resolved against the directory holding the list.
  explicit ScpFeatureStore(const std::string &scp_path);
  size_t Size() const override { return ids_.size(); }
  const std::string &Id(size_t i) const override { return ids_[i]; }
  Matrix Load(size_t i) const override;
  int FeatDim() const override { return feat_dim_; }

 private:
  std::vector<std::string> ids_;
  std::vector<std::string> paths_;
  int feat_dim_ = 0;
};

// Total number of frames in the store.
size_t TotalFrames(const FeatureStore &store);

}  // namespace ivtk

#endif  // IVTK_CORPUS_H_
