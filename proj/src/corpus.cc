// src/corpus.cc

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

#include <filesystem>

#include "ivtk/corpus.h"
#include "ivtk/io-formats.h"

namespace ivtk {

InMemoryFeatureStore::InMemoryFeatureStore(std::vector<std::string> ids,
                                           std::vector<Matrix> feats)
    : ids_(std::move(ids)), feats_(std::move(feats)) {
  if (ids_.size() != feats_.size())
    throw std::invalid_argument("InMemoryFeatureStore: ids/feats mismatch");
}

void InMemoryFeatureStore::Add(std::string id, Matrix feats) {
  ids_.push_back(std::move(id));
  feats_.push_back(std::move(feats));
}

int InMemoryFeatureStore::FeatDim() const {
  for (const Matrix &m : feats_)
    if (m.cols() > 0) return static_cast<int>(m.cols());
  return 0;
}

ScpFeatureStore::ScpFeatureStore(const std::string &scp_path) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(scp_path).parent_path();
  for (auto &[id, path] : ReadKeyValueFile(scp_path)) {
    fs::path p(path);
    if (p.is_relative()) p = base / p;
    ids_.push_back(id);
    paths_.push_back(p.string());
  }
  if (ids_.empty()) throw DataError(scp_path + ": empty feature list");
  for (const std::string &p : paths_) {
    if (!fs::exists(p)) throw DataError("missing feature file " + p);
  }
  auto [dtype, rows, cols] = ReadMatrixHeader(paths_[0]);
  (void)dtype;
  (void)rows;
  feat_dim_ = static_cast<int>(cols);
}

Matrix ScpFeatureStore::Load(size_t i) const {
  Matrix m = ReadMatrix(paths_[i]);
  if (m.cols() != feat_dim_)
    throw DataError(paths_[i] + ": feature dimension " +
                    std::to_string(m.cols()) + " differs from " +
                    std::to_string(feat_dim_));
  return m;
}

size_t TotalFrames(const FeatureStore &store) {
  size_t total = 0;
  for (size_t i = 0; i < store.Size(); ++i) total += store.Load(i).rows();
  return total;
}

}  // namespace ivtk
