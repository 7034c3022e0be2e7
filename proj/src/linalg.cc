// src/linalg.cc

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
#include <limits>

#include "ivtk/linalg.h"

namespace ivtk {

Matrix Symmetrize(const Matrix &m) {
  return 0.5 * (m + m.transpose());
}

double MaxAsymmetry(const Matrix &m) {
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

int FloorEigenvalues(double floor, Matrix *m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Symmetrize(*m));
  if (eig.info() != Eigen::Success)
    throw NumericError("symmetric eigendecomposition failed");
  Vector s = eig.eigenvalues();
  int num_floored = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!(s(i) >= floor)) {
      s(i) = floor;
      ++num_floored;
    }
  }
  if (num_floored > 0) {
    const Matrix &q = eig.eigenvectors();
    *m = Symmetrize(q * s.asDiagonal() * q.transpose());
  }
  return num_floored;
}

double MeanEigenvalue(const Matrix &m) {
  return m.rows() == 0 ? 0.0 : m.trace() / static_cast<double>(m.rows());
}

double LogDet(const Eigen::LLT<Matrix> &llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::LLT<Matrix> CholeskyOrThrow(const Matrix &m, const std::string &what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success ||
      !llt.matrixLLT().diagonal().allFinite() ||
      (m.rows() > 0 && llt.matrixLLT().diagonal().minCoeff() <= 0.0))
    throw NumericError(what + " is not positive definite");
  return llt;
}

Matrix InverseSpd(const Eigen::LLT<Matrix> &llt) {
  const Eigen::Index n = llt.matrixLLT().rows();
  return Symmetrize(llt.solve(Matrix::Identity(n, n)));
}

double LogSumExp(const Eigen::Ref<const Vector> &v) {
  if (v.size() == 0) return -std::numeric_limits<double>::infinity();
  double max = v.maxCoeff();
  if (!std::isfinite(max)) return max;
  return max + std::log((v.array() - max).exp().sum());
}

}  // namespace ivtk
