// ivtk/linalg.h

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

#ifndef IVTK_LINALG_H_
#define IVTK_LINALG_H_

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "ivtk/base.h"

namespace ivtk {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// (M + M^T) / 2.
Matrix Symmetrize(const Matrix &m);

// Largest |M(i,j) - M(j,i)|.
double MaxAsymmetry(const Matrix &m);

// Replaces eigenvalues of the symmetric matrix *m that are below `floor` by
// `floor` and rebuilds it.  Returns the number of eigenvalues changed; *m is
// left untouched when nothing is floored.
int FloorEigenvalues(double floor, Matrix *m);

// Mean eigenvalue, i.e. trace / dim.
double MeanEigenvalue(const Matrix &m);

// log |A| from a successful Cholesky factorization.
double LogDet(const Eigen::LLT<Matrix> &llt);

// Cholesky factorization that throws NumericError with `what` in the message
// when the matrix is not positive definite.
Eigen::LLT<Matrix> CholeskyOrThrow(const Matrix &m, const std::string &what);

// Inverse of an SPD matrix through its Cholesky factor, symmetrized.
Matrix InverseSpd(const Eigen::LLT<Matrix> &llt);

double LogSumExp(const Eigen::Ref<const Vector> &v);

}  // namespace ivtk

#endif  // IVTK_LINALG_H_
