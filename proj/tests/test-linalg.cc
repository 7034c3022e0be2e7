// tests/test-linalg.cc

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

#include <doctest.h>

#include "ivtk/linalg.h"
#include "test-util.h"

namespace ivtk {

TEST_CASE("Symmetrize averages a matrix with its transpose") {
  Matrix m(2, 2);
  m << 1, 2, 4, 3;
  Matrix s = Symmetrize(m);
  CHECK(s(0, 1) == 3.0);
  CHECK(s(1, 0) == 3.0);
  CHECK(MaxAsymmetry(s) == 0.0);
  CHECK(MaxAsymmetry(m) == 2.0);
}

TEST_CASE("FloorEigenvalues raises small eigenvalues only") {
  Matrix m = Vector::Ones(3).asDiagonal();
  m(2, 2) = 1e-9;
  CHECK(FloorEigenvalues(1e-3, &m) == 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  CHECK(eig.eigenvalues()(0) == doctest::Approx(1e-3).epsilon(1e-10));
  CHECK(eig.eigenvalues()(2) == doctest::Approx(1.0));
  Matrix untouched = Matrix::Identity(3, 3);
  CHECK(FloorEigenvalues(0.5, &untouched) == 0);
  CHECK(untouched == Matrix::Identity(3, 3));
}

TEST_CASE("LogDet and InverseSpd agree with the dense routines") {
  std::mt19937_64 rng(3);
  Matrix a = testing::RandomSpd(5, rng);
  Eigen::LLT<Matrix> llt = CholeskyOrThrow(a, "a");
  CHECK(LogDet(llt) == doctest::Approx(std::log(a.determinant())).epsilon(1e-12));
  CHECK((InverseSpd(llt) - a.inverse()).norm() < 1e-10);
}

TEST_CASE("CholeskyOrThrow rejects indefinite matrices") {
  Matrix m(2, 2);
  m << 1, 2, 2, 1;
  CHECK_THROWS_AS(CholeskyOrThrow(m, "m"), NumericError);
}

TEST_CASE("LogSumExp is stable for large arguments") {
  Vector v(3);
  v << 1000.0, 1000.0, -1e300;
  CHECK(LogSumExp(v) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("MeanEigenvalue is trace over dimension") {
  Matrix m = Matrix::Zero(4, 4);
  m.diagonal() << 1, 2, 3, 6;
  CHECK(MeanEigenvalue(m) == 3.0);
}

}  // namespace ivtk
