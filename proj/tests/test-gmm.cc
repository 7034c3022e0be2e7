// tests/test-gmm.cc

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

#include <limits>

#include "ivtk/gmm.h"
#include "test-util.h"

namespace ivtk {

namespace {

// Single-utterance stores are enough for most EM checks; a few tests split
// the frames over several utterances to exercise batching.
InMemoryFeatureStore Store(const Matrix &frames, int num_utts = 1) {
  InMemoryFeatureStore store;
  const Eigen::Index per = (frames.rows() + num_utts - 1) / num_utts;
  for (int u = 0; u < num_utts; ++u) {
    const Eigen::Index begin = u * per;
    const Eigen::Index rows = std::min(per, frames.rows() - begin);
    store.Add("u" + std::to_string(u), frames.middleRows(begin, rows));
  }
  return store;
}

Matrix SampleFullGmm(const GmmFull &g, int frames, std::mt19937_64 &rng) {
  std::discrete_distribution<int> pick(g.weights().data(),
                                       g.weights().data() + g.NumComponents());
  Matrix out(frames, g.Dim());
  std::vector<Matrix> chol;
  for (const Matrix &c : g.covariances()) chol.push_back(c.llt().matrixL());
  for (int t = 0; t < frames; ++t) {
    int c = pick(rng);
    out.row(t) = g.means().row(c) +
                 (chol[c] * testing::RandomVector(g.Dim(), rng)).transpose();
  }
  return out;
}

void CheckNonDecreasing(const LogLikelihoodTrace &trace) {
  for (size_t i = 1; i < trace.size(); ++i)
    CHECK(trace[i] >= trace[i - 1] - 1e-8 * std::abs(trace[i - 1]));
}

GmmFull TwoComponentTruth() {
  Vector w(2);
  w << 0.4, 0.6;
  Matrix means(2, 2);
  means << -3, 0, 3, 1;
  Matrix c0(2, 2), c1(2, 2);
  c0 << 1.0, 0.5, 0.5, 2.0;
  c1 << 0.5, -0.2, -0.2, 0.8;
  return GmmFull(w, means, {c0, c1});
}

}  // namespace

TEST_CASE("GmmDiag validates its parameters") {
  Matrix means = Matrix::Zero(2, 1), vars = Matrix::Ones(2, 1);
  CHECK_THROWS_AS(GmmDiag(Vector::Constant(2, 0.3), means, vars),
                  std::invalid_argument);
  vars(1, 0) = 0.0;
  CHECK_THROWS_AS(GmmDiag(Vector::Constant(2, 0.5), means, vars),
                  std::invalid_argument);
}

TEST_CASE("GmmFull rejects an indefinite covariance") {
  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(GmmFull(Vector::Ones(1), Matrix::Zero(1, 2), {bad}),
                  NumericError);
}

TEST_CASE("diagonal and full log-likelihoods agree for diagonal covariances") {
  std::mt19937_64 rng(1);
  Matrix means = testing::RandomMatrix(3, 4, rng);
  Matrix vars = testing::RandomMatrix(3, 4, rng).cwiseAbs().array() + 0.5;
  Vector w(3);
  w << 0.2, 0.3, 0.5;
  GmmDiag diag(w, means, vars);
  std::vector<Matrix> covs;
  for (int c = 0; c < 3; ++c) covs.push_back(vars.row(c).asDiagonal());
  GmmFull full(w, means, covs);
  Vector x = testing::RandomVector(4, rng);
  CHECK((diag.LogLikelihoods(x) - full.LogLikelihoods(x)).norm() < 1e-12);
  // Direct density of component 0.
  double direct = std::log(0.2);
  for (int f = 0; f < 4; ++f)
    direct += -0.5 * std::log(2 * M_PI * vars(0, f)) -
              0.5 * std::pow(x(f) - means(0, f), 2) / vars(0, f);
  CHECK(diag.LogLikelihoods(x)(0) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("C = 1 diagonal GMM is the corpus mean and variance") {
  std::mt19937_64 rng(2);
  Matrix frames = testing::RandomMatrix(500, 3, rng);
  frames.col(1) *= 3.0;
  GmmTrainOptions opts;
  opts.num_components = 1;
  opts.iterations = 3;
  GmmDiag g = TrainGmmDiag(Store(frames, 4), opts);
  Vector mean = frames.colwise().mean().transpose();
  Vector var = (frames.rowwise() - mean.transpose()).array().square().colwise().mean();
  CHECK((g.means().row(0).transpose() - mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((g.variances().row(0).transpose() - var).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(g.weights()(0) == doctest::Approx(1.0));
}

TEST_CASE("two separated 1-D clusters are recovered") {
  std::mt19937_64 rng(3);
  Matrix frames(1000, 1);
  for (int t = 0; t < 1000; ++t)
    frames(t, 0) = (t % 2 ? 10.0 : -10.0) + 0.5 * testing::RandomVector(1, rng)(0);
  double c0 = 0, c1 = 0;
  int n0 = 0, n1 = 0;
  for (int t = 0; t < 1000; ++t) {
    if (frames(t, 0) < 0) { c0 += frames(t, 0); ++n0; }
    else { c1 += frames(t, 0); ++n1; }
  }
  c0 /= n0;
  c1 /= n1;
  // Two seeds in the same cluster start EM near a saddle point, so the best
  // of a few restarts is checked.
  double best_ll = -std::numeric_limits<double>::infinity();
  Matrix best_means;
  for (uint64_t seed = 0; seed < 4; ++seed) {
    GmmTrainOptions opts;
    opts.num_components = 2;
    opts.iterations = 10;
    opts.seed = seed;
    LogLikelihoodTrace trace;
    GmmDiag g = TrainGmmDiag(Store(frames, 5), opts, &trace);
    CheckNonDecreasing(trace);
    if (trace.back() > best_ll) {
      best_ll = trace.back();
      best_means = g.means();
    }
  }
  double lo = best_means.minCoeff(), hi = best_means.maxCoeff();
  CHECK(std::abs(lo - c0) < 0.1);
  CHECK(std::abs(hi - c1) < 0.1);
}

TEST_CASE("diagonal EM log-likelihood is non-decreasing") {
  std::mt19937_64 rng(4);
  Matrix frames = SampleFullGmm(TwoComponentTruth(), 3000, rng);
  GmmTrainOptions opts;
  opts.num_components = 4;
  opts.iterations = 15;
  LogLikelihoodTrace trace;
  GmmDiag g = TrainGmmDiag(Store(frames, 7), opts, &trace);
  CHECK(trace.size() == 15);
  CheckNonDecreasing(trace);
  CHECK(g.weights().sum() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("diagonal GMM training preconditions") {
  GmmTrainOptions opts;
  opts.num_components = 2;
  CHECK_THROWS_AS(TrainGmmDiag(InMemoryFeatureStore(), opts), DataError);
  CHECK_THROWS_AS(TrainGmmDiag(Store(Matrix::Ones(19, 2)), opts),
                  std::invalid_argument);
  opts.num_components = 0;
  CHECK_THROWS_AS(TrainGmmDiag(Store(Matrix::Ones(50, 2)), opts),
                  std::invalid_argument);
}

TEST_CASE("starved diagonal components are re-seeded with a warning") {
  // Heavy-tailed 2-D data with 16 components: some components lose all their
  // frames to their neighbours.
  int warned_runs = 0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> randn(0.0, 1.0);
    Matrix frames(160, 2);
    for (int t = 0; t < 160; ++t)
      for (int f = 0; f < 2; ++f) frames(t, f) = std::pow(randn(rng), 3);
    GmmTrainOptions opts;
    opts.num_components = 16;
    opts.iterations = 20;
    opts.seed = seed;
    const uint64_t before = WarningCount();
    GmmDiag g = TrainGmmDiag(Store(frames), opts);
    if (WarningCount() > before) ++warned_runs;
    CHECK(g.weights().sum() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(g.variances().minCoeff() > 0.0);
  }
  CHECK(warned_runs > 0);
}

TEST_CASE("full GMM recovers a known two-component model") {
  std::mt19937_64 rng(5);
  GmmFull truth = TwoComponentTruth();
  Matrix frames = SampleFullGmm(truth, 10000, rng);
  GmmTrainOptions opts;
  opts.num_components = 2;
  opts.iterations = 10;
  opts.seed = 1;
  GmmDiag init = TrainGmmDiag(Store(frames, 10), opts);
  LogLikelihoodTrace trace;
  opts.iterations = 20;
  GmmFull g = TrainGmmFull(Store(frames, 10), init, opts, &trace);
  CheckNonDecreasing(trace);
  for (int c = 0; c < 2; ++c) {
    int match = (g.means().row(c) - truth.means().row(0)).norm() <
                        (g.means().row(c) - truth.means().row(1)).norm()
                    ? 0
                    : 1;
    CHECK((g.covariances()[c] - truth.covariances()[match]).norm() < 0.1);
    CHECK(MaxAsymmetry(g.covariances()[c]) < 1e-10);
  }
}

TEST_CASE("full GMM with zero iterations returns its initialization") {
  GmmFull truth = TwoComponentTruth();
  GmmTrainOptions opts;
  opts.iterations = 0;
  GmmFull g = TrainGmmFull(Store(Matrix::Ones(30, 2)), truth, opts);
  CHECK(g.means() == truth.means());
  CHECK(g.weights() == truth.weights());
  CHECK(g.covariances()[1] == truth.covariances()[1]);
}

TEST_CASE("isotropic data gives near-zero off-diagonal covariance") {
  std::mt19937_64 rng(6);
  Matrix frames = testing::RandomMatrix(10000, 3, rng);
  GmmFull init(Vector::Ones(1), Matrix::Zero(1, 3), {Matrix::Identity(3, 3) * 2});
  GmmTrainOptions opts;
  opts.iterations = 2;
  GmmFull g = TrainGmmFull(Store(frames, 3), init, opts);
  Matrix off = g.covariances()[0];
  off.diagonal().setZero();
  CHECK(off.cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("starved full component keeps its parameters") {
  std::mt19937_64 rng(7);
  Matrix frames = testing::RandomMatrix(200, 2, rng);
  Matrix means(2, 2);
  means << 0, 0, 1e3, 1e3;
  GmmFull init(Vector::Constant(2, 0.5), means,
               {Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  GmmTrainOptions opts;
  opts.iterations = 1;
  const uint64_t before = WarningCount();
  GmmFull g = TrainGmmFull(Store(frames), init, opts);
  CHECK(WarningCount() > before);
  CHECK(g.means().row(1) == means.row(1));
  CHECK(g.weights().sum() == doctest::Approx(1.0));
}

TEST_CASE("degenerate data makes full GMM training fail") {
  GmmFull init(Vector::Ones(1), Matrix::Zero(1, 2), {Matrix::Identity(2, 2)});
  GmmTrainOptions opts;
  opts.iterations = 1;
  CHECK_THROWS_AS(TrainGmmFull(Store(Matrix::Ones(50, 2)), init, opts),
                  NumericError);
}

TEST_CASE("UBM matrix encodings round trip") {
  GmmFull full = TwoComponentTruth();
  GmmFull back = GmmFullFromMatrix(GmmFullToMatrix(full));
  CHECK(back.means() == full.means());
  CHECK(back.covariances()[0] == full.covariances()[0]);
  GmmDiag diag = ToDiag(full);
  CHECK(diag.variances()(1, 1) == full.covariances()[1](1, 1));
  GmmDiag dback = GmmDiagFromMatrix(GmmDiagToMatrix(diag));
  CHECK(dback.variances() == diag.variances());
  CHECK(dback.weights() == diag.weights());
}

TEST_CASE("top-K selection") {
  Matrix means(3, 2);
  means << 0, 0, 5, 5, -5, 5;
  GmmDiag g(Vector::Constant(3, 1.0 / 3), means, Matrix::Ones(3, 2));
  CHECK(SelectTopK(g, Vector::Zero(2), 1) == std::vector<uint32_t>{0});
  std::vector<uint32_t> all = SelectTopK(g, Vector::Zero(2), 3);
  CHECK(all.size() == 3);
  CHECK(all[0] == 0u);
  // Components 1 and 2 are equidistant from the origin: lower index first.
  CHECK(all[1] == 1u);
  CHECK(all[2] == 2u);
  CHECK_THROWS_AS(SelectTopK(g, Vector::Zero(2), 4), std::invalid_argument);
  CHECK(kDefaultTopK == 20);
}

TEST_CASE("top-K matches a dense posterior ranking") {
  std::mt19937_64 rng(8);
  Matrix means = 3 * testing::RandomMatrix(30, 4, rng);
  Matrix vars = testing::RandomMatrix(30, 4, rng).cwiseAbs().array() + 0.2;
  Vector w = Vector::Constant(30, 1.0 / 30);
  GmmDiag g(w, means, vars);
  for (int i = 0; i < 20; ++i) {
    Vector x = 3 * testing::RandomVector(4, rng);
    Vector ll = g.LogLikelihoods(x);
    std::vector<uint32_t> sel = SelectTopK(g, x, 5);
    for (size_t k = 1; k < sel.size(); ++k) CHECK(ll(sel[k - 1]) >= ll(sel[k]));
    int better = 0;
    for (int c = 0; c < 30; ++c) better += ll(c) > ll(sel.back());
    CHECK(better == 4);
  }
}

TEST_CASE("alignment of a frame between two components") {
  Matrix means(2, 1);
  means << -1, 1;
  GmmDiag diag(Vector::Constant(2, 0.5), means, Matrix::Ones(2, 1));
  GmmFull full(Vector::Constant(2, 0.5), means,
               {Matrix::Identity(1, 1), Matrix::Identity(1, 1)});
  SparseAlignment ali = AlignFrames(diag, full, Matrix::Zero(1, 1), 2, 0.025);
  REQUIRE(ali[0].size() == 2);
  CHECK(ali[0][0].weight == doctest::Approx(0.5));
  CHECK(ali[0][1].weight == doctest::Approx(0.5));
  CHECK(kDefaultPrune == 0.025);
}

TEST_CASE("alignment invariants on random frames") {
  std::mt19937_64 rng(9);
  const int C = 32, F = 3;
  Matrix means = 2 * testing::RandomMatrix(C, F, rng);
  std::vector<Matrix> covs;
  for (int c = 0; c < C; ++c) covs.push_back(testing::RandomSpd(F, rng));
  Vector w = Vector::Constant(C, 1.0 / C);
  GmmFull full(w, means, covs);
  GmmDiag diag = ToDiag(full);
  Matrix frames = 2 * testing::RandomMatrix(1000, F, rng);
  SparseAlignment ali = AlignFrames(diag, full, frames, 20, 0.025);
  REQUIRE(ali.size() == 1000);
  for (const FrameAlignment &frame : ali) {
    double sum = 0;
    CHECK(frame.size() <= 20);
    CHECK(!frame.empty());
    for (const AlignmentEntry &e : frame) {
      CHECK(e.weight >= 0.025f);
      sum += e.weight;
    }
    CHECK(std::abs(sum - 1.0) < 1e-5);
  }
  CHECK_NOTHROW(ValidateAlignment(ali, 20));
}

TEST_CASE("frame with every posterior pruned keeps the best component") {
  // 50 identical components: each posterior is 0.02 < prune.
  const int C = 50;
  Matrix means = Matrix::Zero(C, 1);
  GmmDiag diag(Vector::Constant(C, 1.0 / C), means, Matrix::Ones(C, 1));
  std::vector<Matrix> covs(C, Matrix::Identity(1, 1));
  GmmFull full(Vector::Constant(C, 1.0 / C), means, covs);
  SparseAlignment ali = AlignFrames(diag, full, Matrix::Zero(1, 1), C, 0.025);
  REQUIRE(ali[0].size() == 1);
  CHECK(ali[0][0].component == 0u);
  CHECK(ali[0][0].weight == 1.0f);
}

TEST_CASE("statistics of an empty utterance are zero") {
  BaumWelchStats s = AccumulateStats(Matrix(0, 3), {}, 4);
  CHECK(s.n.isZero());
  CHECK(s.f.rows() == 4);
  CHECK(s.f.cols() == 3);
  CHECK(s.f.isZero());
  CHECK(s.S.size() == 4);
}

TEST_CASE("centering at the frame gives zero statistics") {
  Matrix x(1, 2);
  x << 1.5, -2.0;
  Matrix centers = Matrix::Zero(2, 2);
  centers.row(0) = x.row(0);
  BaumWelchStats s = AccumulateStats(x, {{{0, 1.0f}}}, 2, &centers);
  CHECK(s.centered);
  CHECK(s.n(0) == 1.0);
  CHECK(s.f.row(0).isZero());
  CHECK(s.S[0].isZero());
}

TEST_CASE("statistics match dense accumulation") {
  std::mt19937_64 rng(10);
  const int C = 3, F = 2, T = 5;
  Matrix x = testing::RandomMatrix(T, F, rng);
  Matrix centers = testing::RandomMatrix(C, F, rng);
  SparseAlignment ali = {{{0, 0.7f}, {2, 0.3f}}, {{1, 1.0f}},
                         {{0, 0.25f}, {1, 0.25f}, {2, 0.5f}}, {{2, 1.0f}},
                         {{1, 0.6f}, {0, 0.4f}}};
  Matrix gamma = Matrix::Zero(T, C);
  for (int t = 0; t < T; ++t)
    for (const AlignmentEntry &e : ali[t]) gamma(t, e.component) = e.weight;
  BaumWelchStats raw = AccumulateStats(x, ali, C);
  BaumWelchStats cen = AccumulateStats(x, ali, C, &centers);
  CHECK(raw.n.sum() == doctest::Approx(T).epsilon(1e-12));
  for (int c = 0; c < C; ++c) {
    Vector f = Vector::Zero(F);
    Matrix S = Matrix::Zero(F, F);
    double n = 0;
    for (int t = 0; t < T; ++t) {
      n += gamma(t, c);
      f += gamma(t, c) * x.row(t).transpose();
      S += gamma(t, c) * x.row(t).transpose() * x.row(t);
    }
    CHECK(std::abs(raw.n(c) - n) < 1e-7);
    CHECK((raw.f.row(c).transpose() - f).norm() < 1e-6);
    CHECK((raw.S[c] - S).norm() < 1e-6);
    CHECK(MaxAsymmetry(raw.S[c]) < 1e-10);
    // Centered and uncentered statistics are related exactly.
    Vector m = centers.row(c).transpose();
    Vector fr = raw.f.row(c).transpose();
    CHECK((cen.f.row(c).transpose() - (fr - raw.n(c) * m)).norm() < 1e-9);
    Matrix Sc = raw.S[c] - fr * m.transpose() - m * fr.transpose() +
                raw.n(c) * m * m.transpose();
    CHECK((cen.S[c] - Sc).norm() < 1e-9);
  }
}

TEST_CASE("statistics reject an out-of-range component") {
  CHECK_THROWS_AS(AccumulateStats(Matrix::Zero(1, 2), {{{5, 1.0f}}}, 2),
                  DataError);
  CHECK_THROWS_AS(AccumulateStats(Matrix::Zero(2, 2), {{{0, 1.0f}}}, 2),
                  DataError);
}

TEST_CASE("occupancies sum to the frame count") {
  std::mt19937_64 rng(11);
  GmmFull truth = TwoComponentTruth();
  Matrix frames = SampleFullGmm(truth, 777, rng);
  SparseAlignment ali = AlignFrames(ToDiag(truth), truth, frames, 2, 0.025);
  BaumWelchStats s = AccumulateStats(frames, ali, 2);
  CHECK(std::abs(s.n.sum() - 777.0) < 1e-6);
}

}  // namespace ivtk
