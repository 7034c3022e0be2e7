// src/backend.cc

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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "ivtk/backend.h"
#include "ivtk/io-formats.h"
#include "ivtk/linalg.h"

namespace ivtk {

namespace {

constexpr double kWhitenFloor = 1e-10;
constexpr double kLdaWithinFloor = 1e-6;
constexpr double kPldaFloor = 1e-6;

struct ClassStats {
  int num_classes = 0;
  std::vector<int> counts;
  Matrix sums;  // num_classes x D
};

ClassStats GatherClasses(const Matrix &x, const std::vector<int> &labels) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows())
    throw std::invalid_argument("number of labels does not match embeddings");
  ClassStats cs;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("labels must be non-negative");
    cs.num_classes = std::max(cs.num_classes, l + 1);
  }
  cs.counts.assign(cs.num_classes, 0);
  cs.sums = Matrix::Zero(cs.num_classes, x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    cs.counts[labels[i]]++;
    cs.sums.row(labels[i]) += x.row(i);
  }
  return cs;
}

Vector RowMean(const Matrix &x) { return x.colwise().mean().transpose(); }

nlohmann::json ToJson(const Matrix &m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json ToJson(const Vector &v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Matrix MatrixFromJson(const nlohmann::json &j) {
  if (!j.is_array()) throw DataError("backend model: expected a matrix");
  const size_t rows = j.size(), cols = rows ? j[0].size() : 0;
  Matrix m(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw DataError("backend model: ragged matrix");
    for (size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

Vector VectorFromJson(const nlohmann::json &j) {
  std::vector<double> v = j.get<std::vector<double>>();
  return Eigen::Map<Vector>(v.data(), v.size());
}

}  // namespace

Vector GaussianizerChain::PreNormalize(const Vector &x) const {
  if (x.size() != mean.size())
    throw std::invalid_argument("embedding dimension does not match the chain");
  Vector y = x - mean;
  if (whitener) y = *whitener * y;
  return y;
}

Vector GaussianizerChain::Apply(const Vector &x) const {
  return LengthNormalize(PreNormalize(x));
}

Matrix GaussianizerChain::ApplyRows(const Matrix &x) const {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out.row(i) = Apply(x.row(i).transpose()).transpose();
  return out;
}

GaussianizerChain FitChain(const Matrix &train, bool whiten) {
  if (train.rows() < 2)
    throw std::invalid_argument("FitChain needs at least two embeddings");
  GaussianizerChain chain;
  chain.mean = RowMean(train);
  if (!whiten) return chain;
  Matrix centered = train.rowwise() - chain.mean.transpose();
  Matrix cov = Symmetrize(centered.transpose() * centered /
                          static_cast<double>(train.rows()));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  Vector s = eig.eigenvalues();
  const double floor = kWhitenFloor * std::max(s.maxCoeff(), 0.0);
  if (!(floor > 0.0))
    throw NumericError("FitChain: embeddings have zero covariance");
  int floored = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) < floor) {
      s(i) = floor;
      ++floored;
    }
  if (floored > 0)
    IVTK_WARN << "Embedding covariance is rank deficient; floored " << floored
              << " eigenvalues before whitening";
  chain.whitener = s.cwiseSqrt().cwiseInverse().asDiagonal() *
                   eig.eigenvectors().transpose();
  return chain;
}

Vector LengthNormalize(const Vector &x) {
  const double norm = x.norm();
  if (!(norm > 0.0))
    throw std::invalid_argument("cannot length-normalize a zero vector");
  Vector y = x / norm;
  // One refinement step brings the norm to within an ulp or two of one.
  return y / y.norm();
}

LdaModel FitLda(const Matrix &x, const std::vector<int> &labels,
                int output_dim) {
  ClassStats cs = GatherClasses(x, labels);
  int present = 0;
  for (int n : cs.counts) present += n > 0;
  if (present < 2) throw std::invalid_argument("LDA needs at least two classes");
  if (output_dim < 1 || output_dim > present - 1 || output_dim > x.cols())
    throw std::invalid_argument(
        "LDA output dimension must be in [1, min(D, classes - 1)]");
  const double total = static_cast<double>(x.rows());
  const Vector mu = RowMean(x);
  Matrix within = Matrix::Zero(x.cols(), x.cols());
  Matrix between = Matrix::Zero(x.cols(), x.cols());
  for (int k = 0; k < cs.num_classes; ++k) {
    if (cs.counts[k] == 0) continue;
    Vector diff = cs.sums.row(k).transpose() / cs.counts[k] - mu;
    between.noalias() += cs.counts[k] * diff * diff.transpose();
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Vector r = x.row(i).transpose() -
               cs.sums.row(labels[i]).transpose() / cs.counts[labels[i]];
    within.noalias() += r * r.transpose();
  }
  within = Symmetrize(within / total);
  between = Symmetrize(between / total);
  double floor = kLdaWithinFloor * MeanEigenvalue(within);
  if (!(floor > 0.0)) floor = kLdaWithinFloor * MeanEigenvalue(within + between);
  if (!(floor > 0.0)) throw NumericError("FitLda: embeddings have no scatter");
  if (FloorEigenvalues(floor, &within) > 0)
    IVTK_VLOG << "LDA within-class scatter floored";
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(between, within);
  if (ges.info() != Eigen::Success)
    throw NumericError("FitLda: generalized eigenproblem failed");
  LdaModel lda;
  lda.projection =
      ges.eigenvectors().rightCols(output_dim).rowwise().reverse();
  return lda;
}

double PldaLogLikelihood(const PldaModel &model, const Matrix &x,
                         const std::vector<int> &labels) {
  ClassStats cs = GatherClasses(x, labels);
  const Eigen::Index dim = x.cols();
  Eigen::LLT<Matrix> w_llt = CholeskyOrThrow(model.within, "PLDA within");
  Eigen::LLT<Matrix> b_llt = CholeskyOrThrow(model.between, "PLDA between");
  const Matrix w_inv = InverseSpd(w_llt), b_inv = InverseSpd(b_llt);
  const double w_logdet = LogDet(w_llt), b_logdet = LogDet(b_llt);
  double ans = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Vector r = x.row(i).transpose() - model.mean;
    ans -= 0.5 * (dim * kLog2Pi + w_logdet + r.dot(w_llt.solve(r)));
  }
  for (int k = 0; k < cs.num_classes; ++k) {
    const int n = cs.counts[k];
    if (n == 0) continue;
    Vector b = w_llt.solve(cs.sums.row(k).transpose() - n * model.mean);
    Eigen::LLT<Matrix> prec = CholeskyOrThrow(b_inv + n * w_inv, "PLDA posterior");
    ans += -0.5 * b_logdet - 0.5 * LogDet(prec) + 0.5 * b.dot(prec.solve(b));
  }
  return ans;
}

PldaModel FitPlda(const Matrix &x, const std::vector<int> &labels,
                  const PldaOptions &opts, std::vector<double> *trace) {
  ClassStats cs = GatherClasses(x, labels);
  int present = 0, max_count = 0;
  for (int n : cs.counts) {
    present += n > 0;
    max_count = std::max(max_count, n);
  }
  if (present < 2 || max_count < 2)
    throw std::invalid_argument(
        "PLDA needs two classes and a class with two samples");
  const Eigen::Index dim = x.cols();
  const double total = static_cast<double>(x.rows());
  PldaModel model;
  model.mean = RowMean(x);
  Matrix class_means(cs.num_classes, dim);
  Matrix within = Matrix::Zero(dim, dim), between = Matrix::Zero(dim, dim);
  for (int k = 0; k < cs.num_classes; ++k) {
    if (cs.counts[k] == 0) continue;
    class_means.row(k) = cs.sums.row(k) / cs.counts[k];
    Vector d = class_means.row(k).transpose() - model.mean;
    between.noalias() += d * d.transpose();
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Vector r = x.row(i) - class_means.row(labels[i]);
    within.noalias() += r * r.transpose();
  }
  Matrix centered = x.rowwise() - model.mean.transpose();
  const double scale =
      MeanEigenvalue(centered.transpose() * centered / total);
  if (!(scale > 0.0)) throw NumericError("FitPlda: embeddings have no scatter");
  const double floor = kPldaFloor * scale;
  model.within = Symmetrize(within / total);
  model.between = Symmetrize(between / present);
  FloorEigenvalues(floor, &model.within);
  FloorEigenvalues(floor, &model.between);

  if (trace) trace->clear();
  for (int iter = 0; iter < opts.iterations; ++iter) {
    if (trace) trace->push_back(PldaLogLikelihood(model, x, labels));
    const Matrix w_inv =
        InverseSpd(CholeskyOrThrow(model.within, "PLDA within"));
    const Matrix b_inv =
        InverseSpd(CholeskyOrThrow(model.between, "PLDA between"));
    Matrix new_between = Matrix::Zero(dim, dim);
    Matrix new_within = Matrix::Zero(dim, dim);
    std::vector<Vector> post_means(cs.num_classes);
    for (int k = 0; k < cs.num_classes; ++k) {
      const int n = cs.counts[k];
      if (n == 0) continue;
      Eigen::LLT<Matrix> prec =
          CholeskyOrThrow(b_inv + n * w_inv, "PLDA posterior");
      const Matrix post_cov = InverseSpd(prec);
      post_means[k] =
          prec.solve(w_inv * (cs.sums.row(k).transpose() - n * model.mean));
      new_between.noalias() += post_cov + post_means[k] * post_means[k].transpose();
      new_within.noalias() += n * post_cov;
    }
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Vector r = x.row(i).transpose() - model.mean - post_means[labels[i]];
      new_within.noalias() += r * r.transpose();
    }
    model.between = Symmetrize(new_between / present);
    model.within = Symmetrize(new_within / total);
    FloorEigenvalues(floor, &model.within);
    FloorEigenvalues(floor, &model.between);
  }
  if (trace) trace->push_back(PldaLogLikelihood(model, x, labels));
  return model;
}

PldaScorer::PldaScorer(const PldaModel &model) : mean_(model.mean) {
  const Matrix total = model.between + model.within;
  Eigen::LLT<Matrix> t_llt = CholeskyOrThrow(total, "PLDA total covariance");
  const Matrix t_inv = InverseSpd(t_llt);
  // Schur complement of the joint covariance [[T, B], [B, T]].
  const Matrix schur = Symmetrize(total - model.between * t_inv * model.between);
  Eigen::LLT<Matrix> s_llt = CholeskyOrThrow(schur, "PLDA joint covariance");
  const Matrix a = InverseSpd(s_llt);
  const Matrix c = Symmetrize(-t_inv * model.between * a);
  Q_ = Symmetrize(t_inv - a);
  P_ = -c;
  constant_ = 0.5 * LogDet(t_llt) - 0.5 * LogDet(s_llt);
}

double PldaScorer::Score(const Vector &enrol, const Vector &test) const {
  if (enrol.size() != mean_.size() || test.size() != mean_.size())
    throw std::invalid_argument("PLDA score: dimension mismatch");
  const Vector a = enrol - mean_, b = test - mean_;
  const Vector sum = a + b, diff = a - b;
  const double cross = 0.25 * (sum.dot(P_ * sum) - diff.dot(P_ * diff));
  return 0.5 * a.dot(Q_ * a) + 0.5 * b.dot(Q_ * b) + cross + constant_;
}

double ScorePlda(const PldaModel &model, const Vector &enrol, const Vector &test) {
  return PldaScorer(model).Score(enrol, test);
}

double ScoreCosine(const Vector &a, const Vector &b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine score: dimension mismatch");
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0))
    throw std::invalid_argument("cosine score of a zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

EerResult ComputeEer(const std::vector<double> &scores,
                     const std::vector<bool> &is_target) {
  if (scores.size() != is_target.size())
    throw std::invalid_argument("ComputeEer: scores and labels differ in size");
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double num_target = 0, num_nontarget = 0;
  for (bool t : is_target) (t ? num_target : num_nontarget) += 1;
  if (num_target == 0 || num_nontarget == 0)
    throw std::invalid_argument(
        "ComputeEer needs both target and nontarget trials");
  for (double s : scores)
    if (!std::isfinite(s)) throw DataError("ComputeEer: non-finite score");

  EerResult result;
  // Threshold below every score: everything accepted.
  double rejected_target = 0, rejected_nontarget = 0;
  result.det.push_back({scores[order.front()], 1.0, 0.0});
  result.det.front().threshold = -std::numeric_limits<double>::infinity();
  size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    // Operating point at threshold s: scores strictly below s are rejected.
    DetPoint p{s, 1.0 - rejected_nontarget / num_nontarget,
               rejected_target / num_target};
    if (i > 0) result.det.push_back(p);
    for (; i < order.size() && scores[order[i]] == s; ++i)
      (is_target[order[i]] ? rejected_target : rejected_nontarget) += 1;
  }
  result.det.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});

  const double lo = scores[order.front()], hi = scores[order.back()];
  auto finite = [&](double t) {
    return std::isinf(t) ? (t < 0 ? lo : hi) : t;
  };
  // far - frr decreases along the curve; find the last vertex with
  // far >= frr and interpolate towards the next.
  size_t k = 0;
  for (size_t j = 0; j < result.det.size(); ++j)
    if (result.det[j].far - result.det[j].frr >= 0.0) k = j;
  const DetPoint &a = result.det[k];
  if (a.far == a.frr || k + 1 == result.det.size()) {
    result.eer = 100.0 * a.far;
    result.threshold = finite(a.threshold);
    return result;
  }
  const DetPoint &b = result.det[k + 1];
  const double da = a.far - a.frr, db = b.far - b.frr;
  const double w = da / (da - db);
  const double far = a.far + w * (b.far - a.far);
  const double frr = a.frr + w * (b.frr - a.frr);
  result.eer = 100.0 * 0.5 * (far + frr);
  result.threshold = finite(a.threshold) +
                     w * (finite(b.threshold) - finite(a.threshold));
  return result;
}

void WriteDetCsv(const EerResult &result, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "threshold,far,frr\n" << std::setprecision(17);
  for (const DetPoint &p : result.det)
    out << p.threshold << ',' << p.far << ',' << p.frr << '\n';
  if (!out) throw DataError("write to " + path + " failed");
}

std::string ScoringName(Scoring s) {
  return s == Scoring::kCosine ? "cosine" : "plda";
}

Scoring ParseScoring(const std::string &name) {
  if (name == "cosine") return Scoring::kCosine;
  if (name == "plda") return Scoring::kPlda;
  throw std::invalid_argument("unknown scoring '" + name +
                              "' (expected cosine or plda)");
}

Backend Backend::Train(const Matrix &x, const std::vector<int> &labels,
                       const BackendConfig &config) {
  Backend be;
  be.config_ = config;
  be.chain_ = FitChain(x, config.whiten);
  Matrix y = be.chain_.ApplyRows(x);
  if (config.lda_dim > 0) {
    be.lda_ = FitLda(y, labels, config.lda_dim);
    y = y * be.lda_->projection;
  }
  if (config.scoring == Scoring::kPlda) {
    PldaOptions opts;
    opts.iterations = config.plda_iterations;
    be.plda_ = FitPlda(y, labels, opts);
  }
  be.Prepare();
  return be;
}

void Backend::Prepare() {
  scorer_.reset();
  if (plda_) scorer_.emplace(*plda_);
}

Vector Backend::Transform(const Vector &x) const {
  Vector y = chain_.Apply(x);
  if (lda_) y = lda_->Project(y);
  return y;
}

Matrix Backend::TransformRows(const Matrix &x) const {
  const Eigen::Index out_dim = lda_ ? lda_->OutputDim() : x.cols();
  Matrix out(x.rows(), out_dim);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out.row(i) = Transform(x.row(i).transpose()).transpose();
  return out;
}

double Backend::ScoreTransformed(const Vector &a, const Vector &b) const {
  if (config_.scoring == Scoring::kPlda) {
    if (!scorer_) throw std::logic_error("Backend has no PLDA model");
    return scorer_->Score(a, b);
  }
  return ScoreCosine(a, b);
}

void Backend::Save(const std::string &path) const {
  nlohmann::json j;
  j["whiten"] = config_.whiten;
  j["lda_dim"] = config_.lda_dim;
  j["scoring"] = ScoringName(config_.scoring);
  j["plda_iterations"] = config_.plda_iterations;
  j["mean"] = ToJson(chain_.mean);
  j["whitener"] = chain_.whitener ? ToJson(*chain_.whitener) : nlohmann::json();
  j["lda"] = lda_ ? ToJson(lda_->projection) : nlohmann::json();
  if (plda_) {
    j["plda"] = {{"mean", ToJson(plda_->mean)},
                 {"between", ToJson(plda_->between)},
                 {"within", ToJson(plda_->within)}};
  } else {
    j["plda"] = nullptr;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(1) << '\n';
  if (!out) throw DataError("write to " + path + " failed");
}

Backend Backend::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  Backend be;
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    be.config_.whiten = j.at("whiten").get<bool>();
    be.config_.lda_dim = j.at("lda_dim").get<int>();
    be.config_.scoring = ParseScoring(j.at("scoring").get<std::string>());
    be.config_.plda_iterations = j.at("plda_iterations").get<int>();
    be.chain_.mean = VectorFromJson(j.at("mean"));
    if (!j.at("whitener").is_null())
      be.chain_.whitener = MatrixFromJson(j.at("whitener"));
    if (!j.at("lda").is_null()) be.lda_ = LdaModel{MatrixFromJson(j.at("lda"))};
    if (!j.at("plda").is_null()) {
      const auto &p = j.at("plda");
      be.plda_ = PldaModel{VectorFromJson(p.at("mean")),
                           MatrixFromJson(p.at("between")),
                           MatrixFromJson(p.at("within"))};
    }
  } catch (const nlohmann::json::exception &e) {
    throw DataError(path + ": malformed backend model: " + e.what());
  }
  if (be.config_.scoring == Scoring::kPlda && !be.plda_)
    throw DataError(path + ": PLDA scoring without a PLDA model");
  be.Prepare();
  return be;
}

std::vector<int> IndexLabels(const std::vector<std::string> &labels) {
  std::unordered_map<std::string, int> index;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const std::string &l : labels) {
    auto it = index.emplace(l, static_cast<int>(index.size())).first;
    out.push_back(it->second);
  }
  return out;
}

}  // namespace ivtk
