// tests/test-io-formats.cc

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

#include <cstring>

#include <doctest.h>

#include "ivtk/io-formats.h"
#include "test-util.h"

namespace ivtk {

using testing::ReadBytes;
using testing::TempDir;
using testing::WriteBytes;

namespace {

template <class T>
T ReadAt(const std::string &bytes, size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

TvModel MakeModel(Formulation f, int C, int F, int D, uint64_t seed) {
  std::mt19937_64 rng(seed);
  TvModel m;
  m.formulation = f;
  m.ubm_weights = Vector::Constant(C, 1.0 / C);
  m.ubm_means = testing::RandomMatrix(C, F, rng);
  for (int c = 0; c < C; ++c) {
    m.T.push_back(testing::RandomMatrix(F, D, rng));
    m.sigma.push_back(testing::RandomSpd(F, rng));
  }
  if (f == Formulation::kStandard) {
    m.bias = m.ubm_means;
    m.prior_offset = 0.0;
  } else {
    m.prior_offset = 100.0;
  }
  return m;
}

FormatErrorKind KindOf(const std::function<void()> &f) {
  try {
    f();
  } catch (const FormatError &e) {
    return e.kind();
  }
  FAIL("no FormatError thrown");
  return FormatErrorKind::kIo;
}

}  // namespace

TEST_CASE("matrix file layout for the 2x2 identity") {
  TempDir dir;
  const std::string path = dir.File("eye.mat");
  WriteMatrix(Matrix::Identity(2, 2), Dtype::kF64, path);
  const std::string bytes = ReadBytes(path);
  REQUIRE(bytes.size() == kMatrixHeaderBytes + 4 * sizeof(double));
  CHECK(bytes.substr(0, 4) == "FMX1");
  CHECK(ReadAt<uint32_t>(bytes, 4) == 1u);
  CHECK(ReadAt<uint64_t>(bytes, 8) == 2u);
  CHECK(ReadAt<uint64_t>(bytes, 16) == 2u);
  CHECK(bytes.size() - kMatrixHeaderBytes == 32);
  CHECK(ReadAt<double>(bytes, 24) == 1.0);
  CHECK(ReadAt<double>(bytes, 32) == 0.0);
  CHECK(ReadMatrix(path) == Matrix::Identity(2, 2));
}

TEST_CASE("matrix header records 72 columns") {
  TempDir dir;
  const std::string path = dir.File("mfcc.mat");
  WriteMatrix(Matrix::Zero(3, 72), Dtype::kF32, path);
  auto [dtype, rows, cols] = ReadMatrixHeader(path);
  CHECK(dtype == Dtype::kF32);
  CHECK(rows == 3u);
  CHECK(cols == 72u);
}

TEST_CASE("f32 matrix round trip is bit-identical") {
  TempDir dir;
  std::mt19937_64 rng(5);
  Matrix m = testing::RandomMatrix(5, 3, rng).cast<float>().cast<double>();
  WriteMatrix(m, Dtype::kF32, dir.File("a.mat"));
  Matrix back = ReadMatrix(dir.File("a.mat"));
  CHECK(back == m);
  WriteMatrix(back, Dtype::kF32, dir.File("b.mat"));
  CHECK(ReadBytes(dir.File("a.mat")) == ReadBytes(dir.File("b.mat")));
}

TEST_CASE("f64 matrix round trip is bit-identical") {
  TempDir dir;
  std::mt19937_64 rng(6);
  Matrix m = testing::RandomMatrix(4, 7, rng);
  WriteMatrix(m, Dtype::kF64, dir.File("a.mat"));
  CHECK(ReadMatrix(dir.File("a.mat")) == m);
}

TEST_CASE("matrix reader rejects malformed files") {
  TempDir dir;
  const std::string path = dir.File("m.mat");
  WriteMatrix(Matrix::Identity(2, 2), Dtype::kF64, path);
  const std::string good = ReadBytes(path);

  WriteBytes(path, good.substr(0, good.size() - 3));
  CHECK(KindOf([&] { ReadMatrix(path); }) == FormatErrorKind::kTruncated);

  std::string bad = good;
  bad.replace(0, 4, "XXXX");
  WriteBytes(path, bad);
  CHECK(KindOf([&] { ReadMatrix(path); }) == FormatErrorKind::kBadMagic);

  bad = good;
  bad[4] = 7;
  WriteBytes(path, bad);
  CHECK(KindOf([&] { ReadMatrix(path); }) == FormatErrorKind::kUnknownDtype);

  WriteBytes(path, good + "extra");
  CHECK(KindOf([&] { ReadMatrix(path); }) == FormatErrorKind::kSizeMismatch);

  CHECK(KindOf([&] { ReadMatrix(dir.File("missing.mat")); }) ==
        FormatErrorKind::kIo);
}

TEST_CASE("matrix writer rejects empty matrices") {
  TempDir dir;
  CHECK_THROWS(WriteMatrix(Matrix(0, 3), Dtype::kF64, dir.File("e.mat")));
}

TEST_CASE("alignment round trip") {
  TempDir dir;
  AlignmentArchive a;
  a.top_k = 20;
  a.ids = {"utt1"};
  a.alignments = {{{{3, 0.6f}, {7, 0.4f}}}};
  WriteAlignment(a, dir.File("a.aln"));
  AlignmentArchive b = ReadAlignment(dir.File("a.aln"));
  CHECK(b.top_k == 20u);
  CHECK(b.ids == a.ids);
  CHECK(b.alignments == a.alignments);
  WriteAlignment(b, dir.File("b.aln"));
  CHECK(ReadBytes(dir.File("a.aln")) == ReadBytes(dir.File("b.aln")));
}

TEST_CASE("alignment entry count limited by top-K") {
  TempDir dir;
  AlignmentArchive a;
  a.top_k = 20;
  a.ids = {"u"};
  FrameAlignment frame;
  for (uint32_t c = 0; c < 20; ++c) frame.push_back({c, 0.05f});
  a.alignments = {{frame}};
  CHECK_NOTHROW(WriteAlignment(a, dir.File("ok.aln")));
  CHECK(ReadAlignment(dir.File("ok.aln")).alignments == a.alignments);

  FrameAlignment too_many;
  for (uint32_t c = 0; c < 21; ++c) too_many.push_back({c, 1.0f / 21});
  a.alignments = {{too_many}};
  CHECK_THROWS_AS(WriteAlignment(a, dir.File("bad.aln")), DataError);
}

TEST_CASE("alignment weights must sum to one") {
  TempDir dir;
  AlignmentArchive a;
  a.top_k = 20;
  a.ids = {"u"};
  a.alignments = {{{{0, 0.5f}, {1, 0.4f}}}};
  CHECK(KindOf([&] { WriteAlignment(a, dir.File("bad.aln")); }) ==
        FormatErrorKind::kInvariant);
}

TEST_CASE("alignment reader seeks through the index") {
  TempDir dir;
  AlignmentArchive a;
  a.top_k = 2;
  for (int u = 0; u < 5; ++u) {
    a.ids.push_back("utt" + std::to_string(u));
    SparseAlignment ali;
    for (int t = 0; t <= u; ++t)
      ali.push_back({{static_cast<uint32_t>(t % 3), 1.0f}});
    a.alignments.push_back(ali);
  }
  WriteAlignment(a, dir.File("a.aln"));
  AlignmentReader reader(dir.File("a.aln"));
  CHECK(reader.ids() == a.ids);
  CHECK(reader.Read("utt3") == a.alignments[3]);
  CHECK(reader.Read("utt0") == a.alignments[0]);
  CHECK_FALSE(reader.Contains("nope"));
  CHECK_THROWS_AS(reader.Read("nope"), DataError);
}

TEST_CASE("alignment reader rejects damaged files") {
  TempDir dir;
  AlignmentArchive a;
  a.top_k = 2;
  a.ids = {"x", "y"};
  a.alignments = {{{{0, 1.0f}}, {{1, 1.0f}}}, {{{0, 0.5f}, {1, 0.5f}}}};
  const std::string path = dir.File("a.aln");
  WriteAlignment(a, path);
  const std::string good = ReadBytes(path);
  WriteBytes(path, good.substr(0, good.size() - 5));
  CHECK_THROWS_AS(ReadAlignment(path), FormatError);
  std::string bad = good;
  bad.replace(0, 4, "XXXX");
  WriteBytes(path, bad);
  CHECK(KindOf([&] { ReadAlignment(path); }) == FormatErrorKind::kBadMagic);
}

TEST_CASE("augmented model header stores p") {
  TempDir dir;
  TvModel m = MakeModel(Formulation::kAugmented, 2, 2, 2, 1);
  SaveModel(m, dir.File("m.tvm"));
  const std::string bytes = ReadBytes(dir.File("m.tvm"));
  CHECK(bytes.substr(0, 4) == "TVM1");
  CHECK(ReadAt<uint32_t>(bytes, 4) == 1u);
  CHECK(ReadAt<uint64_t>(bytes, 8) == 2u);
  CHECK(ReadAt<uint64_t>(bytes, 16) == 2u);
  CHECK(ReadAt<uint64_t>(bytes, 24) == 2u);
  CHECK(ReadAt<double>(bytes, 32) == 100.0);
  // weights, means, T, Sigma; no bias.
  CHECK(bytes.size() == 40 + 8 * (2 + 4 + 8 + 8));
}

TEST_CASE("standard model carries the bias and p = 0") {
  TempDir dir;
  TvModel m = MakeModel(Formulation::kStandard, 3, 2, 4, 2);
  SaveModel(m, dir.File("m.tvm"));
  const std::string bytes = ReadBytes(dir.File("m.tvm"));
  CHECK(ReadAt<uint32_t>(bytes, 4) == 0u);
  CHECK(ReadAt<double>(bytes, 32) == 0.0);
  CHECK(bytes.size() == 40 + 8 * (3 + 6 + 24 + 12 + 6));
  TvModel back = LoadModel(dir.File("m.tvm"));
  CHECK(back.bias == m.bias);
}

TEST_CASE("model save-load-save is byte-identical") {
  TempDir dir;
  for (Formulation f : {Formulation::kStandard, Formulation::kAugmented}) {
    TvModel m = MakeModel(f, 3, 4, 5, 7);
    SaveModel(m, dir.File("a.tvm"));
    TvModel back = LoadModel(dir.File("a.tvm"));
    CHECK(back.formulation == m.formulation);
    CHECK(back.prior_offset == m.prior_offset);
    CHECK(back.ubm_weights == m.ubm_weights);
    CHECK(back.ubm_means == m.ubm_means);
    for (int c = 0; c < 3; ++c) {
      CHECK(back.T[c] == m.T[c]);
      CHECK(back.sigma[c] == m.sigma[c]);
    }
    SaveModel(back, dir.File("b.tvm"));
    CHECK(ReadBytes(dir.File("a.tvm")) == ReadBytes(dir.File("b.tvm")));
  }
}

TEST_CASE("model reader rejects malformed files") {
  TempDir dir;
  const std::string path = dir.File("m.tvm");
  SaveModel(MakeModel(Formulation::kAugmented, 2, 2, 2, 3), path);
  const std::string good = ReadBytes(path);
  WriteBytes(path, good.substr(0, good.size() - 8));
  CHECK_THROWS_AS(LoadModel(path), FormatError);
  WriteBytes(path, good + std::string(8, '\0'));
  CHECK(KindOf([&] { LoadModel(path); }) == FormatErrorKind::kSizeMismatch);
  std::string bad = good;
  bad.replace(0, 4, "XXXX");
  WriteBytes(path, bad);
  CHECK(KindOf([&] { LoadModel(path); }) == FormatErrorKind::kBadMagic);
}

TEST_CASE("saving an invalid model fails") {
  TempDir dir;
  TvModel m = MakeModel(Formulation::kStandard, 2, 2, 2, 4);
  m.prior_offset = 3.0;
  CHECK_THROWS_AS(SaveModel(m, dir.File("m.tvm")), DataError);
}

TEST_CASE("trial list round trip") {
  TempDir dir;
  std::vector<Trial> trials = {{"a", "b", true}, {"a", "c", false}};
  WriteTrials(trials, dir.File("trials"));
  std::vector<Trial> back = ReadTrials(dir.File("trials"));
  REQUIRE(back.size() == 2);
  CHECK(back[0].enrol == "a");
  CHECK(back[0].test == "b");
  CHECK(back[0].target);
  CHECK_FALSE(back[1].target);
  WriteBytes(dir.File("bad"), "a b maybe\n");
  CHECK_THROWS_AS(ReadTrials(dir.File("bad")), FormatError);
}

TEST_CASE("key-value file round trip") {
  TempDir dir;
  std::vector<std::pair<std::string, std::string>> kv = {{"u1", "s1"},
                                                         {"u2", "s2"}};
  WriteKeyValueFile(kv, dir.File("utt2spk"));
  CHECK(ReadKeyValueFile(dir.File("utt2spk")) == kv);
}

}  // namespace ivtk
