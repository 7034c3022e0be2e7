// src/io-formats.cc

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

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "ivtk/io-formats.h"

namespace ivtk {

static_assert(std::endian::native == std::endian::little,
              "ivtk file formats assume a little-endian host");

namespace {

constexpr char kMatrixMagic[4] = {'F', 'M', 'X', '1'};
constexpr char kAlignmentMagic[4] = {'A', 'L', 'N', '1'};
constexpr char kModelMagic[4] = {'T', 'V', 'M', '1'};

// Product of sizes with overflow detection.
uint64_t CheckedMul(uint64_t a, uint64_t b, const std::string &what) {
  if (a != 0 && b > std::numeric_limits<uint64_t>::max() / a)
    throw FormatError(FormatErrorKind::kOverflow, what + ": size overflow");
  return a * b;
}

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string &path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_)
      throw FormatError(FormatErrorKind::kIo, "cannot open " + path +
                                                  " for writing");
  }
  template <class T>
  void Put(T v) {
    out_.write(reinterpret_cast<const char *>(&v), sizeof(T));
  }
  void PutBytes(const char *data, size_t n) { out_.write(data, n); }
  void PutString(const std::string &s) {
    if (s.size() > std::numeric_limits<uint32_t>::max())
      throw FormatError(FormatErrorKind::kOverflow, "string too long");
    Put<uint32_t>(static_cast<uint32_t>(s.size()));
    PutBytes(s.data(), s.size());
  }
  uint64_t Position() { return static_cast<uint64_t>(out_.tellp()); }
  void Seek(uint64_t pos) { out_.seekp(static_cast<std::streamoff>(pos)); }
  void Finish() {
    out_.flush();
    if (!out_)
      throw FormatError(FormatErrorKind::kIo, "write to " + path_ + " failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

// Bounds-checked reader: every read is checked against the file length so a
// short file fails with kTruncated instead of returning garbage.
class BinaryReader {
 public:
  explicit BinaryReader(const std::string &path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_)
      throw FormatError(FormatErrorKind::kIo, "cannot open " + path);
    in_.seekg(0, std::ios::end);
    size_ = static_cast<uint64_t>(in_.tellg());
    in_.seekg(0);
  }
  uint64_t size() const { return size_; }
  uint64_t position() const { return pos_; }
  uint64_t remaining() const { return size_ - pos_; }
  void Seek(uint64_t pos) {
    if (pos > size_)
      throw FormatError(FormatErrorKind::kTruncated,
                        path_ + ": offset beyond end of file");
    in_.seekg(static_cast<std::streamoff>(pos));
    pos_ = pos;
  }
  void GetBytes(char *data, uint64_t n) {
    if (n > remaining())
      throw FormatError(FormatErrorKind::kTruncated,
                        path_ + ": truncated file");
    in_.read(data, static_cast<std::streamsize>(n));
    if (!in_) throw FormatError(FormatErrorKind::kIo, path_ + ": read failed");
    pos_ += n;
  }
  template <class T>
  T Get() {
    T v;
    GetBytes(reinterpret_cast<char *>(&v), sizeof(T));
    return v;
  }
  std::string GetString() {
    uint32_t n = Get<uint32_t>();
    std::string s(n, '\0');
    GetBytes(s.data(), n);
    return s;
  }
  void ExpectMagic(const char (&magic)[4]) {
    char got[4];
    if (remaining() < 4)
      throw FormatError(FormatErrorKind::kTruncated,
                        path_ + ": file too short for header");
    GetBytes(got, 4);
    if (std::memcmp(got, magic, 4) != 0)
      throw FormatError(FormatErrorKind::kBadMagic,
                        path_ + ": bad magic, expected " +
                            std::string(magic, 4));
  }

 private:
  std::string path_;
  std::ifstream in_;
  uint64_t size_ = 0;
  uint64_t pos_ = 0;
};

void PutRowMajor(const Matrix &m, BinaryWriter *w) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) w->Put<double>(m(r, c));
}

void GetRowMajor(BinaryReader *r, Matrix *m) {
  for (Eigen::Index i = 0; i < m->rows(); ++i)
    for (Eigen::Index j = 0; j < m->cols(); ++j) (*m)(i, j) = r->Get<double>();
}

}  // namespace

void WriteMatrix(const Matrix &m, Dtype dtype, const std::string &path) {
  if (m.rows() < 1 || m.cols() < 1)
    throw std::invalid_argument("WriteMatrix: rows and cols must be >= 1");
  if (dtype != Dtype::kF32 && dtype != Dtype::kF64)
    throw FormatError(FormatErrorKind::kUnknownDtype, "unknown dtype");
  const uint64_t rows = m.rows(), cols = m.cols();
  CheckedMul(CheckedMul(rows, cols, path), dtype == Dtype::kF32 ? 4 : 8, path);
  BinaryWriter w(path);
  w.PutBytes(kMatrixMagic, 4);
  w.Put<uint32_t>(static_cast<uint32_t>(dtype));
  w.Put<uint64_t>(rows);
  w.Put<uint64_t>(cols);
  for (uint64_t r = 0; r < rows; ++r) {
    for (uint64_t c = 0; c < cols; ++c) {
      if (dtype == Dtype::kF32)
        w.Put<float>(static_cast<float>(m(r, c)));
      else
        w.Put<double>(m(r, c));
    }
  }
  w.Finish();
}

namespace {

std::tuple<Dtype, uint64_t, uint64_t> ReadMatrixHeaderFrom(
    BinaryReader *r, const std::string &path) {
  r->ExpectMagic(kMatrixMagic);
  uint32_t dtype = r->Get<uint32_t>();
  if (dtype > 1)
    throw FormatError(FormatErrorKind::kUnknownDtype,
                      path + ": unknown dtype " + std::to_string(dtype));
  uint64_t rows = r->Get<uint64_t>(), cols = r->Get<uint64_t>();
  return {static_cast<Dtype>(dtype), rows, cols};
}

}  // namespace

std::tuple<Dtype, uint64_t, uint64_t> ReadMatrixHeader(const std::string &path) {
  BinaryReader r(path);
  return ReadMatrixHeaderFrom(&r, path);
}

Matrix ReadMatrix(const std::string &path) {
  BinaryReader r(path);
  auto [dtype, rows, cols] = ReadMatrixHeaderFrom(&r, path);
  const uint64_t elem = dtype == Dtype::kF32 ? 4 : 8;
  const uint64_t payload = CheckedMul(CheckedMul(rows, cols, path), elem, path);
  if (r.remaining() < payload)
    throw FormatError(FormatErrorKind::kTruncated,
                      path + ": truncated payload");
  if (r.remaining() > payload)
    throw FormatError(FormatErrorKind::kSizeMismatch,
                      path + ": trailing bytes after payload");
  Matrix m(rows, cols);
  for (uint64_t i = 0; i < rows; ++i) {
    for (uint64_t j = 0; j < cols; ++j) {
      m(i, j) = dtype == Dtype::kF32 ? static_cast<double>(r.Get<float>())
                                     : r.Get<double>();
    }
  }
  return m;
}

void ValidateAlignment(const SparseAlignment &alignment, uint32_t top_k) {
  for (size_t t = 0; t < alignment.size(); ++t) {
    const FrameAlignment &frame = alignment[t];
    if (frame.size() > top_k)
      throw FormatError(FormatErrorKind::kInvariant,
                        "frame " + std::to_string(t) + " has " +
                            std::to_string(frame.size()) +
                            " entries, more than top-k " +
                            std::to_string(top_k));
    double sum = 0.0;
    for (const AlignmentEntry &e : frame) {
      if (!(e.weight >= 0.0f && e.weight <= 1.0f))
        throw FormatError(FormatErrorKind::kInvariant,
                          "frame " + std::to_string(t) +
                              " has a weight outside [0, 1]");
      sum += e.weight;
    }
    if (std::abs(sum - 1.0) > kAlignmentSumTolerance)
      throw FormatError(FormatErrorKind::kInvariant,
                        "frame " + std::to_string(t) + " weights sum to " +
                            std::to_string(sum) + ", not 1");
  }
}

void WriteAlignment(const AlignmentArchive &archive, const std::string &path) {
  if (archive.ids.size() != archive.alignments.size())
    throw std::invalid_argument("WriteAlignment: ids/alignments size mismatch");
  for (size_t u = 0; u < archive.alignments.size(); ++u) {
    try {
      ValidateAlignment(archive.alignments[u], archive.top_k);
    } catch (const FormatError &e) {
      throw FormatError(e.kind(), "utterance " + archive.ids[u] + ": " +
                                      e.what());
    }
  }
  BinaryWriter w(path);
  w.PutBytes(kAlignmentMagic, 4);
  w.Put<uint32_t>(archive.top_k);
  w.Put<uint64_t>(archive.ids.size());
  const uint64_t index_offset_pos = w.Position();
  w.Put<uint64_t>(0);  // patched below
  std::vector<uint64_t> offsets;
  offsets.reserve(archive.ids.size());
  for (size_t u = 0; u < archive.ids.size(); ++u) {
    offsets.push_back(w.Position());
    w.PutString(archive.ids[u]);
    const SparseAlignment &ali = archive.alignments[u];
    w.Put<uint64_t>(ali.size());
    for (const FrameAlignment &frame : ali) {
      w.Put<uint32_t>(static_cast<uint32_t>(frame.size()));
      for (const AlignmentEntry &e : frame) {
        w.Put<uint32_t>(e.component);
        w.Put<float>(e.weight);
      }
    }
  }
  const uint64_t index_offset = w.Position();
  for (size_t u = 0; u < archive.ids.size(); ++u) {
    w.PutString(archive.ids[u]);
    w.Put<uint64_t>(offsets[u]);
  }
  w.Seek(index_offset_pos);
  w.Put<uint64_t>(index_offset);
  w.Finish();
}

namespace {

struct AlignmentHeader {
  uint32_t top_k;
  uint64_t index_offset;
  std::vector<std::string> ids;
  std::vector<uint64_t> offsets;
};

AlignmentHeader ReadAlignmentHeader(BinaryReader *r, const std::string &path) {
  AlignmentHeader h;
  r->ExpectMagic(kAlignmentMagic);
  h.top_k = r->Get<uint32_t>();
  uint64_t num_utts = r->Get<uint64_t>();
  uint64_t index_offset = r->Get<uint64_t>();
  h.index_offset = index_offset;
  const uint64_t records_begin = r->position();
  if (index_offset < records_begin || index_offset > r->size())
    throw FormatError(FormatErrorKind::kTruncated,
                      path + ": index offset outside file");
  r->Seek(index_offset);
  // Each index entry takes at least 12 bytes.
  if (num_utts > r->remaining() / 12)
    throw FormatError(FormatErrorKind::kTruncated,
                      path + ": index shorter than declared utterance count");
  h.ids.reserve(num_utts);
  h.offsets.reserve(num_utts);
  for (uint64_t u = 0; u < num_utts; ++u) {
    h.ids.push_back(r->GetString());
    uint64_t off = r->Get<uint64_t>();
    if (off < records_begin || off >= index_offset)
      throw FormatError(FormatErrorKind::kSizeMismatch,
                        path + ": record offset outside record area");
    h.offsets.push_back(off);
  }
  if (r->remaining() != 0)
    throw FormatError(FormatErrorKind::kSizeMismatch,
                      path + ": trailing bytes after index");
  return h;
}

SparseAlignment ReadAlignmentRecord(BinaryReader *r, uint64_t offset,
                                    uint64_t limit, const std::string &id,
                                    uint32_t top_k, const std::string &path) {
  r->Seek(offset);
  std::string stored_id = r->GetString();
  if (stored_id != id)
    throw FormatError(FormatErrorKind::kSizeMismatch,
                      path + ": index points at record '" + stored_id +
                          "' for utterance '" + id + "'");
  uint64_t num_frames = r->Get<uint64_t>();
  // Each frame takes at least 4 bytes.
  if (num_frames > (limit - r->position()) / 4)
    throw FormatError(FormatErrorKind::kTruncated,
                      path + ": record for '" + id +
                          "' shorter than its declared frame count");
  SparseAlignment ali(num_frames);
  for (uint64_t t = 0; t < num_frames; ++t) {
    uint32_t n = r->Get<uint32_t>();
    if (n > top_k)
      throw FormatError(FormatErrorKind::kInvariant,
                        path + ": frame with more entries than top-k");
    if (static_cast<uint64_t>(n) * 8 > limit - r->position())
      throw FormatError(FormatErrorKind::kTruncated,
                        path + ": frame record shorter than declared");
    ali[t].resize(n);
    for (uint32_t k = 0; k < n; ++k) {
      ali[t][k].component = r->Get<uint32_t>();
      ali[t][k].weight = r->Get<float>();
    }
  }
  if (r->position() > limit)
    throw FormatError(FormatErrorKind::kTruncated,
                      path + ": record overruns its region");
  return ali;
}

}  // namespace

AlignmentArchive ReadAlignment(const std::string &path) {
  BinaryReader r(path);
  AlignmentHeader h = ReadAlignmentHeader(&r, path);
  AlignmentArchive archive;
  archive.top_k = h.top_k;
  archive.ids = h.ids;
  archive.alignments.reserve(h.ids.size());
  // Records are laid out back to back in index order; each one ends where
  // the next record (or the index) begins.
  const uint64_t index_offset = h.index_offset;
  for (size_t u = 0; u < h.ids.size(); ++u) {
    uint64_t limit = u + 1 < h.ids.size() ? h.offsets[u + 1] : index_offset;
    if (limit < h.offsets[u])
      throw FormatError(FormatErrorKind::kSizeMismatch,
                        path + ": records out of order");
    archive.alignments.push_back(ReadAlignmentRecord(
        &r, h.offsets[u], limit, h.ids[u], h.top_k, path));
    if (r.position() != limit)
      throw FormatError(FormatErrorKind::kSizeMismatch,
                        path + ": record size disagrees with layout");
  }
  return archive;
}

AlignmentReader::AlignmentReader(const std::string &path) : path_(path) {
  BinaryReader r(path);
  AlignmentHeader h = ReadAlignmentHeader(&r, path);
  file_size_ = r.size();
  top_k_ = h.top_k;
  ids_ = h.ids;
  for (size_t u = 0; u < h.ids.size(); ++u) offsets_[h.ids[u]] = h.offsets[u];
}

SparseAlignment AlignmentReader::Read(const std::string &id) {
  auto it = offsets_.find(id);
  if (it == offsets_.end())
    throw DataError(path_ + ": no alignment for utterance '" + id + "'");
  BinaryReader r(path_);
  return ReadAlignmentRecord(&r, it->second, file_size_, id, top_k_, path_);
}

void SaveModel(const TvModel &model, const std::string &path) {
  model.Check();
  const uint64_t num_gauss = model.NumComponents(), feat_dim = model.FeatDim(),
                 ivector_dim = model.LatentDim();
  BinaryWriter w(path);
  w.PutBytes(kModelMagic, 4);
  w.Put<uint32_t>(static_cast<uint32_t>(model.formulation));
  w.Put<uint64_t>(num_gauss);
  w.Put<uint64_t>(feat_dim);
  w.Put<uint64_t>(ivector_dim);
  w.Put<double>(model.prior_offset);
  for (uint64_t c = 0; c < num_gauss; ++c) w.Put<double>(model.ubm_weights(c));
  PutRowMajor(model.ubm_means, &w);
  for (const Matrix &t : model.T) PutRowMajor(t, &w);
  for (const Matrix &s : model.sigma) PutRowMajor(s, &w);
  if (model.formulation == Formulation::kStandard) PutRowMajor(model.bias, &w);
  w.Finish();
}

TvModel LoadModel(const std::string &path) {
  BinaryReader r(path);
  r.ExpectMagic(kModelMagic);
  uint32_t tag = r.Get<uint32_t>();
  if (tag > 1)
    throw FormatError(FormatErrorKind::kSizeMismatch,
                      path + ": unknown formulation tag");
  TvModel model;
  model.formulation = static_cast<Formulation>(tag);
  const uint64_t num_gauss = r.Get<uint64_t>(), feat_dim = r.Get<uint64_t>(),
                 ivector_dim = r.Get<uint64_t>();
  model.prior_offset = r.Get<double>();
  // Expected tensor payload in doubles.
  uint64_t cf = CheckedMul(num_gauss, feat_dim, path);
  uint64_t n = num_gauss + cf + CheckedMul(cf, ivector_dim, path) +
               CheckedMul(cf, feat_dim, path);
  if (model.formulation == Formulation::kStandard) n += cf;
  const uint64_t bytes = CheckedMul(n, 8, path);
  if (r.remaining() != bytes)
    throw FormatError(r.remaining() < bytes ? FormatErrorKind::kTruncated
                                            : FormatErrorKind::kSizeMismatch,
                      path + ": header dimensions disagree with tensor data");
  model.ubm_weights.resize(num_gauss);
  for (uint64_t c = 0; c < num_gauss; ++c) model.ubm_weights(c) = r.Get<double>();
  model.ubm_means.resize(num_gauss, feat_dim);
  GetRowMajor(&r, &model.ubm_means);
  model.T.assign(num_gauss, Matrix(feat_dim, ivector_dim));
  for (Matrix &t : model.T) GetRowMajor(&r, &t);
  model.sigma.assign(num_gauss, Matrix(feat_dim, feat_dim));
  for (Matrix &s : model.sigma) GetRowMajor(&r, &s);
  if (model.formulation == Formulation::kStandard) {
    model.bias.resize(num_gauss, feat_dim);
    GetRowMajor(&r, &model.bias);
  }
  model.Check();
  return model;
}

std::vector<Trial> ReadTrials(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatErrorKind::kIo, "cannot open " + path);
  std::vector<Trial> trials;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    Trial t;
    std::string label, extra;
    if (!(ss >> t.enrol)) continue;  // blank line
    if (!(ss >> t.test >> label) || (ss >> extra))
      throw FormatError(FormatErrorKind::kInvariant,
                        path + ":" + std::to_string(lineno) +
                            ": expected 'enrol_id test_id label'");
    if (label == "target")
      t.target = true;
    else if (label != "nontarget")
      throw FormatError(FormatErrorKind::kInvariant,
                        path + ":" + std::to_string(lineno) +
                            ": label must be target or nontarget");
    trials.push_back(std::move(t));
  }
  return trials;
}

void WriteTrials(const std::vector<Trial> &trials, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw FormatError(FormatErrorKind::kIo, "cannot write " + path);
  for (const Trial &t : trials)
    out << t.enrol << ' ' << t.test << ' '
        << (t.target ? "target" : "nontarget") << '\n';
  if (!out) throw FormatError(FormatErrorKind::kIo, "write to " + path + " failed");
}

std::vector<std::pair<std::string, std::string>> ReadKeyValueFile(
    const std::string &path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatErrorKind::kIo, "cannot open " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string key, value, extra;
    if (!(ss >> key)) continue;
    if (!(ss >> value) || (ss >> extra))
      throw FormatError(FormatErrorKind::kInvariant,
                        path + ":" + std::to_string(lineno) +
                            ": expected 'key value'");
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

void WriteKeyValueFile(
    const std::vector<std::pair<std::string, std::string>> &entries,
    const std::string &path) {
  std::ofstream out(path);
  if (!out) throw FormatError(FormatErrorKind::kIo, "cannot write " + path);
  for (const auto &[k, v] : entries) out << k << ' ' << v << '\n';
  if (!out) throw FormatError(FormatErrorKind::kIo, "write to " + path + " failed");
}

}  // namespace ivtk
