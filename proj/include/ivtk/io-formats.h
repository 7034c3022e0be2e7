// ivtk/io-formats.h

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

#ifndef IVTK_IO_FORMATS_H_
#define IVTK_IO_FORMATS_H_

// Binary containers.  Everything is little-endian IEEE-754.
//
// Matrix file ("FMX1"), 24-byte header then payload:
//   char[4] magic | u32 dtype (0 = f32, 1 = f64) | u64 rows | u64 cols |
//   rows * cols values, row-major.
//
// Alignment file ("ALN1"):
//   char[4] magic | u32 top_k | u64 num_utts | u64 index_offset |
//   records ... | index
// record: u32 id_len | id bytes | u64 num_frames |
//         per frame: u32 num_entries | num_entries * (u32 component, f32 weight)
// index (at index_offset): num_utts * (u32 id_len | id bytes | u64 offset),
//   where offset is the byte position of the utterance's record.
//
// Model file ("TVM1"):
//   char[4] magic | u32 formulation (0 = standard, 1 = augmented) |
//   u64 C | u64 F | u64 D | f64 prior_offset |
//   f64 UBM weights[C] | UBM means[C][F] | T[C][F][D] | Sigma[C][F][F] |
//   bias[C][F] (standard only)

#include <cstdint>
#include <fstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ivtk/alignment.h"
#include "ivtk/base.h"
#include "ivtk/tv-model.h"

namespace ivtk {

enum class FormatErrorKind {
  kIo,
  kBadMagic,
  kTruncated,
  kUnknownDtype,
  kSizeMismatch,
  kInvariant,
  kOverflow,
};

class FormatError : public DataError {
 public:
  FormatError(FormatErrorKind kind, const std::string &what)
      : DataError(what), kind_(kind) {}
  FormatErrorKind kind() const { return kind_; }

 private:
  FormatErrorKind kind_;
};

enum class Dtype : uint32_t { kF32 = 0, kF64 = 1 };

constexpr size_t kMatrixHeaderBytes = 24;

void WriteMatrix(const Matrix &m, Dtype dtype, const std::string &path);
Matrix ReadMatrix(const std::string &path);
// Reads only the header; returns (dtype, rows, cols).
std::tuple<Dtype, uint64_t, uint64_t> ReadMatrixHeader(const std::string &path);

struct AlignmentArchive {
  uint32_t top_k = 0;
  std::vector<std::string> ids;
  std::vector<SparseAlignment> alignments;
};

// Validates every frame against the archive's top_k before writing anything.
void WriteAlignment(const AlignmentArchive &archive, const std::string &path);
AlignmentArchive ReadAlignment(const std::string &path);

// Random access to one utterance of an alignment file through its index.
// Each reader owns its own file handle.
class AlignmentReader {
 public:
  explicit AlignmentReader(const std::string &path);
  uint32_t top_k() const { return top_k_; }
  const std::vector<std::string> &ids() const { return ids_; }
  bool Contains(const std::string &id) const { return offsets_.count(id) > 0; }
  SparseAlignment Read(const std::string &id);

 private:
  std::string path_;
  std::ifstream in_;
  uint64_t file_size_ = 0;
  uint32_t top_k_ = 0;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, uint64_t> offsets_;
};

void SaveModel(const TvModel &model, const std::string &path);
TvModel LoadModel(const std::string &path);

// Text "enrol_id test_id label" with label in {target, nontarget}.
struct Trial {
  std::string enrol;
  std::string test;
  bool target = false;
};
std::vector<Trial> ReadTrials(const std::string &path);
void WriteTrials(const std::vector<Trial> &trials, const std::string &path);

// Text "key value" lines (Kaldi scp / utt2spk style).
std::vector<std::pair<std::string, std::string>> ReadKeyValueFile(
    const std::string &path);
void WriteKeyValueFile(
    const std::vector<std::pair<std::string, std::string>> &entries,
    const std::string &path);

}  // namespace ivtk

#endif  // IVTK_IO_FORMATS_H_
