// ivtk/base.h

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

#ifndef IVTK_BASE_H_
#define IVTK_BASE_H_

#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ivtk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Errors caused by malformed or inconsistent input data (files, dimensions).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Errors caused by a numerical breakdown, e.g. a covariance that is not
// positive definite even after flooring.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LogLevel { kVerbose, kInfo, kWarning };

using LogHandler = std::function<void(LogLevel, const std::string &)>;

// Installs a process-wide log sink and returns the previous one.  The default
// sink writes warnings and info lines to stderr.
LogHandler SetLogHandler(LogHandler handler);

// Messages below this level are dropped before reaching the handler.
void SetLogLevel(LogLevel level);

// Number of warnings emitted since process start; tests use it to check that
// a warning path was taken.
uint64_t WarningCount();

void EmitLog(LogLevel level, const std::string &message);

class LogMessage {
 public:
  explicit LogMessage(LogLevel level) : level_(level) {}
  ~LogMessage() { EmitLog(level_, stream_.str()); }
  LogMessage(const LogMessage &) = delete;
  LogMessage &operator=(const LogMessage &) = delete;
  std::ostream &stream() { return stream_; }

 private:
  LogLevel level_;
  std::ostringstream stream_;
};

}  // namespace ivtk

#define IVTK_VLOG ::ivtk::LogMessage(::ivtk::LogLevel::kVerbose).stream()
#define IVTK_LOG ::ivtk::LogMessage(::ivtk::LogLevel::kInfo).stream()
#define IVTK_WARN ::ivtk::LogMessage(::ivtk::LogLevel::kWarning).stream()

#endif  // IVTK_BASE_H_
