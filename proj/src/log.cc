// src/log.cc

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

#include <atomic>
#include <iostream>
#include <mutex>

#include "ivtk/base.h"

namespace ivtk {

namespace {

void DefaultHandler(LogLevel level, const std::string &message) {
  const char *tag = level == LogLevel::kWarning ? "WARNING" :
                    level == LogLevel::kInfo ? "LOG" : "VLOG";
  std::cerr << tag << " (ivtk) " << message << '\n';
}

std::mutex &LogMutex() {
  static std::mutex mutex;
  return mutex;
}

LogHandler &Handler() {
  static LogHandler handler = DefaultHandler;
  return handler;
}

std::atomic<int> g_min_level{static_cast<int>(LogLevel::kWarning)};
std::atomic<uint64_t> g_warning_count{0};

}  // namespace

LogHandler SetLogHandler(LogHandler handler) {
  std::lock_guard<std::mutex> lock(LogMutex());
  LogHandler previous = Handler();
  Handler() = handler ? std::move(handler) : LogHandler(DefaultHandler);
  return previous;
}

void SetLogLevel(LogLevel level) { g_min_level = static_cast<int>(level); }

uint64_t WarningCount() { return g_warning_count.load(); }

void EmitLog(LogLevel level, const std::string &message) {
  if (level == LogLevel::kWarning) ++g_warning_count;
  if (static_cast<int>(level) < g_min_level.load()) return;
  std::lock_guard<std::mutex> lock(LogMutex());
  Handler()(level, message);
}

}  // namespace ivtk
