// ivtk/cli.h

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

#ifndef IVTK_CLI_H_
#define IVTK_CLI_H_

#include <string>
#include <vector>

namespace ivtk {

enum ExitCode {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

// Entry point of the ivtk binary.  Subcommands: ubm-train, align, tv-train,
// extract, backend-train, score, eer, synth, ensemble.
int RunCli(int argc, const char *const *argv);
int RunCli(const std::vector<std::string> &args);  // args[0] is the program

}  // namespace ivtk

#endif  // IVTK_CLI_H_
