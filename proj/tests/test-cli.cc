// tests/test-cli.cc

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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "ivtk/cli.h"
#include "ivtk/io-formats.h"
#include "test-util.h"

namespace ivtk {

namespace {

namespace fs = std::filesystem;

int Run(std::vector<std::string> args) {
  args.insert(args.begin(), "ivtk");
  return RunCli(args);
}

// Runs the installed binary and captures stdout; returns the exit status.
int RunBinary(const std::string &args, std::string *out) {
  const char *bin = std::getenv("IVTK_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "IVTK_BIN is not set");
  std::string cmd = std::string(bin) + " " + args + " 2>/dev/null";
  FILE *pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  size_t n;
  out->clear();
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) out->append(buf, n);
  int status = pclose(pipe);
  return WEXITSTATUS(status);
}

std::string Slurp(const std::string &path) { return testing::ReadBytes(path); }

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream(path) << text;
}

// A tiny synthetic corpus in `dir`/name.
void Synth(const testing::TempDir &dir, const std::string &name, int seed,
           int speakers) {
  REQUIRE(Run({"synth", "--out-dir", dir.File(name), "--components", "4",
               "--feat-dim", "4", "--latent-dim", "3", "--speakers",
               std::to_string(speakers), "--utts-per-speaker", "3",
               "--min-frames", "40", "--max-frames", "60", "--seed",
               std::to_string(seed)}) == kExitOk);
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(Run({}) == kExitUsage);
  CHECK(Run({"no-such-command"}) == kExitUsage);
  CHECK(Run({"synth"}) == kExitUsage);
  CHECK(Run({"synth", "--out-dir", "/tmp/x", "--bogus", "1"}) == kExitUsage);
  CHECK(Run({"eer", "--scores", "/nonexistent", "--trials", "/nonexistent"}) ==
        kExitUsage);
  CHECK(Run({"align", "--feats", "/nonexistent", "--top-k", "0"}) == kExitUsage);
}

TEST_CASE("help lists the flags of every subcommand") {
  std::string out;
  CHECK(RunBinary("--help", &out) == 0);
  for (const char *cmd : {"ubm-train", "align", "tv-train", "extract",
                          "backend-train", "score", "eer", "synth", "ensemble"})
    CHECK(out.find(cmd) != std::string::npos);
  CHECK(RunBinary("align --help", &out) == 0);
  for (const char *flag : {"--feats", "--ubm-diag", "--ubm-full", "--model",
                           "--top-k", "--prune", "--workers", "--batch-size",
                           "--out"})
    CHECK(out.find(flag) != std::string::npos);
  // Defaults are shown.
  CHECK(out.find("20") != std::string::npos);
  CHECK(out.find("0.025") != std::string::npos);
  CHECK(RunBinary("tv-train --help", &out) == 0);
  for (const char *flag : {"--config", "--seed", "--resume", "--checkpoint-dir",
                           "--metrics"})
    CHECK(out.find(flag) != std::string::npos);
  CHECK(RunBinary("ensemble --help", &out) == 0);
  for (const char *flag : {"--seeds", "--eval-feats", "--eval-trials",
                           "--backend-feats", "--backend-utt2spk", "--scoring",
                           "--lda-dim", "--whiten", "--eval-interval"})
    CHECK(out.find(flag) != std::string::npos);
  CHECK(RunBinary("synth", &out) == 1);
}

TEST_CASE("synth writes a reproducible corpus") {
  testing::TempDir dir;
  Synth(dir, "a", 3, 2);
  Synth(dir, "b", 3, 2);
  for (const char *f : {"feats.scp", "utt2spk", "trials", "truth.tvm",
                        "truth-ubm.mat", "feats/spk0001-utt0002.mat"}) {
    CHECK(fs::exists(dir.File(std::string("a/") + f)));
    CHECK(Slurp(dir.File(std::string("a/") + f)) ==
          Slurp(dir.File(std::string("b/") + f)));
  }
  CHECK(ReadTrials(dir.File("a/trials")).size() == 15);
  CHECK(ReadMatrix(dir.File("a/feats/spk0000-utt0000.mat")).cols() == 4);
  CHECK(LoadModel(dir.File("a/truth.tvm")).prior_offset == 100.0);
}

TEST_CASE("data and numeric errors map to exit codes") {
  testing::TempDir dir;
  testing::WriteBytes(dir.File("junk.mat"), "not a matrix file at all");
  WriteText(dir.File("feats.scp"), "u1 junk.mat\n");
  CHECK(Run({"ubm-train", "--feats", dir.File("feats.scp"), "--num-components",
             "1", "--out-diag", dir.File("d.mat"), "--out-full",
             dir.File("f.mat")}) == kExitData);

  // Constant features have no variance.
  WriteMatrix(Matrix::Ones(50, 2), Dtype::kF32, dir.File("const.mat"));
  WriteText(dir.File("const.scp"), "u1 const.mat\n");
  CHECK(Run({"ubm-train", "--feats", dir.File("const.scp"), "--num-components",
             "1", "--out-diag", dir.File("d.mat"), "--out-full",
             dir.File("f.mat")}) == kExitNumeric);

  WriteText(dir.File("scores"), "a b 1.0\n");
  WriteText(dir.File("trials"), "a b target\n");
  CHECK(Run({"eer", "--scores", dir.File("scores"), "--trials",
             dir.File("trials")}) == kExitData);
  WriteText(dir.File("bad-config"), "iterations = -3\n");
  CHECK(Run({"tv-train", "--config", dir.File("bad-config"), "--feats",
             dir.File("const.scp"), "--ubm-diag", dir.File("junk.mat"),
             "--ubm-full", dir.File("junk.mat"), "--out", dir.File("m.tvm")}) ==
        kExitData);
}

TEST_CASE("eer subcommand") {
  testing::TempDir dir;
  WriteText(dir.File("trials"), "a b target\na c nontarget\nb c nontarget\n");
  WriteText(dir.File("scores"), "a b 2.0\na c 0.5\nb c 1.0\n");
  std::string out;
  CHECK(RunBinary("eer --scores " + dir.File("scores") + " --trials " +
                      dir.File("trials") + " --det-csv " + dir.File("det.csv"),
                  &out) == 0);
  CHECK(out.rfind("EER 0% at threshold", 0) == 0);
  CHECK(Slurp(dir.File("det.csv")).rfind("threshold,far,frr\n", 0) == 0);
}

TEST_CASE("full chain on a tiny synthetic corpus") {
  testing::TempDir dir;
  Synth(dir, "train", 1, 8);
  Synth(dir, "eval", 2, 4);
  const std::string ubm_diag = dir.File("ubm-diag.mat"),
                    ubm_full = dir.File("ubm-full.mat");
  REQUIRE(Run({"ubm-train", "--feats", dir.File("train/feats.scp"),
               "--num-components", "4", "--diag-iterations", "5",
               "--full-iterations", "2", "--seed", "1", "--out-diag", ubm_diag,
               "--out-full", ubm_full}) == kExitOk);
  const std::vector<std::string> ubm = {"--ubm-diag", ubm_diag, "--ubm-full",
                                        ubm_full};
  auto with_ubm = [&](std::vector<std::string> args) {
    args.insert(args.end(), ubm.begin(), ubm.end());
    return Run(args);
  };
  CHECK(with_ubm({"align", "--feats", dir.File("train/feats.scp"), "--out",
                  dir.File("train.aln")}) == kExitOk);
  AlignmentArchive ali = ReadAlignment(dir.File("train.aln"));
  CHECK(ali.top_k == 20u);
  CHECK(ali.ids.size() == 24);

  WriteText(dir.File("config"),
            "latent_dim = 3\niterations = 3\nrealign_interval = 1\n"
            "seeds = 1, 2\nbatch_size_utts = 5\n");
  const std::string model = dir.File("model.tvm");
  std::string out;
  CHECK(with_ubm({"tv-train", "--config", dir.File("config"), "--feats",
                  dir.File("train/feats.scp"), "--out", model, "--metrics",
                  dir.File("train-metrics.csv"), "--checkpoint-dir",
                  dir.File("ckpt")}) == kExitOk);
  CHECK(LoadModel(model).LatentDim() == 3);
  CHECK(fs::exists(dir.File("ckpt/iter-3.tvm")));
  std::ifstream metrics(dir.File("train-metrics.csv"));
  std::string header;
  std::getline(metrics, header);
  CHECK(header == "seed,iteration,aux,eer,wall_seconds");

  // Same seed again gives the same model.
  CHECK(with_ubm({"tv-train", "--config", dir.File("config"), "--feats",
                  dir.File("train/feats.scp"), "--out", dir.File("again.tvm"),
                  "--workers", "2"}) == kExitOk);
  CHECK(Slurp(model) == Slurp(dir.File("again.tvm")));

  CHECK(with_ubm({"align", "--feats", dir.File("eval/feats.scp"), "--model",
                  model, "--out", dir.File("eval.aln")}) == kExitOk);
  CHECK(with_ubm({"extract", "--model", model, "--feats",
                  dir.File("train/feats.scp"), "--out",
                  dir.File("train-emb.mat")}) == kExitOk);
  CHECK(with_ubm({"extract", "--model", model, "--feats",
                  dir.File("eval/feats.scp"), "--out",
                  dir.File("eval-emb.mat")}) == kExitOk);
  for (const char *scoring : {"cosine", "plda"}) {
    CHECK(Run({"backend-train", "--embeddings", dir.File("train-emb.mat"),
               "--utt2spk", dir.File("train/utt2spk"), "--out",
               dir.File("backend.json"), "--scoring", scoring, "--lda-dim",
               "2", "--max-speakers", "6"}) == kExitOk);
    CHECK(Run({"score", "--backend", dir.File("backend.json"), "--embeddings",
               dir.File("eval-emb.mat"), "--trials", dir.File("eval/trials"),
               "--out", dir.File("scores")}) == kExitOk);
    CHECK(Run({"eer", "--scores", dir.File("scores"), "--trials",
               dir.File("eval/trials")}) == kExitOk);
  }

  CHECK(with_ubm({"ensemble", "--config", dir.File("config"), "--feats",
                  dir.File("train/feats.scp"), "--out",
                  dir.File("ensemble.csv"), "--eval-feats",
                  dir.File("eval/feats.scp"), "--eval-trials",
                  dir.File("eval/trials"), "--backend-feats",
                  dir.File("train/feats.scp"), "--backend-utt2spk",
                  dir.File("train/utt2spk"), "--scoring", "cosine",
                  "--eval-interval", "0"}) == kExitOk);
  std::ifstream csv(dir.File("ensemble.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(csv, line);) lines.push_back(line);
  CHECK(lines.size() == 1 + 3 * 2 + 3);
  CHECK(lines.back().rfind("avg,3,", 0) == 0);
  CHECK(lines.back().find("nan") == std::string::npos);

  // Evaluation flags go together.
  CHECK(with_ubm({"ensemble", "--config", dir.File("config"), "--feats",
                  dir.File("train/feats.scp"), "--out", dir.File("e2.csv"),
                  "--eval-feats", dir.File("eval/feats.scp")}) == kExitData);
}

}  // namespace ivtk
