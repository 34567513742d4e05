// Copyright 2026 The Probe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <thread>

#include "cli_util.h"
#include "httplib.h"
#include "json.hpp"
#include "probe/annotation.h"
#include "probe/run_io.h"
#include "synthetic_corpus.h"
#include "test_util.h"

namespace probe {
namespace {

using nlohmann::json;
using testing::ReadFile;
using testing::RunProbe;
using testing::TempDir;
using testing::WriteFile;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto setup = testing::MakeSyntheticSetup(20, 21);
    WriteFile(dir_ / "rules.json", setup.mock.ToJson().dump());
    std::string tsv;
    for (const auto& p : setup.corpus) tsv += p.pair_id + "\t" + p.source + "\t" + p.reference + "\n";
    WriteFile(dir_ / "corpus.tsv", tsv);
    WriteFile(dir_ / "probe.yaml",
              "unit: char\n"
              "model_label: toy\n"
              "parallelism: 2\n"
              "batch_size: 7\n"
              "backend:\n  kind: mock\n  path: rules.json\n"
              "corpus:\n  tsv: corpus.tsv\n"
              "curve:\n  k_max: 3\n  samples_per_k: 2\n");
  }

  std::string Out(const std::string& name) const { return (dir_ / name).string(); }
  std::string Config() const { return Out("probe.yaml"); }

  TempDir dir_;
};

std::string WithoutProvenance(const std::filesystem::path& config_json) {
  auto j = ReadJsonFile(config_json);
  j.erase("provenance");
  return j.dump();
}

TEST_F(CliTest, RunWritesTheFileContract) {
  const auto r = RunProbe({"run", "--config", Config(), "--out", Out("r1")}, dir_.path());
  ASSERT_EQ(r.status, 0) << r.err;
  for (const char* f : {"config.json", "valid.jsonl", "enumerations.jsonl", "candidates.jsonl",
                        "summary.json", "summary.md"}) {
    EXPECT_TRUE(std::filesystem::exists(dir_ / "r1" / f)) << f;
  }
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("candidates"), std::string::npos);
  const auto header = ReadJsonFile(dir_ / "r1" / "config.json");
  EXPECT_EQ(header["config"]["unit"], "char");
  EXPECT_EQ(header["config"]["model_label"], "toy");
  EXPECT_EQ(header["provenance"]["execution"]["parallelism"], 2);
  EXPECT_FALSE(header["backend_fingerprint"].get<std::string>().empty());
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  ASSERT_EQ(RunProbe({"run", "--config", Config(), "--out", Out("a")}, dir_.path()).status, 0);
  ASSERT_EQ(RunProbe({"run", "--config", Config(), "--out", Out("b"), "--parallelism", "1",
                      "--batch-size", "64"},
                     dir_.path())
                .status,
            0);
  for (const char* f : {"valid.jsonl", "enumerations.jsonl", "candidates.jsonl", "summary.json",
                        "summary.md"}) {
    EXPECT_EQ(ReadFile(dir_ / "a" / f), ReadFile(dir_ / "b" / f)) << f;
  }
  EXPECT_EQ(WithoutProvenance(dir_ / "a" / "config.json"),
            WithoutProvenance(dir_ / "b" / "config.json"));
}

TEST_F(CliTest, OverridesWinAndAreEchoed) {
  const auto r = RunProbe({"run", "--config", Config(), "--out", Out("o"), "--unit", "word",
                           "--candidate-threshold", "0.2", "--seed", "5"},
                          dir_.path());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto header = ReadJsonFile(dir_ / "o" / "config.json");
  EXPECT_EQ(header["config"]["unit"], "word");
  EXPECT_EQ(header["config"]["candidate_threshold"], 0.2);
  EXPECT_EQ(header["config"]["seed"], 5);
  EXPECT_EQ(ReadJsonFile(dir_ / "o" / "summary.json")["config"]["unit"], "word");
}

TEST_F(CliTest, StagesComposeToRun) {
  ASSERT_EQ(RunProbe({"run", "--config", Config(), "--out", Out("full")}, dir_.path()).status, 0);
  auto r = RunProbe({"validate", "--config", Config(), "--out", Out("s1")}, dir_.path());
  ASSERT_EQ(r.status, 0) << r.err;
  r = RunProbe({"enumerate", "--config", Config(), "--run", Out("s1"), "--out", Out("s2")},
               dir_.path());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir_ / "s2" / "deletions.jsonl"));
  r = RunProbe({"extract", "--config", Config(), "--run", Out("s2"), "--out", Out("s3")},
               dir_.path());
  ASSERT_EQ(r.status, 0) << r.err;
  for (const char* f : {"valid.jsonl", "enumerations.jsonl", "candidates.jsonl", "summary.json",
                        "summary.md"}) {
    EXPECT_EQ(ReadFile(dir_ / "full" / f), ReadFile(dir_ / "s3" / f)) << f;
  }
  EXPECT_EQ(WithoutProvenance(dir_ / "full" / "config.json"),
            WithoutProvenance(dir_ / "s3" / "config.json"));
}

TEST_F(CliTest, WordModeOnUnspacedCorpusNamesErrorAndPair) {
  WriteFile(dir_ / "zh.tsv", "zh-42\t我们的工作\t我们的工作\n");
  const auto r = RunProbe({"run", "--config", Config(), "--corpus", Out("zh.tsv"), "--backend",
                           "mock", "--unit", "word", "--out", Out("zh")},
                          dir_.path());
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("UnsegmentableInput"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("zh-42"), std::string::npos) << r.err;
}

TEST_F(CliTest, ConfigAndUsageErrorsExitTwo) {
  WriteFile(dir_ / "bad.yaml", "unit: char\ncolour: blue\n");
  auto r = RunProbe({"run", "--config", Out("bad.yaml"), "--out", Out("x")}, dir_.path());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
  WriteFile(dir_ / "thr.yaml", "valid_threshold: 0.1\ncandidate_threshold: 0.2\n");
  r = RunProbe({"run", "--config", Out("thr.yaml"), "--out", Out("x")}, dir_.path());
  EXPECT_EQ(r.status, 2);
  r = RunProbe({"run", "--config", Config()}, dir_.path());
  EXPECT_EQ(r.status, 2);
  r = RunProbe({"frobnicate"}, dir_.path());
  EXPECT_EQ(r.status, 2);
  r = RunProbe({"run", "--config", Config(), "--out", Out("x"), "--unit", "sentence"}, dir_.path());
  EXPECT_EQ(r.status, 2);
}

TEST_F(CliTest, BackendFailureExitsOne) {
  const auto r = RunProbe({"run", "--config", Config(), "--backend", "subprocess",
                           "--backend-param", "command=exit 4", "--out", Out("f")},
                          dir_.path());
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("BackendUnavailable"), std::string::npos) << r.err;
}

TEST_F(CliTest, CacheDirFromEnvironment) {
  const auto cache = dir_ / "shared-cache";
  auto r = RunProbe({"run", "--config", Config(), "--out", Out("e1")}, dir_.path(),
                    {"PROBE_CACHE_DIR=" + cache.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(cache / "translations.bin"));
  EXPECT_FALSE(std::filesystem::exists(dir_ / "e1" / "cache"));
  r = RunProbe({"run", "--config", Config(), "--out", Out("e2")}, dir_.path(),
               {"PROBE_CACHE_DIR=" + cache.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto exec = ReadJsonFile(dir_ / "e2" / "config.json")["provenance"]["execution"];
  EXPECT_EQ(exec["cache"]["misses"], 0);
  EXPECT_EQ(exec["cache"]["backend_calls"], 0);
}

TEST_F(CliTest, ReportAndExport) {
  ASSERT_EQ(RunProbe({"run", "--config", Config(), "--out", Out("r")}, dir_.path()).status, 0);
  const RunResult run = ReadRunResult(dir_ / "r");
  ASSERT_GE(run.candidates.size(), 3u);
  {
    AnnotationStore store(dir_ / "ann.jsonl", run);
    store.RecordLabel(run.candidates[0].candidate_id, ErrorCategory::kInability, "a");
    store.RecordLabel(run.candidates[1].candidate_id, ErrorCategory::kMissingParts, "a");
    store.RecordLabel(run.candidates[2].candidate_id, ErrorCategory::kWordChanging, "a");
  }
  const std::string log_before = ReadFile(dir_ / "ann.jsonl");
  auto r = RunProbe({"report", "--run", Out("r"), "--annotations", Out("ann.jsonl"), "--out",
                     Out("rep")},
                    dir_.path());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto summary = ReadJsonFile(dir_ / "rep" / "summary.json");
  EXPECT_EQ(summary["rows"][0]["severe_total"], 2);
  EXPECT_EQ(summary["rows"][0]["word_changing"], 1);
  EXPECT_NE(ReadFile(dir_ / "rep" / "summary.md").find("| 1 | 1 | 0 | 2 ("), std::string::npos);
  r = RunProbe({"export", "--run", Out("r"), "--annotations", Out("ann.jsonl")}, dir_.path());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
  EXPECT_EQ(ReadFile(dir_ / "ann.jsonl"), log_before);
  WriteFile(dir_ / "foreign.jsonl",
            R"({"candidate_id":"ffffffffffffffff","category":"inability","annotator":"a","note":null,"timestamp":"","revision":1})"
            "\n");
  r = RunProbe({"report", "--run", Out("r"), "--annotations", Out("foreign.jsonl"), "--out",
                Out("rep2")},
               dir_.path());
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("ForeignAnnotation"), std::string::npos);
}

TEST_F(CliTest, Curve) {
  const auto r = RunProbe({"curve", "--config", Config(), "--out", Out("c")}, dir_.path());
  ASSERT_EQ(r.status, 0) << r.err;
  const std::string csv = ReadFile(dir_ / "c" / "curve.csv");
  EXPECT_EQ(csv.rfind("k,mean_bleu,ci_low,ci_high,n\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "c" / "curve.svg"));
  EXPECT_EQ(ReadJsonFile(dir_ / "c" / "curve.json")["points"].size(), 4u);
  const auto again = RunProbe({"curve", "--config", Config(), "--out", Out("c2")}, dir_.path());
  ASSERT_EQ(again.status, 0);
  EXPECT_EQ(ReadFile(dir_ / "c2" / "curve.csv"), csv);
}

int FreePort() {
  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  close(fd);
  return ntohs(addr.sin_port);
}

TEST_F(CliTest, ServeAnswersAndStopsOnSigterm) {
  ASSERT_EQ(RunProbe({"run", "--config", Config(), "--out", Out("r")}, dir_.path()).status, 0);
  const int port = FreePort();
  const pid_t child = fork();
  ASSERT_GE(child, 0);
  if (child == 0) {
    const std::string log = (dir_ / "serve.log").string();
    if (freopen(log.c_str(), "w", stderr) == nullptr) _exit(126);
    execl(PROBE_BINARY, PROBE_BINARY, "serve", "--run", Out("r").c_str(), "--port",
          std::to_string(port).c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int i = 0; i < 100 && !res; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    res = client.Get("/api/stats");
  }
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto stats = json::parse(res->body);
  EXPECT_EQ(stats["labeled"], 0);
  const RunResult run = ReadRunResult(dir_ / "r");
  EXPECT_EQ(stats["candidates"], run.candidates.size());
  const auto post = client.Post("/api/candidates/" + run.candidates[0].candidate_id + "/label",
                                R"({"category":"irrelevant","annotator":"cli"})", "application/json");
  ASSERT_TRUE(post);
  EXPECT_EQ(post->status, 200);
  kill(child, SIGTERM);
  int status = 0;
  waitpid(child, &status, 0);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_EQ(ReadAnnotationLog(dir_ / "r" / "annotations.jsonl").size(), 1u);
}

}  // namespace
}  // namespace probe
