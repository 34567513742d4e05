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

#include "probe/pipeline.h"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "naive_algorithm.h"
#include "probe/error.h"
#include "probe/run_io.h"
#include "synthetic_corpus.h"
#include "test_util.h"

namespace probe {
namespace {

using testing::MakeSyntheticSetup;
using testing::NaiveCandidates;
using testing::RecordingTranslator;
using testing::TempDir;

MockTranslator Identity() { return MockTranslator(MockConfig{}); }

RunConfig MockConfigFor(UnitKind unit) {
  RunConfig c;
  c.unit = unit;
  c.backend.kind = BackendKind::kMockDictionary;
  return c;
}

std::set<std::pair<std::string, std::size_t>> CandidateSet(const RunResult& r) {
  std::set<std::pair<std::string, std::size_t>> out;
  for (const auto& c : r.candidates) {
    out.insert({c.enumeration.deletion.pair_id, c.enumeration.deletion.position});
  }
  return out;
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

TEST(FindValidTest, IdentityBackendKeepsEverything) {
  auto backend = Identity();
  std::vector<TestPair> corpus;
  for (int i = 0; i < 10; ++i) {
    const std::string s = "sentence number " + std::to_string(i) + " is here";
    corpus.push_back({std::to_string(i), s, s});
  }
  const RunConfig config = MockConfigFor(UnitKind::kCharacter);
  const auto stage = FindValid(corpus, StageContext{backend}, config);
  ASSERT_EQ(stage.valid.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(stage.valid[i].pair.pair_id, std::to_string(i));
    EXPECT_EQ(stage.valid[i].bleu.value, 1.0);
  }
  EXPECT_EQ(stage.corpus_mean_bleu, 1.0);
}

TEST(FindValidTest, ThresholdOneIsInclusive) {
  auto backend = Identity();
  std::vector<TestPair> corpus = {{"a", "one two three four", "one two three four"},
                                  {"b", "one two three four", "one two three five"}};
  RunConfig config = MockConfigFor(UnitKind::kCharacter);
  config.valid_threshold = 1.0;
  const auto stage = FindValid(corpus, StageContext{backend}, config);
  ASSERT_EQ(stage.valid.size(), 1u);
  EXPECT_EQ(stage.valid[0].pair.pair_id, "a");
}

TEST(FindValidTest, EmptyCorpus) {
  auto backend = Identity();
  EXPECT_EQ(CodeOf([&] { FindValid({}, StageContext{backend}, MockConfigFor(UnitKind::kWord)); }),
            ErrorCode::kEmptyCorpus);
}

TEST(RunConfigTest, ThresholdInvariant) {
  RunConfig c = MockConfigFor(UnitKind::kCharacter);
  c.Validate();
  c.valid_threshold = 1.0 + 1e-9;
  EXPECT_EQ(CodeOf([&] { c.Validate(); }), ErrorCode::kConfigError);
  c.valid_threshold = 0.5;
  c.candidate_threshold = 0.5;
  EXPECT_EQ(CodeOf([&] { c.Validate(); }), ErrorCode::kConfigError);
  c.candidate_threshold = -0.1;
  EXPECT_EQ(CodeOf([&] { c.Validate(); }), ErrorCode::kConfigError);
}

TEST(RunConfigTest, JsonRoundTrip) {
  RunConfig c = MockConfigFor(UnitKind::kWord);
  c.valid_threshold = 0.6;
  c.candidate_threshold = 0.2;
  c.metric_tokenization = MetricTokenization::kCharacterLevel;
  c.max_order = 3;
  c.backend.parameters["path"] = "/tmp/rules.json";
  c.lexicon_path = "/tmp/lex.txt";
  c.seed = 99;
  c.model_label = "En-Zh-1M";
  const RunConfig back = RunConfig::FromJson(c.ToJson());
  EXPECT_EQ(back.ToJson(), c.ToJson());
}

TEST(GenerateEnumerationsTest, FortyCharactersFortyRecords) {
  auto backend = Identity();
  const std::string s(40, 'q');
  std::vector<ValidSentence> valid = {{{"x", s, s}, s, {}}};
  valid[0].bleu.value = 1.0;
  const auto groups =
      GenerateEnumerations(valid, StageContext{backend}, MockConfigFor(UnitKind::kCharacter));
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].size(), 40u);
}

TEST(GenerateEnumerationsTest, EmptyInput) {
  auto backend = Identity();
  EXPECT_EQ(CodeOf([&] {
              GenerateEnumerations({}, StageContext{backend}, MockConfigFor(UnitKind::kWord));
            }),
            ErrorCode::kEmptyInput);
}

TEST(RunTest, WordModeOnUnspacedTextNamesPairAndStage) {
  auto backend = Identity();
  std::vector<TestPair> corpus = {{"zh-7", "我们的工作", "我们的工作"}};
  try {
    probe::Run(corpus, MockConfigFor(UnitKind::kWord), StageContext{backend});
    FAIL() << "expected UnsegmentableInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsegmentableInput);
    EXPECT_NE(std::string(e.what()).find("zh-7"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("generate_enumerations"), std::string::npos);
  }
}

TEST(RunTest, WordModeWithLexicon) {
  auto backend = Identity();
  const Lexicon lexicon({"我们", "工作"});
  std::vector<TestPair> corpus = {{"zh-7", "我们的工作", "我们的工作"}};
  StageContext ctx{backend};
  ctx.lexicon = &lexicon;
  const auto r = probe::Run(corpus, MockConfigFor(UnitKind::kWord), ctx);
  ASSERT_EQ(r.enumerations.size(), 3u);
  EXPECT_EQ(r.enumerations[0].deletion.perturbed_text, "的工作");
  EXPECT_EQ(r.enumerations[1].deletion.perturbed_text, "我们工作");
  EXPECT_EQ(r.enumerations[2].deletion.perturbed_text, "我们的");
}

TEST(FindCandidatesTest, IdentityLetterDeletionStaysHigh) {
  auto backend = Identity();
  const std::string s = "a b c d e f g h i j";
  std::vector<TestPair> corpus = {{"1", s, s}};
  const auto r = probe::Run(corpus, MockConfigFor(UnitKind::kCharacter), StageContext{backend});
  EXPECT_EQ(r.enumerations.size(), s.size());
  EXPECT_TRUE(r.candidates.empty());

  // Deleting "e": 9 tokens against 10; matches 9, 7 of 8, 5 of 7, 3 of 6.
  const double bp = std::exp(1.0 - 10.0 / 9.0);
  const double expected = bp * std::pow(1.0 * (8.0 / 9.0) * (6.0 / 8.0) * (4.0 / 7.0), 0.25);
  const auto& e = r.enumerations[8];
  ASSERT_EQ(e.deletion.deleted_surface, "e");
  EXPECT_NEAR(e.bleu.value, expected, 1e-12);
  EXPECT_GT(e.bleu.value, 0.1);
  // Deleting a space merges two tokens.
  const auto& sp = r.enumerations[1];
  ASSERT_EQ(sp.deletion.deleted_surface, " ");
  EXPECT_GT(sp.bleu.value, 0.1);
}

TEST(FindCandidatesTest, FixedOutputOnTriggerDeletions) {
  MockConfig mock;
  MockRule rule;
  rule.absent_tokens = {"anchor"};
  rule.action = MockAction::kFixedOutput;
  rule.output = "nothing to see";
  mock.rules = {rule};
  MockTranslator backend(mock);
  const std::string s = "we hold the anchor of the ship";
  std::vector<TestPair> corpus = {{"1", s, s}};
  const auto r = probe::Run(corpus, MockConfigFor(UnitKind::kCharacter), StageContext{backend});
  std::set<std::size_t> got;
  for (const auto& c : r.candidates) got.insert(c.enumeration.deletion.position);
  std::set<std::size_t> want;
  const auto at = s.find("anchor");
  // Removing a neighbouring space fuses the trigger with its neighbour.
  for (std::size_t i = at - 1; i <= at + 6; ++i) want.insert(i);
  EXPECT_EQ(got, want);

  const auto rw = probe::Run(corpus, MockConfigFor(UnitKind::kWord), StageContext{backend});
  ASSERT_EQ(rw.candidates.size(), 1u);
  EXPECT_EQ(rw.candidates[0].enumeration.deletion.deleted_surface, "anchor");
  EXPECT_EQ(rw.candidates[0].delta, 1.0);
}

TEST(FindCandidatesTest, ScoresAgainstReferenceNotParentTranslation) {
  MockConfig mock;
  mock.dictionary["b"] = "B";
  MockTranslator backend(mock);
  // Parent translation "a B c d e" is valid but imperfect against the reference.
  std::vector<TestPair> corpus = {{"1", "a b c d e", "a B c d e f"}};
  const auto r = probe::Run(corpus, MockConfigFor(UnitKind::kWord), StageContext{backend});
  ASSERT_EQ(r.valid.size(), 1u);
  const auto& e = r.enumerations[0];  // "b c d e" -> "B c d e"
  EXPECT_EQ(e.translation, "B c d e");
  EXPECT_DOUBLE_EQ(e.bleu.value, SentenceBleu("B c d e", "a B c d e f",
                                              MetricTokenization::kWordLevel).value);
  EXPECT_DOUBLE_EQ(e.baseline_bleu, r.valid[0].bleu.value);
  EXPECT_LT(e.baseline_bleu, 1.0);
}

TEST(FindCandidatesTest, DuplicatesShareTranslationButNotProvenance) {
  MockConfig mock;
  MockRule rule;
  rule.require_tokens = {"xab"};
  rule.action = MockAction::kFixedOutput;
  rule.output = "zzz";
  mock.rules = {rule};
  MockTranslator inner(mock);
  RecordingTranslator backend(inner);
  const std::string s = "xaab yy";
  std::vector<TestPair> corpus = {{"1", s, s}};
  const auto r = probe::Run(corpus, MockConfigFor(UnitKind::kCharacter), StageContext{backend});
  ASSERT_EQ(r.enumerations.size(), 7u);
  // 1 and 2 both give "xab yy"; 4 gives the single token "xaabyy".
  ASSERT_EQ(r.candidates.size(), 3u);
  EXPECT_EQ(r.candidates[0].enumeration.deletion.position, 1u);
  EXPECT_EQ(r.candidates[1].enumeration.deletion.position, 2u);
  EXPECT_EQ(r.candidates[2].enumeration.deletion.position, 4u);
  EXPECT_EQ(r.candidates[1].enumeration.deletion.duplicate_of, 1u);
  EXPECT_NE(r.candidates[0].candidate_id, r.candidates[1].candidate_id);
  EXPECT_EQ(r.header.distinct_perturbations, 5u);
  EXPECT_EQ(backend.seen().size(), 6u);
}

TEST(FindCandidatesTest, CandidateIdIsStable) {
  EXPECT_EQ(CandidateId("p1", UnitKind::kCharacter, 3), CandidateId("p1", UnitKind::kCharacter, 3));
  EXPECT_NE(CandidateId("p1", UnitKind::kCharacter, 3), CandidateId("p1", UnitKind::kWord, 3));
  EXPECT_NE(CandidateId("p1", UnitKind::kCharacter, 3), CandidateId("p13", UnitKind::kCharacter, 0));
  EXPECT_EQ(CandidateId("p1", UnitKind::kCharacter, 3).size(), 16u);
}

class OracleTest : public ::testing::TestWithParam<std::tuple<UnitKind, double, double>> {};

TEST_P(OracleTest, MatchesNaiveTripleLoop) {
  const auto [unit, valid_t, cand_t] = GetParam();
  const auto setup = MakeSyntheticSetup(25, 7);
  MockTranslator backend(setup.mock);
  TempDir dir;
  TranslationCache cache(dir / "cache.bin");
  RunConfig config = MockConfigFor(unit);
  config.valid_threshold = valid_t;
  config.candidate_threshold = cand_t;
  config.parallelism = 3;
  config.batch_size = 5;
  StageContext ctx{backend, &cache};
  const auto r = probe::Run(setup.corpus, config, ctx);
  const auto want = NaiveCandidates(setup.corpus, backend, unit, valid_t, cand_t);
  EXPECT_FALSE(want.empty());
  EXPECT_EQ(CandidateSet(r), want);
}

INSTANTIATE_TEST_SUITE_P(
    Thresholds, OracleTest,
    ::testing::Combine(::testing::Values(UnitKind::kCharacter, UnitKind::kWord),
                       ::testing::Values(0.5, 0.6), ::testing::Values(0.1, 0.2)));

TEST(NaiveWordDeleteTest, AgreesWithLibrary) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::string s;
    const int len = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < len; ++i) s.push_back(rng() % 3 == 0 ? ' ' : static_cast<char>('a' + rng() % 3));
    const auto spans = testing::NaiveWordSpans(s);
    if (spans.empty() || s.find(' ') == std::string::npos) continue;
    for (std::size_t k = 0; k < spans.size(); ++k) {
      EXPECT_EQ(DeleteAt(s, UnitKind::kWord, k).perturbed_text, testing::NaiveDeleteWord(s, k))
          << "'" << s << "' k=" << k;
    }
  }
}

TEST(PropertyTest, ThresholdMonotonicity) {
  const auto setup = MakeSyntheticSetup(30, 11);
  MockTranslator backend(setup.mock);
  RunConfig config = MockConfigFor(UnitKind::kWord);
  std::set<std::pair<std::string, std::size_t>> previous;
  for (double cand : {0.0, 0.05, 0.1, 0.2, 0.3, 0.45}) {
    config.candidate_threshold = cand;
    const auto now = CandidateSet(probe::Run(setup.corpus, config, StageContext{backend}));
    for (const auto& p : previous) EXPECT_TRUE(now.count(p)) << cand;
    previous = now;
  }
  config.candidate_threshold = 0.05;
  std::set<std::string> prev_valid;
  for (double valid : {0.95, 0.8, 0.6, 0.5, 0.3, 0.1}) {
    config.valid_threshold = valid;
    const auto stage = FindValid(setup.corpus, StageContext{backend}, config);
    std::set<std::string> ids;
    for (const auto& v : stage.valid) ids.insert(v.pair.pair_id);
    for (const auto& id : prev_valid) EXPECT_TRUE(ids.count(id)) << valid;
    prev_valid = ids;
  }
}

TEST(PropertyTest, CountConservationAndOrdering) {
  const auto setup = MakeSyntheticSetup(30, 5);
  MockTranslator backend(setup.mock);
  for (UnitKind unit : {UnitKind::kCharacter, UnitKind::kWord}) {
    RunConfig config = MockConfigFor(unit);
    config.parallelism = 4;
    config.batch_size = 3;
    const auto r = probe::Run(setup.corpus, config, StageContext{backend});
    std::size_t units = 0;
    for (const auto& v : r.valid) units += Segment(v.pair.source, unit).size();
    EXPECT_EQ(r.enumerations.size(), units);
    EXPECT_LE(r.candidates.size(), r.enumerations.size());
    std::size_t flagged = 0;
    std::size_t next_candidate = 0;
    for (const auto& e : r.enumerations) {
      const bool is_candidate = e.bleu.value <= config.candidate_threshold;
      if (is_candidate) {
        ASSERT_LT(next_candidate, r.candidates.size());
        EXPECT_EQ(r.candidates[next_candidate].enumeration.deletion.position, e.deletion.position);
        EXPECT_EQ(r.candidates[next_candidate].enumeration.deletion.pair_id, e.deletion.pair_id);
        EXPECT_GE(r.candidates[next_candidate].delta,
                  config.valid_threshold - config.candidate_threshold);
        ++next_candidate;
        ++flagged;
      }
    }
    EXPECT_EQ(flagged, r.candidates.size());
    // (corpus order, position)
    for (std::size_t i = 1; i < r.enumerations.size(); ++i) {
      const auto& a = r.enumerations[i - 1].deletion;
      const auto& b = r.enumerations[i].deletion;
      if (a.pair_id == b.pair_id) EXPECT_EQ(a.position + 1, b.position);
    }
  }
}

TEST(RunTest, IdentityCorpusHasNoCandidates) {
  auto backend = Identity();
  std::vector<TestPair> corpus = {{"1", "the quick brown fox jumps", "the quick brown fox jumps"},
                                  {"2", "over the lazy dog today", "over the lazy dog today"}};
  const auto r = probe::Run(corpus, MockConfigFor(UnitKind::kWord), StageContext{backend});
  EXPECT_EQ(r.valid.size(), 2u);
  EXPECT_EQ(r.enumerations.size(), 10u);
  EXPECT_TRUE(r.candidates.empty());
}

TEST(RunTest, NoValidSentencesSkipsLaterStages) {
  MockConfig mock;
  mock.dictionary["a"] = "zzz";
  MockTranslator backend(mock);
  std::vector<TestPair> corpus = {{"1", "a", "b"}};
  const auto r = probe::Run(corpus, MockConfigFor(UnitKind::kCharacter), StageContext{backend});
  EXPECT_TRUE(r.valid.empty());
  EXPECT_TRUE(r.enumerations.empty());
  EXPECT_EQ(r.header.corpus_size, 1u);
}

TEST(RunTest, BackendErrorsNameTheStage) {
  SubprocessTranslator backend("exit 3");
  std::vector<TestPair> corpus = {{"1", "a b", "a b"}};
  try {
    probe::Run(corpus, MockConfigFor(UnitKind::kWord), StageContext{backend});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendUnavailable);
    EXPECT_NE(std::string(e.what()).find("find_valid"), std::string::npos);
  }
}

std::string WithoutProvenance(const std::filesystem::path& config_json) {
  auto j = ReadJsonFile(config_json);
  j.erase("provenance");
  return j.dump();
}

TEST(RunIoTest, RepeatedRunsAreByteIdentical) {
  const auto setup = MakeSyntheticSetup(20, 3);
  TempDir dir;
  for (int i = 0; i < 2; ++i) {
    MockTranslator backend(setup.mock);
    RunConfig config = MockConfigFor(UnitKind::kCharacter);
    config.parallelism = i == 0 ? 1 : 4;
    config.batch_size = i == 0 ? 64 : 3;
    const auto r = probe::Run(setup.corpus, config, StageContext{backend});
    WriteRunResult(dir / ("run" + std::to_string(i)), r);
  }
  for (const char* f : {"valid.jsonl", "enumerations.jsonl", "candidates.jsonl"}) {
    EXPECT_EQ(testing::ReadFile(dir / "run0" / f), testing::ReadFile(dir / "run1" / f)) << f;
  }
  EXPECT_EQ(WithoutProvenance(dir / "run0" / "config.json"),
            WithoutProvenance(dir / "run1" / "config.json"));
}

TEST(RunIoTest, RoundTrip) {
  const auto setup = MakeSyntheticSetup(15, 9);
  MockTranslator backend(setup.mock);
  const auto r = probe::Run(setup.corpus, MockConfigFor(UnitKind::kWord), StageContext{backend});
  TempDir dir;
  WriteRunResult(dir.path(), r);
  const auto back = ReadRunResult(dir.path());
  EXPECT_EQ(back.header.created_at, r.header.created_at);
  EXPECT_EQ(back.header.candidate_count, r.candidates.size());
  ASSERT_EQ(back.enumerations.size(), r.enumerations.size());
  ASSERT_EQ(back.candidates.size(), r.candidates.size());
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    EXPECT_EQ(back.candidates[i].candidate_id, r.candidates[i].candidate_id);
    EXPECT_EQ(back.candidates[i].enumeration.bleu.value, r.candidates[i].enumeration.bleu.value);
  }
  // Rewriting what was read reproduces the files.
  TempDir again;
  WriteRunResult(again.path(), back);
  for (const char* f : {"config.json", "valid.jsonl", "enumerations.jsonl", "candidates.jsonl"}) {
    EXPECT_EQ(testing::ReadFile(dir / f), testing::ReadFile(again / f)) << f;
  }
}

TEST(RunIoTest, RecordsCarryProvenanceFields) {
  auto backend = Identity();
  std::vector<TestPair> corpus = {{"7", "ab cd", "ab cd"}};
  const auto r = probe::Run(corpus, MockConfigFor(UnitKind::kCharacter), StageContext{backend});
  const auto j = ToJson(r.enumerations[0], 0.1);
  for (const char* key : {"pair_id", "unit", "position", "deleted_surface", "perturbed_text",
                          "translation", "bleu", "delta"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_TRUE(j["bleu"].contains("precisions"));
  EXPECT_TRUE(j["bleu"].contains("brevity_penalty"));
}

TEST(RunIoTest, MissingFile) {
  TempDir dir;
  EXPECT_EQ(CodeOf([&] { ReadRunResult(dir.path()); }), ErrorCode::kIoError);
}

TEST(CorpusTest, TsvTwoAndThreeColumns) {
  TempDir dir;
  testing::WriteFile(dir / "a.tsv", "hello\tbonjour\n\nbye\tau revoir\n");
  auto c = LoadCorpusTsv(dir / "a.tsv");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].pair_id, "1");
  EXPECT_EQ(c[1].pair_id, "3");
  EXPECT_EQ(c[1].reference, "au revoir");
  testing::WriteFile(dir / "b.tsv", "x1\thello\tbonjour\r\n");
  c = LoadCorpusTsv(dir / "b.tsv");
  EXPECT_EQ(c[0].pair_id, "x1");
  EXPECT_EQ(c[0].reference, "bonjour");
  testing::WriteFile(dir / "c.tsv", "only one column\n");
  EXPECT_EQ(CodeOf([&] { LoadCorpusTsv(dir / "c.tsv"); }), ErrorCode::kInvalidArgument);
  testing::WriteFile(dir / "d.tsv", "x\ta\tb\nx\tc\td\n");
  EXPECT_EQ(CodeOf([&] { LoadCorpusTsv(dir / "d.tsv"); }), ErrorCode::kInvalidArgument);
  testing::WriteFile(dir / "e.tsv", "");
  EXPECT_EQ(CodeOf([&] { LoadCorpusTsv(dir / "e.tsv"); }), ErrorCode::kEmptyCorpus);
}

TEST(CorpusTest, AlignedFiles) {
  TempDir dir;
  testing::WriteFile(dir / "src", "a\nb\n");
  testing::WriteFile(dir / "ref", "A\nB\n");
  const auto c = LoadCorpusAligned(dir / "src", dir / "ref");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[1].source, "b");
  testing::WriteFile(dir / "short", "A\n");
  EXPECT_EQ(CodeOf([&] { LoadCorpusAligned(dir / "src", dir / "short"); }),
            ErrorCode::kInvalidArgument);
  testing::WriteFile(dir / "blank", "A\n\n");
  EXPECT_EQ(CodeOf([&] { LoadCorpusAligned(dir / "src", dir / "blank"); }),
            ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace probe
