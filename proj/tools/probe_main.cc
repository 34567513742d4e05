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

// probe: command-line driver.
//
//   probe validate  --config C --out D        find valid sentences
//   probe enumerate --config C --run D --out E   deletions of D's valid set
//   probe extract   --config C --run E --out F   translate, score, flag
//   probe run       --config C --out D        all three stages + summary
//   probe curve     --config C [--run D] --out E
//   probe report    --run D [--annotations A] [--out E]
//   probe serve     --run D [--annotations A] [--port P] [--static DIR]
//   probe export    --run D [--annotations A] [--out FILE]
//
// Exit status: 0 success, 1 domain error, 2 usage or configuration error.

#include <signal.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "probe/analysis.h"
#include "probe/annotation.h"
#include "probe/annotation_service.h"
#include "probe/config.h"
#include "probe/error.h"
#include "probe/pipeline.h"
#include "probe/run_io.h"
#include "probe/translation_cache.h"
#include "probe/translator.h"

namespace probe {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct Overrides {
  std::string config;
  std::string unit;
  std::string backend;
  std::vector<std::string> backend_params;
  std::optional<std::uint64_t> seed;
  std::optional<double> valid_threshold;
  std::optional<double> candidate_threshold;
  std::optional<std::size_t> parallelism;
  std::optional<std::size_t> batch_size;
  std::string lexicon;
  std::string model_label;
  std::string corpus;
  std::string source;
  std::string reference;
  std::optional<std::size_t> k_max;
  std::optional<std::size_t> samples_per_k;
};

struct Paths {
  std::string out;
  std::string run;
  std::string annotations;
  std::string static_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ProbeConfig EffectiveConfigUnchecked(const Overrides& o) {
  ProbeConfig c = o.config.empty() ? DefaultProbeConfig() : LoadProbeConfig(o.config);
  RunConfig& r = c.run;
  if (!o.unit.empty()) r.unit = ParseUnitKind(o.unit);
  if (!o.backend.empty()) {
    r.backend.kind = ParseBackendKind(o.backend);
    r.backend.parameters.clear();
  }
  for (const auto& kv : o.backend_params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--backend-param expects KEY=VALUE");
    r.backend.parameters[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (o.seed) {
    r.seed = *o.seed;
    c.curve.seed = *o.seed;
  }
  if (o.valid_threshold) r.valid_threshold = *o.valid_threshold;
  if (o.candidate_threshold) r.candidate_threshold = *o.candidate_threshold;
  if (o.parallelism) r.parallelism = *o.parallelism == 0 ? DefaultProbeConfig().run.parallelism
                                                         : *o.parallelism;
  if (o.batch_size) r.batch_size = *o.batch_size;
  if (!o.lexicon.empty()) r.lexicon_path = fs::absolute(o.lexicon).lexically_normal();
  if (!o.model_label.empty()) r.model_label = o.model_label;
  if (!o.corpus.empty()) c.corpus = {fs::path(o.corpus), {}, {}};
  if (!o.source.empty() || !o.reference.empty()) {
    if (o.source.empty() || o.reference.empty()) {
      throw UsageError("--source and --reference go together");
    }
    c.corpus = {{}, fs::path(o.source), fs::path(o.reference)};
  }
  if (o.k_max) c.curve.k_max = *o.k_max;
  if (o.samples_per_k) c.curve.samples_per_k = *o.samples_per_k;
  if (r.batch_size == 0) throw UsageError("--batch-size must be positive");
  r.Validate();
  return c;
}

ProbeConfig EffectiveConfig(const Overrides& o) {
  try {
    return EffectiveConfigUnchecked(o);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    throw Error(ErrorCode::kConfigError, e.detail());
  }
}

// Backend, cache and segmentation resources for one invocation.
class Resources {
 public:
  Resources(const ProbeConfig& config, const fs::path& out_dir)
      : backend_(MakeTranslator(config.run.backend)) {
    if (config.run.lexicon_path) lexicon_ = Lexicon::Load(*config.run.lexicon_path);
    if (!config.run.segmenter_command.empty()) {
      segmenter_.emplace(config.run.segmenter_command);
    }
    cache_path_ = ResolveCacheDir(config, out_dir) / "translations.bin";
    cache_ = std::make_unique<TranslationCache>(cache_path_);
  }

  StageContext Context() {
    StageContext ctx{*backend_, cache_.get()};
    ctx.lexicon = lexicon_ ? &*lexicon_ : nullptr;
    ctx.segmenter = segmenter_ ? &*segmenter_ : nullptr;
    ctx.stats = &stats_;
    return ctx;
  }

  const Translator& backend() const { return *backend_; }

  json Execution(const RunConfig& config) const {
    return {{"parallelism", config.parallelism},
            {"batch_size", config.batch_size},
            {"cache",
             {{"path", cache_path_.string()},
              {"hits", stats_.hits},
              {"misses", stats_.misses},
              {"backend_calls", stats_.backend_calls},
              {"recovered_bytes", cache_->recovered_bytes()}}}};
  }

 private:
  std::unique_ptr<Translator> backend_;
  std::optional<Lexicon> lexicon_;
  std::optional<SubprocessSegmenter> segmenter_;
  fs::path cache_path_;
  std::unique_ptr<TranslationCache> cache_;
  CacheStats stats_;
};

fs::path RequireDir(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
  return fs::path(value);
}

void Note(const std::string& message) { std::cerr << "probe: " << message << "\n"; }

void WriteText(const fs::path& path, const std::string& text) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  if (std::fclose(f) != 0 || !ok) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

void WriteSummary(const fs::path& dir, const RunResult& run,
                  const std::map<std::string, Annotation>& labels) {
  const SummaryRow row = Summarize(run, labels);
  json summary = {{"config", run.header.config.ToJson()},
                  {"backend_fingerprint", run.header.backend_fingerprint},
                  {"metric_policy", run.header.metric_policy},
                  {"rows", json::array({ToJson(row)})}};
  WriteJsonFile(dir / "summary.json", summary);
  WriteText(dir / "summary.md", RenderSummaryMarkdown(std::span(&row, 1), run.header.metric_policy));
}

void LogCounts(const RunHeader& h) {
  Note("corpus " + std::to_string(h.corpus_size) + ", valid " + std::to_string(h.valid_count) +
       ", enumerations " + std::to_string(h.enumeration_count) + ", candidates " +
       std::to_string(h.candidate_count));
}

ValidStage ValidStageFromRun(const RunResult& run) {
  ValidStage stage;
  stage.valid = run.valid;
  stage.corpus_size = run.header.corpus_size;
  stage.corpus_mean_bleu = run.header.corpus_mean_bleu;
  return stage;
}

int CmdValidate(const Overrides& o, const Paths& p) {
  const fs::path out = RequireDir(p.out, "--out");
  const ProbeConfig config = EffectiveConfig(o);
  const auto corpus = config.corpus.Load();
  Resources res(config, out);
  const ValidStage stage = FindValid(corpus, res.Context(), config.run);
  fs::create_directories(out);
  RunResult run;
  run.header = MakeHeader(config.run, res.backend(), stage, {});
  run.valid = stage.valid;
  WriteJsonFile(out / "config.json", ToJson(run.header, res.Execution(config.run)));
  WriteValid(out / "valid.jsonl", run.valid);
  LogCounts(run.header);
  return 0;
}

int CmdEnumerate(const Overrides& o, const Paths& p) {
  const fs::path in = RequireDir(p.run, "--run");
  const fs::path out = RequireDir(p.out, "--out");
  const ProbeConfig config = EffectiveConfig(o);
  const RunHeader input = HeaderFromJson(ReadJsonFile(in / "config.json"));
  const auto valid = ReadValid(in / "valid.jsonl");
  Resources res(config, out);
  std::vector<std::vector<Deletion>> groups;
  if (!valid.empty()) groups = GenerateEnumerations(valid, res.Context(), config.run);
  RunHeader header = input;
  header.config = config.run;
  header.enumeration_count = 0;
  std::set<std::string> distinct;
  for (const auto& g : groups) {
    header.enumeration_count += g.size();
    for (const auto& d : g) distinct.insert(d.perturbed_text);
  }
  header.distinct_perturbations = distinct.size();
  header.candidate_count = 0;
  fs::create_directories(out);
  WriteJsonFile(out / "config.json", ToJson(header, res.Execution(config.run)));
  WriteValid(out / "valid.jsonl", valid);
  WriteDeletions(out / "deletions.jsonl", groups);
  LogCounts(header);
  return 0;
}

int FinishRun(const fs::path& out, const RunResult& run, const json& execution) {
  WriteRunResult(out, run, execution);
  WriteSummary(out, run, {});
  LogCounts(run.header);
  return 0;
}

int CmdExtract(const Overrides& o, const Paths& p) {
  const fs::path in = RequireDir(p.run, "--run");
  const fs::path out = RequireDir(p.out, "--out");
  const ProbeConfig config = EffectiveConfig(o);
  const RunHeader input = HeaderFromJson(ReadJsonFile(in / "config.json"));
  RunResult run;
  run.valid = ReadValid(in / "valid.jsonl");
  const auto groups = ReadDeletions(in / "deletions.jsonl", run.valid);
  Resources res(config, out);
  CandidateStage stage;
  if (!run.valid.empty()) stage = FindCandidates(run.valid, groups, res.Context(), config.run);
  ValidStage vs = ValidStageFromRun(run);
  vs.corpus_size = input.corpus_size;
  vs.corpus_mean_bleu = input.corpus_mean_bleu;
  run.header = MakeHeader(config.run, res.backend(), vs, stage);
  run.enumerations = std::move(stage.enumerations);
  run.candidates = std::move(stage.candidates);
  return FinishRun(out, run, res.Execution(config.run));
}

int CmdRun(const Overrides& o, const Paths& p) {
  const fs::path out = RequireDir(p.out, "--out");
  const ProbeConfig config = EffectiveConfig(o);
  const auto corpus = config.corpus.Load();
  Resources res(config, out);
  const RunResult run = Run(corpus, config.run, res.Context());
  return FinishRun(out, run, res.Execution(config.run));
}

int CmdCurve(const Overrides& o, const Paths& p) {
  const fs::path out = RequireDir(p.out, "--out");
  const ProbeConfig config = EffectiveConfig(o);
  Resources res(config, out);
  std::vector<ValidSentence> valid;
  if (!p.run.empty()) {
    valid = ReadValid(fs::path(p.run) / "valid.jsonl");
  } else {
    valid = FindValid(config.corpus.Load(), res.Context(), config.run).valid;
  }
  if (valid.empty()) throw Error(ErrorCode::kEmptyInput, "no valid sentences for the curve");
  const DeclineCurve curve = ComputeDeclineCurve(valid, res.Context(), config.run, config.curve);
  for (const auto& s : curve.skipped) {
    Note("warning: SentenceTooShort: pair_id " + s.pair_id + " has " + std::to_string(s.units) +
         " units, skipped");
  }
  fs::create_directories(out);
  WriteText(out / "curve.csv", CurveCsv(curve));
  json j = ToJson(curve);
  j["config"] = config.run.ToJson();
  j["backend_fingerprint"] = res.backend().Fingerprint();
  j["metric_policy"] = SmoothingPolicyDescription(config.run.max_order);
  WriteJsonFile(out / "curve.json", j);
  WriteText(out / "curve.svg", CurveSvg(curve));
  const LinearFit fit = FitCurve(curve);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "curve k=0..%zu, slope %.4f, R^2 %.4f", curve.options.k_max,
                fit.slope, fit.r_squared);
  Note(buf);
  return 0;
}

std::map<std::string, Annotation> ReadLabels(const Paths& p, const fs::path& run_dir) {
  const fs::path log = p.annotations.empty() ? run_dir / "annotations.jsonl" : fs::path(p.annotations);
  if (!p.annotations.empty() && !fs::exists(log)) {
    throw Error(ErrorCode::kIoError, "no annotation log at " + log.string());
  }
  return CurrentAnnotations(ReadAnnotationLog(log));
}

int CmdReport(const Paths& p) {
  const fs::path in = RequireDir(p.run, "--run");
  const fs::path out = p.out.empty() ? in : fs::path(p.out);
  const RunResult run = ReadRunResult(in);
  const auto labels = ReadLabels(p, in);
  fs::create_directories(out);
  WriteSummary(out, run, labels);
  const ErrorStats stats = ComputeErrorStats(labels, run);
  Note("severe " + std::to_string(stats.severe_total) + " (" + FormatRate(stats.severe_rate) +
       "), unlabeled " + std::to_string(stats.unlabeled));
  return 0;
}

int CmdExport(const Paths& p) {
  const fs::path in = RequireDir(p.run, "--run");
  const RunResult run = ReadRunResult(in);
  const auto labels = ReadLabels(p, in);
  ComputeErrorStats(labels, run);
  std::string text;
  for (const auto& [id, a] : labels) text += ToJson(a).dump() + "\n";
  if (p.out.empty() || p.out == "-") {
    std::cout << text;
  } else {
    WriteText(p.out, text);
  }
  return 0;
}

int CmdServe(const Paths& p) {
  const fs::path in = RequireDir(p.run, "--run");
  const RunResult run = ReadRunResult(in);
  const fs::path log = p.annotations.empty() ? in / "annotations.jsonl" : fs::path(p.annotations);
  AnnotationStore store(log, run);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ServiceOptions options;
  options.host = p.host;
  options.port = p.port;
  if (!p.static_dir.empty()) options.static_dir = fs::path(p.static_dir);
  AnnotationService service(store, run, options);
  service.Start();
  Note("serving " + std::to_string(run.candidates.size()) + " candidates on http://" +
       service.host() + ":" + std::to_string(service.port()));
  int sig = 0;
  sigwait(&signals, &sig);
  service.Stop();
  Note("stopped");
  return 0;
}

void AddConfigFlags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "YAML config file");
  cmd->add_option("--unit", o.unit, "char or word");
  cmd->add_option("--backend", o.backend, "mock, subprocess, http or precomputed");
  cmd->add_option("--backend-param", o.backend_params, "backend parameter KEY=VALUE");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--valid-threshold", o.valid_threshold, "validity threshold");
  cmd->add_option("--candidate-threshold", o.candidate_threshold, "candidate threshold");
  cmd->add_option("--parallelism", o.parallelism, "worker count, 0 = processors");
  cmd->add_option("--batch-size", o.batch_size, "sources per backend call");
  cmd->add_option("--lexicon", o.lexicon, "word lexicon for unspaced text");
  cmd->add_option("--model-label", o.model_label, "label for reports");
  cmd->add_option("--corpus", o.corpus, "TSV corpus");
  cmd->add_option("--source", o.source, "source sentences, one per line");
  cmd->add_option("--reference", o.reference, "reference sentences, one per line");
}

int Main(int argc, char** argv) {
  CLI::App app{"Minimal-deletion robustness probe for machine translation"};
  app.require_subcommand(1);
  Overrides o;
  Paths p;

  auto* validate = app.add_subcommand("validate", "translate the corpus and keep valid sentences");
  auto* enumerate = app.add_subcommand("enumerate", "enumerate single-unit deletions");
  auto* extract = app.add_subcommand("extract", "translate deletions and flag candidates");
  auto* run = app.add_subcommand("run", "validate, enumerate and extract");
  auto* curve = app.add_subcommand("curve", "BLEU decline as units are removed");
  auto* report = app.add_subcommand("report", "summary table from a run and its labels");
  auto* serve = app.add_subcommand("serve", "triage API over a run");
  auto* exp = app.add_subcommand("export", "current labels as JSONL");

  for (auto* cmd : {validate, enumerate, extract, run, curve}) {
    AddConfigFlags(cmd, o);
    cmd->add_option("--out", p.out, "output directory");
  }
  for (auto* cmd : {enumerate, extract, curve}) cmd->add_option("--run", p.run, "input run directory");
  curve->add_option("--k-max", o.k_max, "largest number of removed units");
  curve->add_option("--samples", o.samples_per_k, "samples per sentence and k");
  for (auto* cmd : {report, serve, exp}) {
    cmd->add_option("--run", p.run, "run directory")->required();
    cmd->add_option("--annotations", p.annotations, "annotation log");
  }
  report->add_option("--out", p.out, "output directory (default: the run directory)");
  exp->add_option("--out", p.out, "output file (default: standard output)");
  serve->add_option("--host", p.host, "bind address");
  serve->add_option("--port", p.port, "port, 0 picks one");
  serve->add_option("--static", p.static_dir, "directory served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return CmdValidate(o, p);
    if (enumerate->parsed()) return CmdEnumerate(o, p);
    if (extract->parsed()) return CmdExtract(o, p);
    if (run->parsed()) return CmdRun(o, p);
    if (curve->parsed()) return CmdCurve(o, p);
    if (report->parsed()) return CmdReport(p);
    if (serve->parsed()) return CmdServe(p);
    if (exp->parsed()) return CmdExport(p);
  } catch (const UsageError& e) {
    std::cerr << "probe: usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "probe: error: " << e.what() << "\n";
    return e.code() == ErrorCode::kConfigError ? kExitUsage : kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "probe: error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace probe

int main(int argc, char** argv) { return probe::Main(argc, argv); }
