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

// Hand-built RunResult with chosen enumeration and candidate counts.

#ifndef PROBE_TESTS_FIXTURE_RUN_H_
#define PROBE_TESTS_FIXTURE_RUN_H_

#include <string>

#include "probe/metric.h"
#include "probe/pipeline.h"

namespace probe::testing {

// `valid` sentences share the enumerations round-robin; the first
// `candidates` enumerations score at or below 0.1, the rest 0.8.
inline RunResult MakeFixtureRun(std::size_t valid, std::size_t enumerations,
                                std::size_t candidates, const std::string& label = "fixture") {
  RunResult run;
  run.header.config.model_label = label;
  run.header.config.backend.kind = BackendKind::kMockDictionary;
  run.header.metric_policy = SmoothingPolicyDescription();
  run.header.corpus_size = valid;
  run.header.created_at = "2026-01-01T00:00:00Z";
  for (std::size_t v = 0; v < valid; ++v) {
    ValidSentence s;
    s.pair = {"p" + std::to_string(v), "source " + std::to_string(v),
              "reference " + std::to_string(v)};
    s.translation = s.pair.reference;
    s.bleu.value = 1.0;
    run.valid.push_back(s);
  }
  std::vector<std::size_t> next_position(valid, 0);
  for (std::size_t i = 0; i < enumerations; ++i) {
    const std::size_t v = i % valid;
    Enumeration e;
    e.deletion.pair_id = run.valid[v].pair.pair_id;
    e.deletion.position = next_position[v]++;
    e.deletion.deleted_surface = "x";
    e.deletion.start = e.deletion.position;
    e.deletion.end = e.deletion.position + 1;
    e.deletion.perturbed_text = "perturbed " + std::to_string(i);
    e.translation = "translation " + std::to_string(i);
    e.baseline_bleu = 1.0;
    e.bleu.value = i < candidates ? 0.1 * static_cast<double>(i % 7) / 7.0 : 0.8;
    run.enumerations.push_back(e);
    if (i < candidates) {
      Candidate c;
      c.enumeration = e;
      c.delta = e.delta();
      c.candidate_id = CandidateId(e.deletion.pair_id, e.deletion.unit, e.deletion.position);
      run.candidates.push_back(c);
    }
  }
  run.header.valid_count = valid;
  run.header.enumeration_count = enumerations;
  run.header.distinct_perturbations = enumerations;
  run.header.candidate_count = candidates;
  return run;
}

}  // namespace probe::testing

#endif  // PROBE_TESTS_FIXTURE_RUN_H_
