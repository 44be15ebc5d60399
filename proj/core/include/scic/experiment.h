// Copyright 2026 The SCIC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCIC_EXPERIMENT_H_
#define SCIC_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace scic::experiment {

// One node of the experiment DAG. `config_json` is the stage-specific
// configuration; dependencies are the stages named in `after`.
struct Stage {
  std::string name;
  std::string kind;  // pools, dataset, grid, sweep, bdrate, report
  std::vector<std::string> after;
  std::string config_json = "{}";
};

struct ExperimentSpec {
  std::filesystem::path workspace;
  uint64_t seed = 0;
  std::vector<Stage> stages;

  // Checks names, kinds and references and that `after` forms a DAG.
  void Validate() const;
  // Stages in dependency order (ties keep spec order).
  std::vector<const Stage*> Order() const;
};

ExperimentSpec ParseSpec(const std::string& json);
ExperimentSpec LoadSpec(const std::filesystem::path& path);

struct StageOutcome {
  std::string name;
  bool executed = false;  // false when the hash gate found it up to date
  std::string input_hash;
};

struct RunOptions {
  // Overrides the spec workspace when non-empty.
  std::filesystem::path workspace;
  // Overrides the spec seed when set.
  bool override_seed = false;
  uint64_t seed = 0;
};

// Runs every stage whose inputs changed since its last successful run.
// Each stage writes into <workspace>/<stage name>/; the ledger
// <workspace>/ledger.json maps every stage to its input hash and the
// SHA-256 of each output file, and <workspace>/provenance.jsonl records
// every event. Before a stage runs, the recorded outputs of its
// dependencies are re-hashed; a mismatch raises HashMismatchError. A failing
// stage halts everything after it and is recorded as failed.
std::vector<StageOutcome> RunExperiment(const ExperimentSpec& spec, const RunOptions& options = {});

// Human-readable summary of a checkpoint, bitstream, manifest, curve or
// sweep file, chosen by its magic or format tag.
std::string Inspect(const std::filesystem::path& path);

}  // namespace scic::experiment

#endif  // SCIC_EXPERIMENT_H_
