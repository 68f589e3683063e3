/*
 * Copyright 2026 The Fair SA Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FAIRSA_CONFIG_H_
#define FAIRSA_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairsa/analysis.h"
#include "fairsa/curves.h"
#include "fairsa/dataset.h"
#include "fairsa/embed.h"
#include "fairsa/perturb.h"
#include "fairsa/report.h"
#include "json.hpp"

namespace fairsa {

struct DatasetPaths {
  std::filesystem::path image_dir;
  std::filesystem::path identity_file;
  std::filesystem::path attr_file;

  friend bool operator==(const DatasetPaths&, const DatasetPaths&) = default;
};

// Everything a run needs. JSON schema (unknown keys are rejected):
//
// {
//   "dataset": {"image_dir": ..., "identity_file": ..., "attr_file": ...},
//   "task": "verification" | "self-matching",
//   "provider": {"variant": "builtin-toy"}
//             | {"variant": "file", "path": ...}
//             | {"variant": "process", "command": ...},   (+ optional "expected_dim")
//   "perturbations": [{"kind": ..., "n": 5, "lower": ..., "upper": ...}],
//   "subgroups": [{"attribute": "Male", "value": true}],   (default: every attribute = true)
//   "threshold": "auto" | number,
//   "alpha": 0.01,
//   "pruning": "none" | "verification-pairs" | "vpsa-identities",
//   "seed": 0,
//   "workers": 1,
//   "output_dir": "fairsa-out"
// }
//
// Relative paths resolve against the directory holding the config file.
// "n", "lower" and "upper" default to 5 and the kind's valid range.
struct RunConfig {
  DatasetPaths dataset;
  Task task = Task::kSelfMatching;
  ProviderConfig provider;
  std::vector<PerturbationSpec> perturbations;
  std::vector<SubgroupSpec> subgroups;
  std::optional<float> threshold;
  double alpha = 0.01;
  Pruning pruning = Pruning::kNone;
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path output_dir = "fairsa-out";

  // Throws Error on any invariant violation.
  void Validate() const;

  nlohmann::json ToJson() const;
  static RunConfig FromJson(const nlohmann::json& doc,
                            const std::filesystem::path& base_dir = {});

  // Digest of the settings that can change results (not workers or output_dir).
  std::string ResultDigest() const;
};

RunConfig LoadRunConfig(const std::filesystem::path& path);

struct RunResult {
  std::filesystem::path run_dir;
  std::vector<Curve> curves;      // Fair SA curves
  std::vector<Curve> irc_curves;  // VPSA item-response curves (self-matching)
  AucMatrix auc;
  std::optional<AucMatrix> irc_auc;
  RunManifest manifest;
  LoadReport load_report;
};

// Loads the dataset, sweeps every (perturbation, subgroup) pair and writes
// curves.csv, auc.json, SVG plots and manifest.json (plus irc.csv and
// irc_auc.json for self-matching) under <output_dir>/<task>/<pruning>/.
RunResult ExecuteRun(const RunConfig& config);

// Same sweep on an already-loaded dataset and provider pool; writes nothing.
RunResult ComputeRun(const RunConfig& config, const Dataset& dataset, ProviderPool& providers);

// Writes outputs of a computed run to `run_dir`.
void WriteRunOutputs(const RunResult& result, const RunConfig& config,
                     const std::filesystem::path& run_dir);

// Embeds every dataset image and every perturbed probe of every ladder level
// into one FSAE file whose keys match what the file provider is asked for.
std::size_t ExecuteEmbed(const RunConfig& config, const std::filesystem::path& out);

// Re-renders the SVGs of a run directory from its CSV and JSON files.
void RerenderReport(const std::filesystem::path& run_dir);

}  // namespace fairsa

#endif  // FAIRSA_CONFIG_H_
