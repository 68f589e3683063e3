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

#ifndef FAIRSA_CURVES_H_
#define FAIRSA_CURVES_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairsa/dataset.h"
#include "fairsa/embed.h"
#include "fairsa/metrics.h"
#include "fairsa/perturb.h"

namespace fairsa {

enum class Pruning { kNone, kVerificationPairs, kVpsaIdentities };

std::string_view PruningName(Pruning pruning);  // "none", "verification-pairs", "vpsa-identities"
Pruning ParsePruning(std::string_view name);

struct CurvePoint {
  int level_index = 0;
  double stimulus = 0.0;
  std::optional<double> value;  // bias, or match rate for item-response curves
  std::size_t n_protected = 0;
  std::size_t n_unprotected = 0;

  bool defined() const { return value.has_value(); }
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

// A Fair SA curve (bias vs. stimulus) when `subgroup` is set, otherwise a
// VPSA item-response curve (match rate vs. stimulus).
struct Curve {
  Task task = Task::kSelfMatching;
  PerturbationKind kind = PerturbationKind::kGaussianBlur;
  std::optional<SubgroupSpec> subgroup;
  Pruning pruning = Pruning::kNone;
  double lower = 0.0;  // ladder bounds, used to normalize the stimulus axis
  double upper = 1.0;
  std::vector<CurvePoint> points;

  bool is_irc() const { return !subgroup.has_value(); }
  friend bool operator==(const Curve&, const Curve&) = default;
};

struct AuditOptions {
  Task task = Task::kSelfMatching;
  Pruning pruning = Pruning::kNone;
  double alpha = 0.01;
  // Self-matching threshold; calibrated on unperturbed data when absent.
  std::optional<float> threshold;
  int workers = 1;
  std::size_t block_rows = 64;
};

// Model responses for one stimulus level.
struct LevelResponses {
  int level_index = 0;
  double stimulus = 0.0;
  std::shared_ptr<const SimilarityMatrix> similarity;  // verification
  std::vector<float> diagonal;                         // self-matching
};

// Runs the sweep for one dataset and one provider pool. Gallery embeddings,
// the unperturbed similarity matrix, the calibrated threshold and the pruning
// state are computed once on first use and reused for every curve.
class Auditor {
 public:
  // Throws Error when the pruning mode does not fit the task.
  Auditor(const Dataset& dataset, ProviderPool& providers, AuditOptions options);

  const AuditOptions& options() const { return options_; }
  const Dataset& dataset() const { return dataset_; }

  const EmbeddingMatrix& Gallery();
  // Gallery against itself: the no-perturbation reference.
  std::shared_ptr<const SimilarityMatrix> Reference();
  // Self-matching threshold t (override or calibrated at 1 - alpha).
  float Threshold();
  const std::vector<std::size_t>& VpsaRetained();
  const PairMask& VerificationMask(const SubgroupSpec& spec);

  // Perturbs every image to `delta`, embeds the probes and compares them to
  // the gallery. Level 0 reuses the gallery without calling the perturbation.
  LevelResponses Respond(PerturbationKind kind, int level_index, double delta,
                         std::uint64_t seed);

  // One Fair SA point. Undefined (no value) when a subgroup is empty or a
  // subgroup metric has no support.
  CurvePoint FairSaPoint(const LevelResponses& responses, const SubgroupSpec& spec);
  // One VPSA item-response point (self-matching only).
  CurvePoint IrcPoint(const LevelResponses& responses);

  // One Fair SA curve per subgroup, plus the item-response curve when asked,
  // each level's responses being shared by all of them. IRC comes last.
  std::vector<Curve> Sweep(const PerturbationSpec& spec, std::span<const SubgroupSpec> subgroups,
                           bool include_irc);

  Curve FairSaCurve(const PerturbationSpec& spec, const SubgroupSpec& subgroup);
  Curve VpsaIrc(const PerturbationSpec& spec);

 private:
  const SubgroupPartition* PartitionFor(const SubgroupSpec& spec);

  const Dataset& dataset_;
  ProviderPool& providers_;
  AuditOptions options_;
  std::vector<std::int64_t> identities_;
  std::optional<EmbeddingMatrix> gallery_;
  std::shared_ptr<const SimilarityMatrix> reference_;
  std::optional<float> threshold_;
  std::optional<std::vector<std::size_t>> retained_;
  std::map<SubgroupSpec, std::optional<SubgroupPartition>> partitions_;
  std::map<SubgroupSpec, PairMask> masks_;
};

// Provider key of image `id` perturbed to `delta`; the bare id at delta 0.
std::string ProbeKey(std::string_view id, PerturbationKind kind, double delta);

}  // namespace fairsa

#endif  // FAIRSA_CURVES_H_
