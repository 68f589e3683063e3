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

#include "fairsa/curves.h"

#include <algorithm>

#include "fairsa/common.h"

namespace fairsa {
namespace {

SubgroupPartition RestrictTo(const SubgroupPartition& part,
                             const std::vector<std::size_t>& retained) {
  auto keep = [&retained](const std::vector<std::size_t>& members) {
    std::vector<std::size_t> out;
    std::set_intersection(members.begin(), members.end(), retained.begin(), retained.end(),
                          std::back_inserter(out));
    return out;
  };
  return {keep(part.protected_indices), keep(part.unprotected_indices)};
}

}  // namespace

std::string_view PruningName(Pruning pruning) {
  switch (pruning) {
    case Pruning::kNone:
      return "none";
    case Pruning::kVerificationPairs:
      return "verification-pairs";
    case Pruning::kVpsaIdentities:
      return "vpsa-identities";
  }
  return "none";
}

Pruning ParsePruning(std::string_view name) {
  if (name == "none") return Pruning::kNone;
  if (name == "verification-pairs") return Pruning::kVerificationPairs;
  if (name == "vpsa-identities") return Pruning::kVpsaIdentities;
  throw Error("unknown pruning mode '" + std::string(name) + "'");
}

std::string ProbeKey(std::string_view id, PerturbationKind kind, double delta) {
  std::string key(id);
  if (delta == 0.0) return key;
  key += '@';
  key += KindName(kind);
  key += '=';
  key += FormatReal(delta);
  return key;
}

Auditor::Auditor(const Dataset& dataset, ProviderPool& providers, AuditOptions options)
    : dataset_(dataset),
      providers_(providers),
      options_(options),
      identities_(dataset.Identities()) {
  if (options_.pruning == Pruning::kVerificationPairs && options_.task != Task::kVerification) {
    throw Error("verification-pairs pruning applies only to the verification task");
  }
  if (options_.pruning == Pruning::kVpsaIdentities && options_.task != Task::kSelfMatching) {
    throw Error("vpsa-identities pruning applies only to the self-matching task");
  }
  AllowedFalseAccepts(1, options_.alpha);  // validates alpha
}

const EmbeddingMatrix& Auditor::Gallery() {
  if (!gallery_) {
    gallery_ = EmbedParallel(providers_, dataset_.size(), [this](std::size_t i, bool pixels) {
      return LabeledImage{dataset_[i].id, pixels ? dataset_.LoadImage(i) : Image{}};
    });
  }
  return *gallery_;
}

std::shared_ptr<const SimilarityMatrix> Auditor::Reference() {
  if (!reference_) {
    reference_ = std::make_shared<const SimilarityMatrix>(ComputeSimilarity(
        Gallery(), Gallery(), {.workers = options_.workers, .block_rows = options_.block_rows}));
  }
  return reference_;
}

float Auditor::Threshold() {
  if (!threshold_) {
    threshold_ = options_.threshold ? *options_.threshold
                                    : DefaultSelfMatchThreshold(*Reference(), identities_,
                                                                options_.alpha);
  }
  return *threshold_;
}

const std::vector<std::size_t>& Auditor::VpsaRetained() {
  if (!retained_) retained_ = PruneIdentitiesVpsa(*Reference(), Threshold());
  return *retained_;
}

const SubgroupPartition* Auditor::PartitionFor(const SubgroupSpec& spec) {
  auto it = partitions_.find(spec);
  if (it == partitions_.end()) {
    std::optional<SubgroupPartition> part;
    try {
      part = Partition(dataset_, spec);
    } catch (const SubgroupDegenerate&) {
      part.reset();
    }
    it = partitions_.emplace(spec, std::move(part)).first;
  }
  return it->second ? &*it->second : nullptr;
}

const PairMask& Auditor::VerificationMask(const SubgroupSpec& spec) {
  auto it = masks_.find(spec);
  if (it != masks_.end()) return it->second;
  const SubgroupPartition* part = PartitionFor(spec);
  if (part == nullptr) throw SubgroupDegenerate("subgroup " + spec.Label() + " is degenerate");
  return masks_.emplace(spec, PruneVerificationPairs(*Reference(), identities_, *part,
                                                     options_.alpha))
      .first->second;
}

LevelResponses Auditor::Respond(PerturbationKind kind, int level_index, double delta,
                                std::uint64_t seed) {
  LevelResponses out;
  out.level_index = level_index;
  out.stimulus = delta;
  const EmbeddingMatrix& gallery = Gallery();
  if (delta == 0.0) {
    if (options_.task == Task::kVerification) {
      out.similarity = Reference();
    } else {
      out.diagonal = DiagonalSimilarity(gallery, gallery);
    }
    return out;
  }
  EmbeddingMatrix probes =
      EmbedParallel(providers_, dataset_.size(), [&](std::size_t i, bool pixels) {
        const ImageRecord& record = dataset_[i];
        LabeledImage item{ProbeKey(record.id, kind, delta), {}};
        if (pixels) item.image = Apply(dataset_.LoadImage(i), kind, delta, seed, record.id, level_index);
        return item;
      });
  probes.ids = gallery.ids;  // rows are records; the keys were only for the provider
  if (options_.task == Task::kVerification) {
    out.similarity = std::make_shared<const SimilarityMatrix>(ComputeSimilarity(
        probes, gallery, {.workers = options_.workers, .block_rows = options_.block_rows}));
  } else {
    out.diagonal = DiagonalSimilarity(probes, gallery);
  }
  return out;
}

CurvePoint Auditor::FairSaPoint(const LevelResponses& responses, const SubgroupSpec& spec) {
  CurvePoint point;
  point.level_index = responses.level_index;
  point.stimulus = responses.stimulus;
  const SubgroupPartition* part = PartitionFor(spec);
  if (part == nullptr) {
    const auto column = dataset_.AttributeIndex(spec.attribute);
    for (const auto& r : dataset_.records()) {
      ++(r.attributes[column] == spec.value ? point.n_protected : point.n_unprotected);
    }
    return point;
  }
  if (options_.task == Task::kVerification) {
    point.n_protected = part->protected_indices.size();
    point.n_unprotected = part->unprotected_indices.size();
    static const PairMask kNoMask;
    const PairMask& mask =
        options_.pruning == Pruning::kVerificationPairs ? VerificationMask(spec) : kNoMask;
    try {
      point.value = VerificationBias(*responses.similarity, identities_, *part, options_.alpha, mask);
    } catch (const MetricUndefined&) {
      point.value.reset();
    }
    return point;
  }

  const SubgroupPartition restricted = options_.pruning == Pruning::kVpsaIdentities
                                           ? RestrictTo(*part, VpsaRetained())
                                           : *part;
  point.n_protected = restricted.protected_indices.size();
  point.n_unprotected = restricted.unprotected_indices.size();
  if (restricted.protected_indices.empty() || restricted.unprotected_indices.empty()) return point;
  point.value = StatisticalImparity(SelfMatchPredictions(responses.diagonal, Threshold()), restricted);
  return point;
}

CurvePoint Auditor::IrcPoint(const LevelResponses& responses) {
  if (options_.task != Task::kSelfMatching) {
    throw Error("item-response curves are defined for the self-matching task");
  }
  CurvePoint point;
  point.level_index = responses.level_index;
  point.stimulus = responses.stimulus;
  const auto pred = SelfMatchPredictions(responses.diagonal, Threshold());
  std::size_t matches = 0;
  if (options_.pruning == Pruning::kVpsaIdentities) {
    const auto& retained = VpsaRetained();
    for (std::size_t i : retained) matches += pred[i] ? 1 : 0;
    point.n_protected = retained.size();
  } else {
    matches = static_cast<std::size_t>(std::count(pred.begin(), pred.end(), true));
    point.n_protected = pred.size();
  }
  point.value = static_cast<double>(matches) / static_cast<double>(point.n_protected);
  return point;
}

std::vector<Curve> Auditor::Sweep(const PerturbationSpec& spec,
                                  std::span<const SubgroupSpec> subgroups, bool include_irc) {
  spec.Validate();
  if (include_irc && options_.task != Task::kSelfMatching) {
    throw Error("item-response curves are defined for the self-matching task");
  }
  for (const auto& subgroup : subgroups) dataset_.AttributeIndex(subgroup.attribute);
  const StimulusLadder ladder = MakeLadder(spec);

  std::vector<Curve> curves;
  auto make_curve = [&](std::optional<SubgroupSpec> subgroup) {
    Curve c;
    c.task = options_.task;
    c.kind = spec.kind;
    c.subgroup = std::move(subgroup);
    c.pruning = options_.pruning;
    c.lower = spec.lower;
    c.upper = spec.upper;
    return c;
  };
  for (const auto& subgroup : subgroups) curves.push_back(make_curve(subgroup));
  if (include_irc) curves.push_back(make_curve(std::nullopt));

  for (std::size_t level = 0; level < ladder.levels.size(); ++level) {
    const LevelResponses responses =
        Respond(spec.kind, static_cast<int>(level), ladder.levels[level], spec.seed);
    for (std::size_t s = 0; s < subgroups.size(); ++s) {
      curves[s].points.push_back(FairSaPoint(responses, subgroups[s]));
    }
    if (include_irc) curves.back().points.push_back(IrcPoint(responses));
  }
  return curves;
}

Curve Auditor::FairSaCurve(const PerturbationSpec& spec, const SubgroupSpec& subgroup) {
  return Sweep(spec, std::span(&subgroup, 1), false).front();
}

Curve Auditor::VpsaIrc(const PerturbationSpec& spec) { return Sweep(spec, {}, true).front(); }

}  // namespace fairsa
