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

#include "fairsa/metrics.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "fairsa/common.h"

namespace fairsa {
namespace {

constexpr std::size_t kTile = 64;  // gallery columns per accumulator tile

std::vector<float> NormalizedRows(const EmbeddingMatrix& m) {
  const std::size_t dim = static_cast<std::size_t>(m.dim);
  std::vector<float> out(m.values.size(), 0.0f);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto row = m.row(i);
    double norm_sq = 0.0;
    for (float v : row) norm_sq += static_cast<double>(v) * v;
    const double norm = std::sqrt(norm_sq);
    if (norm < 1e-12) continue;
    for (std::size_t k = 0; k < dim; ++k) {
      out[i * dim + k] = static_cast<float>(row[k] / norm);
    }
  }
  return out;
}

void CheckAlpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error("FAR level must lie in (0, 1), got " + FormatReal(alpha));
  }
}

bool Kept(const PairMask& mask, std::size_t i, std::size_t j) {
  return mask.rows == 0 || mask(i, j);
}

void CheckSquare(const SimilarityMatrix& sim, const char* what) {
  if (!sim.square()) throw Error(std::string(what) + " needs a square probe == gallery matrix");
}

// Visits every (i, j) pair inside `members` that survives `mask`.
template <typename Fn>
void ForEachSubgroupPair(std::span<const std::size_t> members, const PairMask& mask, Fn fn) {
  for (std::size_t i : members) {
    for (std::size_t j : members) {
      if (Kept(mask, i, j)) fn(i, j);
    }
  }
}

}  // namespace

std::string_view TaskName(Task task) {
  return task == Task::kVerification ? "verification" : "self-matching";
}

Task ParseTask(std::string_view name) {
  if (name == "verification") return Task::kVerification;
  if (name == "self-matching") return Task::kSelfMatching;
  throw Error("unknown task '" + std::string(name) + "'");
}

SimilarityMatrix ComputeSimilarity(const EmbeddingMatrix& probe, const EmbeddingMatrix& gallery,
                                   const SimilarityOptions& options) {
  if (probe.dim != gallery.dim) {
    throw Error("similarity of embeddings with different dims (" + std::to_string(probe.dim) +
                " vs " + std::to_string(gallery.dim) + ")");
  }
  const std::size_t dim = static_cast<std::size_t>(probe.dim);
  const std::size_t n_probe = probe.size();
  const std::size_t n_gallery = gallery.size();

  SimilarityMatrix out;
  out.probe_ids = probe.ids;
  out.gallery_ids = gallery.ids;
  out.values.resize(n_probe * n_gallery);
  if (n_probe == 0 || n_gallery == 0) return out;

  const std::vector<float> p = NormalizedRows(probe);
  const std::vector<float> g = NormalizedRows(gallery);
  // Transposed gallery, columns padded to a whole number of tiles.
  const std::size_t padded = (n_gallery + kTile - 1) / kTile * kTile;
  std::vector<float> gt(dim * padded, 0.0f);
  for (std::size_t j = 0; j < n_gallery; ++j) {
    for (std::size_t k = 0; k < dim; ++k) gt[k * padded + j] = g[j * dim + k];
  }

  const std::size_t block = std::max<std::size_t>(options.block_rows, 1);
  const std::size_t blocks = (n_probe + block - 1) / block;
  ParallelFor(blocks, options.workers, [&](std::size_t b) {
    const std::size_t row_begin = b * block;
    const std::size_t row_end = std::min(n_probe, row_begin + block);
    alignas(64) float acc[kTile];
    for (std::size_t j0 = 0; j0 < padded; j0 += kTile) {
      const std::size_t width = std::min(kTile, n_gallery - j0);
      for (std::size_t i = row_begin; i < row_end; ++i) {
        std::fill(std::begin(acc), std::end(acc), 0.0f);
        const float* prow = p.data() + i * dim;
        for (std::size_t k = 0; k < dim; ++k) {
          const float pk = prow[k];
          const float* gcol = gt.data() + k * padded + j0;
          for (std::size_t t = 0; t < kTile; ++t) acc[t] += pk * gcol[t];
        }
        std::copy(acc, acc + width, out.values.begin() + i * n_gallery + j0);
      }
    }
  });
  return out;
}

std::vector<float> DiagonalSimilarity(const EmbeddingMatrix& probe,
                                      const EmbeddingMatrix& gallery) {
  if (probe.dim != gallery.dim) throw Error("diagonal similarity of embeddings with different dims");
  if (probe.size() != gallery.size()) throw Error("diagonal similarity needs equal row counts");
  const std::size_t dim = static_cast<std::size_t>(probe.dim);
  const std::vector<float> p = NormalizedRows(probe);
  const std::vector<float> g = NormalizedRows(gallery);
  std::vector<float> out(probe.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    float acc = 0.0f;
    for (std::size_t k = 0; k < dim; ++k) acc += p[i * dim + k] * g[i * dim + k];
    out[i] = acc;
  }
  return out;
}

std::size_t BoolMatrix::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true));
}

std::size_t AllowedFalseAccepts(std::size_t n, double alpha) {
  CheckAlpha(alpha);
  const double dn = static_cast<double>(n);
  auto rate = [dn](std::size_t k) { return static_cast<double>(k) / dn; };
  std::size_t k = static_cast<std::size_t>(std::floor(alpha * dn));
  // floor(alpha * n) can land one off the exact rule "k / n <= alpha".
  while (k < n && rate(k + 1) <= alpha) ++k;
  while (k > 0 && rate(k) > alpha) --k;
  return k;
}

FarThresholdAccumulator::FarThresholdAccumulator(std::size_t total, double alpha)
    : total_(total), keep_(AllowedFalseAccepts(total, alpha) + 1) {
  if (keep_ <= total_) heap_.reserve(keep_);
}

void FarThresholdAccumulator::Add(float score) {
  ++seen_;
  if (keep_ > total_) return;
  auto greater = std::greater<float>();
  if (heap_.size() < keep_) {
    heap_.push_back(score);
    std::push_heap(heap_.begin(), heap_.end(), greater);
  } else if (score > heap_.front()) {
    std::pop_heap(heap_.begin(), heap_.end(), greater);
    heap_.back() = score;
    std::push_heap(heap_.begin(), heap_.end(), greater);
  }
}

float FarThresholdAccumulator::Threshold() const {
  if (total_ == 0) throw CalibrationUndefined("no imposter scores to calibrate a threshold");
  if (seen_ != total_) {
    throw Error("threshold accumulator expected " + std::to_string(total_) + " scores, got " +
                std::to_string(seen_));
  }
  if (keep_ > total_) return -std::numeric_limits<float>::infinity();
  return heap_.front();
}

float FarThreshold(std::span<const float> imposter_scores, double alpha) {
  if (imposter_scores.empty()) {
    throw CalibrationUndefined("no imposter scores to calibrate a threshold");
  }
  const std::size_t k = AllowedFalseAccepts(imposter_scores.size(), alpha);
  if (k >= imposter_scores.size()) return -std::numeric_limits<float>::infinity();
  std::vector<float> scores(imposter_scores.begin(), imposter_scores.end());
  std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k), scores.end(),
                   std::greater<float>());
  return scores[k];
}

double GarAtFar(std::span<const float> genuine, std::span<const float> imposter, double alpha) {
  if (genuine.empty()) throw MetricUndefined("GAR undefined without genuine pairs");
  const float t = FarThreshold(imposter, alpha);
  const auto accepted = std::count_if(genuine.begin(), genuine.end(), [t](float s) { return s > t; });
  return static_cast<double>(accepted) / static_cast<double>(genuine.size());
}

double GarAtFar(const SimilarityMatrix& scores, const BoolMatrix& genuine, double alpha) {
  if (genuine.rows != scores.rows() || genuine.cols != scores.cols()) {
    throw Error("genuine mask shape does not match the score matrix");
  }
  std::vector<float> gen;
  std::vector<float> imp;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    for (std::size_t j = 0; j < scores.cols(); ++j) {
      (genuine(i, j) ? gen : imp).push_back(scores(i, j));
    }
  }
  return GarAtFar(gen, imp, alpha);
}

double SubgroupGarAtFar(const SimilarityMatrix& sim, std::span<const std::int64_t> identities,
                        std::span<const std::size_t> members, double alpha,
                        const PairMask& mask) {
  CheckSquare(sim, "verification scoring");
  if (identities.size() != sim.rows()) throw Error("identity labels do not match the matrix");
  std::size_t n_genuine = 0;
  std::size_t n_imposter = 0;
  ForEachSubgroupPair(members, mask, [&](std::size_t i, std::size_t j) {
    ++(identities[i] == identities[j] ? n_genuine : n_imposter);
  });
  if (n_genuine == 0) throw MetricUndefined("subgroup has no genuine pairs");
  if (n_imposter == 0) throw CalibrationUndefined("subgroup has no imposter pairs");

  FarThresholdAccumulator calibration(n_imposter, alpha);
  ForEachSubgroupPair(members, mask, [&](std::size_t i, std::size_t j) {
    if (identities[i] != identities[j]) calibration.Add(sim(i, j));
  });
  const float t = calibration.Threshold();
  std::size_t accepted = 0;
  ForEachSubgroupPair(members, mask, [&](std::size_t i, std::size_t j) {
    if (identities[i] == identities[j] && sim(i, j) > t) ++accepted;
  });
  return static_cast<double>(accepted) / static_cast<double>(n_genuine);
}

double VerificationBias(const SimilarityMatrix& sim, std::span<const std::int64_t> identities,
                        const SubgroupPartition& part, double alpha, const PairMask& mask) {
  const double favored = SubgroupGarAtFar(sim, identities, part.protected_indices, alpha, mask);
  const double other = SubgroupGarAtFar(sim, identities, part.unprotected_indices, alpha, mask);
  return favored - other;
}

std::vector<bool> SelfMatchPredictions(const SimilarityMatrix& sim, float t) {
  CheckSquare(sim, "self-matching");
  std::vector<bool> pred(sim.rows());
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = sim(i, i) >= t;
  return pred;
}

std::vector<bool> SelfMatchPredictions(std::span<const float> diagonal, float t) {
  std::vector<bool> pred(diagonal.size());
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = diagonal[i] >= t;
  return pred;
}

double StatisticalImparity(const std::vector<bool>& pred, const SubgroupPartition& part) {
  if (part.protected_indices.empty() || part.unprotected_indices.empty()) {
    throw SubgroupDegenerate("statistical imparity needs two non-empty subgroups");
  }
  auto rate = [&pred](const std::vector<std::size_t>& members) {
    std::size_t matches = 0;
    for (std::size_t i : members) matches += pred.at(i) ? 1 : 0;
    return static_cast<double>(matches) / static_cast<double>(members.size());
  };
  return rate(part.protected_indices) - rate(part.unprotected_indices);
}

PairMask PruneVerificationPairs(const SimilarityMatrix& sim0,
                                std::span<const std::int64_t> identities,
                                const SubgroupPartition& part, double alpha) {
  CheckSquare(sim0, "verification pruning");
  if (identities.size() != sim0.rows()) throw Error("identity labels do not match the matrix");
  PairMask mask(sim0.rows(), sim0.cols(), true);
  const PairMask all;
  for (const auto* members : {&part.protected_indices, &part.unprotected_indices}) {
    std::size_t n_imposter = 0;
    ForEachSubgroupPair(*members, all, [&](std::size_t i, std::size_t j) {
      if (identities[i] != identities[j]) ++n_imposter;
    });
    if (n_imposter == 0) continue;
    FarThresholdAccumulator calibration(n_imposter, alpha);
    ForEachSubgroupPair(*members, all, [&](std::size_t i, std::size_t j) {
      if (identities[i] != identities[j]) calibration.Add(sim0(i, j));
    });
    const float t = calibration.Threshold();
    ForEachSubgroupPair(*members, all, [&](std::size_t i, std::size_t j) {
      if (identities[i] != identities[j] && sim0(i, j) > t) mask.set(i, j, false);
    });
  }
  return mask;
}

std::vector<std::size_t> PruneIdentitiesVpsa(const SimilarityMatrix& sim0, float t) {
  CheckSquare(sim0, "VPSA pruning");
  std::vector<std::size_t> retained;
  for (std::size_t i = 0; i < sim0.rows(); ++i) {
    if (!(sim0(i, i) >= t)) continue;
    bool distinct = true;
    const auto row = sim0.row(i);
    for (std::size_t j = 0; j < row.size() && distinct; ++j) {
      if (j != i && row[j] >= t) distinct = false;
    }
    if (distinct) retained.push_back(i);
  }
  if (retained.empty()) {
    throw Error("VPSA pruning at threshold " + FormatReal(t) + " retained no images");
  }
  return retained;
}

float DefaultSelfMatchThreshold(const SimilarityMatrix& sim0,
                                std::span<const std::int64_t> identities, double alpha) {
  CheckSquare(sim0, "self-matching calibration");
  if (identities.size() != sim0.rows()) throw Error("identity labels do not match the matrix");
  const std::size_t n = sim0.rows();
  std::size_t n_imposter = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) n_imposter += (i != j && identities[i] != identities[j]);
  }
  FarThresholdAccumulator calibration(n_imposter, alpha);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && identities[i] != identities[j]) calibration.Add(sim0(i, j));
    }
  }
  return calibration.Threshold();
}

}  // namespace fairsa
