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

#ifndef FAIRSA_METRICS_H_
#define FAIRSA_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairsa/dataset.h"
#include "fairsa/embed.h"

namespace fairsa {

enum class Task { kVerification, kSelfMatching };

std::string_view TaskName(Task task);  // "verification" / "self-matching"
Task ParseTask(std::string_view name);

// Cosine similarities, n_probe x n_gallery, row-major.
struct SimilarityMatrix {
  std::vector<std::string> probe_ids;
  std::vector<std::string> gallery_ids;
  std::vector<float> values;

  std::size_t rows() const { return probe_ids.size(); }
  std::size_t cols() const { return gallery_ids.size(); }
  float operator()(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * cols(), cols()}; }
  bool square() const { return rows() == cols() && probe_ids == gallery_ids; }
};

struct SimilarityOptions {
  int workers = 1;
  std::size_t block_rows = 64;
};

// values[i][j] = <p_i, g_j> / (|p_i| |g_j|), 0 when either norm < 1e-12.
// Rows are normalized once, then dot products run over cache-sized tiles of
// the transposed gallery. Each entry is accumulated over the embedding
// dimension in index order, so the result is bit-identical for every worker
// count and block size.
SimilarityMatrix ComputeSimilarity(const EmbeddingMatrix& probe, const EmbeddingMatrix& gallery,
                                   const SimilarityOptions& options = {});

// The diagonal of ComputeSimilarity(probe, gallery), computed with the same
// arithmetic in O(n * dim).
std::vector<float> DiagonalSimilarity(const EmbeddingMatrix& probe,
                                      const EmbeddingMatrix& gallery);

// Dense boolean matrix.
struct BoolMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<bool> bits;

  BoolMatrix() = default;
  BoolMatrix(std::size_t r, std::size_t c, bool fill) : rows(r), cols(c), bits(r * c, fill) {}
  bool operator()(std::size_t i, std::size_t j) const { return bits[i * cols + j]; }
  void set(std::size_t i, std::size_t j, bool v) { bits[i * cols + j] = v; }
  std::size_t count() const;

  friend bool operator==(const BoolMatrix&, const BoolMatrix&) = default;
};

// Pairs kept for verification scoring. All-true means nothing was pruned.
using PairMask = BoolMatrix;

// Largest k with k / n <= alpha, i.e. the false accepts allowed among n.
std::size_t AllowedFalseAccepts(std::size_t n, double alpha);

// Order-statistic operating threshold. With k = AllowedFalseAccepts(N, alpha)
// the threshold is the (k+1)-th largest imposter score (-inf when k >= N).
// Acceptance is always "score > threshold", which guarantees FAR <= alpha
// under ties. Throws CalibrationUndefined for an empty score list.
float FarThreshold(std::span<const float> imposter_scores, double alpha);

// Streaming form of FarThreshold for score sets too large to copy. The total
// count must be known up front; memory is O(k).
class FarThresholdAccumulator {
 public:
  FarThresholdAccumulator(std::size_t total, double alpha);
  void Add(float score);
  // Throws CalibrationUndefined when total == 0 and Error when the number of
  // added scores differs from `total`.
  float Threshold() const;

 private:
  std::size_t total_;
  std::size_t seen_ = 0;
  std::size_t keep_;         // k + 1
  std::vector<float> heap_;  // min-heap of the largest keep_ scores
};

// Fraction of genuine scores strictly above the FarThreshold of the imposter
// scores. Throws MetricUndefined without genuine scores and
// CalibrationUndefined without imposter scores.
double GarAtFar(std::span<const float> genuine, std::span<const float> imposter, double alpha);

// Matrix form: `genuine` marks genuine pairs; every other pair is an imposter.
double GarAtFar(const SimilarityMatrix& scores, const BoolMatrix& genuine, double alpha);

// GAR@FAR over pairs (i, j) with both i and j in `members` and mask(i, j) set.
// Genuine pairs share an identity. Calibrated on the subgroup's own imposters.
double SubgroupGarAtFar(const SimilarityMatrix& sim, std::span<const std::int64_t> identities,
                        std::span<const std::size_t> members, double alpha,
                        const PairMask& mask);

// GAR@FAR(protected) - GAR@FAR(unprotected); cross-subgroup pairs ignored.
double VerificationBias(const SimilarityMatrix& sim, std::span<const std::int64_t> identities,
                        const SubgroupPartition& part, double alpha, const PairMask& mask);

// pred[i] = values[i][i] >= t. Throws Error for a non-square matrix.
std::vector<bool> SelfMatchPredictions(const SimilarityMatrix& sim, float t);
std::vector<bool> SelfMatchPredictions(std::span<const float> diagonal, float t);

// Match rate of the protected subgroup minus that of the unprotected one.
// Throws SubgroupDegenerate if either index set is empty.
double StatisticalImparity(const std::vector<bool>& pred, const SubgroupPartition& part);

// Within each subgroup, drops imposter pairs whose no-perturbation score
// exceeds that subgroup's own FarThreshold. Genuine pairs and pairs that
// cross subgroups are kept. A subgroup without imposter pairs is left as is.
PairMask PruneVerificationPairs(const SimilarityMatrix& sim0,
                                std::span<const std::int64_t> identities,
                                const SubgroupPartition& part, double alpha);

// Keeps i iff values[i][i] >= t and values[i][j] < t for every j != i.
// Throws Error when nothing survives.
std::vector<std::size_t> PruneIdentitiesVpsa(const SimilarityMatrix& sim0, float t);

// FarThreshold over off-diagonal pairs of different identities of a square
// no-perturbation matrix; the default self-matching threshold.
float DefaultSelfMatchThreshold(const SimilarityMatrix& sim0,
                                std::span<const std::int64_t> identities, double alpha);

}  // namespace fairsa

#endif  // FAIRSA_METRICS_H_
