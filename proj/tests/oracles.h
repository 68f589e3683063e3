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

#ifndef FAIRSA_TESTS_ORACLES_H_
#define FAIRSA_TESTS_ORACLES_H_

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "fairsa/dataset.h"
#include "fairsa/metrics.h"

namespace fairsa::testing {

// Tries every observed score as the threshold and keeps the lowest one whose
// strict-greater acceptance rate stays within alpha.
float BruteForceThreshold(const std::vector<float>& imposter, double alpha);

// Accepted fraction of `genuine` at BruteForceThreshold(imposter).
std::optional<double> BruteForceGar(const std::vector<float>& genuine,
                                    const std::vector<float>& imposter, double alpha);

// count(pred over P) / |P| - count(pred over U) / |U|.
double CountingImparity(const std::vector<bool>& pred, const SubgroupPartition& part);

// Lists the genuine and imposter pairs of one subgroup explicitly and runs
// BruteForceGar on them. `mask` may be empty (keep everything).
std::optional<double> PairListGar(const SimilarityMatrix& sim,
                                  const std::vector<std::int64_t>& ids,
                                  const std::vector<std::size_t>& members, double alpha,
                                  const PairMask& mask);

std::optional<double> PairListBias(const SimilarityMatrix& sim,
                                   const std::vector<std::int64_t>& ids,
                                   const SubgroupPartition& part, double alpha,
                                   const PairMask& mask);

// Double loop over every row of a square matrix.
std::vector<std::size_t> DoubleLoopVpsa(const SimilarityMatrix& sim, float t);

SimilarityMatrix SquareMatrix(std::size_t n, std::vector<float> values);

// Scores in [-1, 1]; with `ties`, drawn from a handful of distinct values.
std::vector<float> RandomScores(std::mt19937_64& rng, std::size_t n, bool ties);

// A random n x n similarity instance with identities of 1-4 images each,
// genuine pairs shifted upwards, and a random binary partition.
struct RandomVerificationInstance {
  SimilarityMatrix sim;
  std::vector<std::int64_t> ids;
  SubgroupPartition part;
};
RandomVerificationInstance MakeVerificationInstance(std::mt19937_64& rng, std::size_t n,
                                                    bool ties);

}  // namespace fairsa::testing

#endif  // FAIRSA_TESTS_ORACLES_H_
