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

#include "fairsa/common.h"
#include "fairsa/metrics.h"

#include <cmath>
#include <limits>
#include <random>

#include "fairsa/embed.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracles.h"

namespace fairsa {
namespace {

using ::testing::ElementsAre;
using testing::SquareMatrix;

EmbeddingMatrix Rows(std::vector<std::vector<float>> rows) {
  EmbeddingMatrix m;
  m.dim = static_cast<int>(rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.ids.push_back("e" + std::to_string(i));
    m.values.insert(m.values.end(), rows[i].begin(), rows[i].end());
  }
  return m;
}

EmbeddingMatrix RandomEmbeddings(std::mt19937_64& rng, std::size_t count, int dim) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<std::vector<float>> rows(count, std::vector<float>(dim));
  for (auto& r : rows) {
    for (float& v : r) v = n(rng);
  }
  return Rows(rows);
}

TEST(Similarity, Examples) {
  const EmbeddingMatrix a = Rows({{3, 4}, {1, 0}, {0, 1}});
  const EmbeddingMatrix b = Rows({{3, 4}, {0, 1}, {1, 1}, {0, 0}});
  const SimilarityMatrix s = ComputeSimilarity(a, b);
  EXPECT_EQ(s.rows(), 3u);
  EXPECT_EQ(s.cols(), 4u);
  EXPECT_NEAR(s(0, 0), 1.0, 1e-6);
  EXPECT_EQ(s(1, 1), 0.0f);
  EXPECT_NEAR(s(1, 2), 0.70710678, 1e-6);
  EXPECT_EQ(s(0, 3), 0.0f);
  EXPECT_EQ(s.probe_ids, a.ids);
  EXPECT_EQ(s.gallery_ids, b.ids);
  EXPECT_THROW(ComputeSimilarity(a, Rows({{1, 2, 3}})), Error);
}

TEST(Similarity, MatchesTripleLoop) {
  std::mt19937_64 rng(5);
  for (auto [np, ng, dim] : {std::tuple{1, 1, 1}, {7, 130, 3}, {200, 200, 64}, {65, 63, 17}}) {
    const EmbeddingMatrix p = RandomEmbeddings(rng, np, dim);
    const EmbeddingMatrix g = RandomEmbeddings(rng, ng, dim);
    const SimilarityMatrix s = ComputeSimilarity(p, g, {.workers = 3, .block_rows = 16});
    double worst = 0;
    for (int i = 0; i < np; ++i) {
      for (int j = 0; j < ng; ++j) {
        double ab = 0, aa = 0, bb = 0;
        for (int k = 0; k < dim; ++k) {
          ab += double(p.row(i)[k]) * g.row(j)[k];
          aa += double(p.row(i)[k]) * p.row(i)[k];
          bb += double(g.row(j)[k]) * g.row(j)[k];
        }
        worst = std::max(worst, std::abs(s(i, j) - ab / std::sqrt(aa * bb)));
      }
    }
    EXPECT_LE(worst, 1e-5);
  }
}

TEST(Similarity, UnitDiagonalAndBounds) {
  std::mt19937_64 rng(6);
  const EmbeddingMatrix e = RandomEmbeddings(rng, 90, 33);
  const SimilarityMatrix s = ComputeSimilarity(e, e);
  for (std::size_t i = 0; i < s.rows(); ++i) {
    EXPECT_NEAR(s(i, i), 1.0, 1e-5);
    for (float v : s.row(i)) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_LE(std::abs(v), 1.0 + 1e-5);
    }
  }
}

TEST(Similarity, BitIdenticalAcrossWorkersAndBlocks) {
  std::mt19937_64 rng(7);
  const EmbeddingMatrix p = RandomEmbeddings(rng, 301, 128);
  const EmbeddingMatrix g = RandomEmbeddings(rng, 257, 128);
  const SimilarityMatrix ref = ComputeSimilarity(p, g, {.workers = 1, .block_rows = 64});
  for (int workers : {2, 4, 8}) {
    for (std::size_t block : {1u, 7u, 64u, 1000u}) {
      EXPECT_EQ(ComputeSimilarity(p, g, {.workers = workers, .block_rows = block}).values, ref.values);
    }
  }
  std::vector<float> diag = DiagonalSimilarity(p, RandomEmbeddings(rng, 301, 128));
  EXPECT_EQ(diag.size(), 301u);
  const EmbeddingMatrix g2 = RandomEmbeddings(rng, 301, 128);
  const SimilarityMatrix full = ComputeSimilarity(p, g2);
  diag = DiagonalSimilarity(p, g2);
  for (std::size_t i = 0; i < diag.size(); ++i) EXPECT_EQ(diag[i], full(i, i));
}

TEST(FarThreshold, Examples) {
  std::vector<float> hundred;
  for (int i = 1; i <= 100; ++i) hundred.push_back(i / 100.0f);
  EXPECT_EQ(AllowedFalseAccepts(100, 0.01), 1u);
  EXPECT_EQ(FarThreshold(hundred, 0.01), 0.99f);
  EXPECT_EQ(testing::BruteForceThreshold(hundred, 0.01), 0.99f);

  std::vector<float> fifty(hundred.begin(), hundred.begin() + 50);
  EXPECT_EQ(AllowedFalseAccepts(50, 0.01), 0u);
  EXPECT_EQ(FarThreshold(fifty, 0.01), 0.5f);

  const std::vector<float> flat(77, 0.3f);
  EXPECT_EQ(FarThreshold(flat, 0.2), 0.3f);
  EXPECT_EQ(FarThreshold(flat, 0.99), 0.3f);
}

TEST(FarThreshold, Errors) {
  EXPECT_THROW(FarThreshold({}, 0.01), CalibrationUndefined);
  const std::vector<float> s = {0.1f};
  EXPECT_THROW(FarThreshold(s, 0.0), Error);
  EXPECT_THROW(FarThreshold(s, 1.0), Error);
  EXPECT_THROW(FarThreshold(s, std::nan("")), Error);
}

TEST(FarThreshold, AllowedFalseAcceptsIsExact) {
  for (std::size_t n : {1u, 3u, 10u, 49u, 100u, 101u, 1000u, 12345u}) {
    for (double alpha : {0.001, 0.01, 0.07, 0.1, 0.29, 0.3, 0.5, 0.7, 0.999}) {
      const std::size_t k = AllowedFalseAccepts(n, alpha);
      EXPECT_LE(static_cast<double>(k) / n, alpha);
      if (k < n) {
        EXPECT_GT(static_cast<double>(k + 1) / n, alpha);
      }
    }
  }
}

TEST(FarThreshold, MatchesBruteForceAndBoundsFar) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 500;
    const bool ties = trial % 3 == 0;
    const std::vector<float> scores = testing::RandomScores(rng, n, ties);
    const double alpha = std::uniform_real_distribution<double>(0.001, 0.6)(rng);
    const float t = FarThreshold(scores, alpha);
    EXPECT_EQ(t, testing::BruteForceThreshold(scores, alpha));
    std::size_t accepted = 0;
    for (float s : scores) accepted += s > t;
    EXPECT_LE(static_cast<double>(accepted) / n, alpha);

    FarThresholdAccumulator acc(n, alpha);
    for (float s : scores) acc.Add(s);
    EXPECT_EQ(acc.Threshold(), t);
  }
}

TEST(FarThresholdAccumulator, CountMismatchIsFatal) {
  FarThresholdAccumulator acc(3, 0.1);
  acc.Add(0.5f);
  EXPECT_THROW(acc.Threshold(), Error);
  EXPECT_THROW(FarThresholdAccumulator(0, 0.1).Threshold(), CalibrationUndefined);
}

TEST(GarAtFar, Examples) {
  const std::vector<float> genuine(10, 1.0f);
  const std::vector<float> imposter(1000, 0.0f);
  EXPECT_EQ(GarAtFar(genuine, imposter, 0.01), 1.0);
  EXPECT_THROW(GarAtFar({}, imposter, 0.01), MetricUndefined);
  EXPECT_THROW(GarAtFar(genuine, {}, 0.01), MetricUndefined);
}

TEST(GarAtFar, SameDistributionGivesAlpha) {
  std::mt19937_64 rng(9);
  std::vector<float> scores(10000);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (float& s : scores) s = u(rng);
  const double gar = GarAtFar(scores, scores, 0.01);
  const float t = FarThreshold(scores, 0.01);
  std::size_t above = 0;
  for (float s : scores) above += s > t;
  EXPECT_EQ(gar, static_cast<double>(above) / scores.size());
  EXPECT_NEAR(gar, 0.01, 1e-3);
}

TEST(GarAtFar, MatrixFormMatchesBruteForce) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 22;
    const auto inst = testing::MakeVerificationInstance(rng, n, trial % 4 == 0);
    BoolMatrix genuine(n, n, false);
    std::vector<float> g, imp;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        genuine.set(i, j, inst.ids[i] == inst.ids[j]);
        (inst.ids[i] == inst.ids[j] ? g : imp).push_back(inst.sim(i, j));
      }
    }
    const auto expected = testing::BruteForceGar(g, imp, 0.05);
    if (!expected) {
      EXPECT_THROW(GarAtFar(inst.sim, genuine, 0.05), MetricUndefined);
    } else {
      EXPECT_EQ(GarAtFar(inst.sim, genuine, 0.05), *expected);
    }
  }
}

TEST(SelfMatch, Examples) {
  const std::vector<float> diag = {0.9f, 0.5f, 0.7f};
  EXPECT_THAT(SelfMatchPredictions(diag, 0.7f), ElementsAre(true, false, true));
  const SimilarityMatrix id = SquareMatrix(2, {1, 0, 0, 1});
  EXPECT_THAT(SelfMatchPredictions(id, 1.0f), ElementsAre(true, true));
  EXPECT_THAT(SelfMatchPredictions(id, std::nextafter(1.0f, 2.0f)), ElementsAre(false, false));
  SimilarityMatrix rect = SquareMatrix(2, {1, 0, 0, 1, 0, 0});
  rect.gallery_ids.push_back("extra");
  EXPECT_THROW(SelfMatchPredictions(rect, 0.5f), Error);
}

TEST(StatisticalImparity, Examples) {
  EXPECT_EQ(StatisticalImparity({true, true, false, false}, {{0, 1}, {2, 3}}), 1.0);
  EXPECT_EQ(StatisticalImparity({true, true, true}, {{1}, {0, 2}}), 0.0);
  EXPECT_EQ(StatisticalImparity({true, false, true, false, true, false}, {{0, 1, 2}, {3, 4, 5}}),
            2.0 / 3.0 - 1.0 / 3.0);
  EXPECT_THROW(StatisticalImparity({true}, {{0}, {}}), SubgroupDegenerate);
}

TEST(StatisticalImparity, CountingOracleAndAntisymmetry) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 200;
    std::vector<bool> pred(n);
    for (std::size_t i = 0; i < n; ++i) pred[i] = rng() % 3 != 0;
    SubgroupPartition part;
    for (std::size_t i = 0; i < n; ++i) (rng() % 2 ? part.protected_indices : part.unprotected_indices).push_back(i);
    if (part.protected_indices.empty() || part.unprotected_indices.empty()) continue;
    const double v = StatisticalImparity(pred, part);
    EXPECT_EQ(v, testing::CountingImparity(pred, part));
    EXPECT_EQ(StatisticalImparity(pred, part.Swapped()), -v);
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(VerificationBias, Examples) {
  // Two subgroups with identical score blocks.
  const std::vector<std::int64_t> ids = {0, 0, 1, 1, 2, 2, 3, 3};
  std::vector<float> v(64);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      v[i * 8 + j] = ids[i] == ids[j] ? 0.9f : 0.1f * static_cast<float>((i + j) % 4);
    }
  }
  const SimilarityMatrix sim = SquareMatrix(8, v);
  const SubgroupPartition halves{{0, 1, 2, 3}, {4, 5, 6, 7}};
  // The blocks {0..3} and {4..7} hold the same values at the same offsets.
  EXPECT_EQ(VerificationBias(sim, ids, halves, 0.01, {}), 0.0);

  std::vector<float> w = v;
  for (std::size_t i = 4; i < 8; ++i) {
    for (std::size_t j = 4; j < 8; ++j) {
      if (ids[i] == ids[j]) w[i * 8 + j] = -0.5f;
    }
  }
  EXPECT_EQ(VerificationBias(SquareMatrix(8, w), ids, halves, 0.01, {}), 1.0);
  EXPECT_EQ(VerificationBias(SquareMatrix(8, w), ids, halves.Swapped(), 0.01, {}), -1.0);

  const std::vector<std::int64_t> unique = {0, 1, 2, 3, 4, 5, 6, 7};
  EXPECT_NO_THROW(VerificationBias(sim, unique, halves, 0.01, {}));
  const std::vector<std::int64_t> one = {0, 0, 0, 0, 1, 1, 2, 2};
  EXPECT_THROW(VerificationBias(sim, one, halves, 0.01, {}), MetricUndefined);
}

TEST(VerificationBias, MatchesPairListsAndIsAntisymmetric) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = trial == 0 ? 60 : 2 + rng() % 40;
    const auto inst = testing::MakeVerificationInstance(rng, n, trial % 5 == 0);
    if (inst.part.protected_indices.empty() || inst.part.unprotected_indices.empty()) continue;
    const double alpha = trial % 2 ? 0.01 : 0.1;
    const auto expected = testing::PairListBias(inst.sim, inst.ids, inst.part, alpha, {});
    if (!expected) {
      EXPECT_THROW(VerificationBias(inst.sim, inst.ids, inst.part, alpha, {}), MetricUndefined);
      continue;
    }
    const double v = VerificationBias(inst.sim, inst.ids, inst.part, alpha, {});
    EXPECT_EQ(v, *expected);
    EXPECT_EQ(VerificationBias(inst.sim, inst.ids, inst.part.Swapped(), alpha, {}), -v);
  }
}

TEST(PruneVerificationPairs, PerfectModelKeepsEverything) {
  const std::vector<std::int64_t> ids = {0, 0, 1, 1, 2, 2};
  std::vector<float> v(36);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) v[i * 6 + j] = ids[i] == ids[j] ? 0.9f : -0.2f;
  }
  const PairMask mask = PruneVerificationPairs(SquareMatrix(6, v), ids, {{0, 1, 2, 3}, {4, 5}}, 0.01);
  EXPECT_EQ(mask.count(), 36u);
}

TEST(PruneVerificationPairs, DropsForcedFalseMatch) {
  std::vector<std::int64_t> ids(10);
  for (std::size_t i = 0; i < 10; ++i) ids[i] = static_cast<std::int64_t>(i / 2);
  std::vector<float> v(100, 0.0f);
  for (std::size_t i = 0; i < 10; ++i) v[i * 10 + i] = 1.0f;
  v[0 * 10 + 2] = 1.0f;
  const SubgroupPartition part{{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}};
  // 16 imposter pairs per subgroup: alpha = 0.1 allows one false accept, so
  // the threshold is the second largest score.
  const PairMask mask = PruneVerificationPairs(SquareMatrix(10, v), ids, part, 0.1);
  EXPECT_FALSE(mask(0, 2));
  EXPECT_EQ(mask.count(), 99u);
}

TEST(PruneVerificationPairs, PostconditionsOnRandomInstances) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 40;
    const auto inst = testing::MakeVerificationInstance(rng, n, trial % 4 == 0);
    const PairMask mask = PruneVerificationPairs(inst.sim, inst.ids, inst.part, 0.01);
    for (const auto* members : {&inst.part.protected_indices, &inst.part.unprotected_indices}) {
      std::vector<float> imposter;
      for (std::size_t i : *members) {
        for (std::size_t j : *members) {
          if (inst.ids[i] != inst.ids[j]) imposter.push_back(inst.sim(i, j));
        }
      }
      if (imposter.empty()) continue;
      const float t = testing::BruteForceThreshold(imposter, 0.01);
      std::size_t false_accepts = 0;
      for (std::size_t i : *members) {
        for (std::size_t j : *members) {
          if (inst.ids[i] == inst.ids[j]) {
            EXPECT_TRUE(mask(i, j));
          } else if (mask(i, j) && inst.sim(i, j) > t) {
            ++false_accepts;
          } else if (!mask(i, j)) {
            EXPECT_GT(inst.sim(i, j), t);
          }
        }
      }
      EXPECT_EQ(false_accepts, 0u);
    }
    for (std::size_t i = 0; i < n; ++i) EXPECT_TRUE(mask(i, i));
  }
}

TEST(PruneIdentitiesVpsa, Examples) {
  const SimilarityMatrix ortho = SquareMatrix(3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_THAT(PruneIdentitiesVpsa(ortho, 0.5f), ElementsAre(0, 1, 2));
  const SimilarityMatrix dup = SquareMatrix(3, {1, 1, 0, 1, 1, 0, 0, 0, 1});
  EXPECT_THAT(PruneIdentitiesVpsa(dup, 0.5f), ElementsAre(2));
  EXPECT_THROW(PruneIdentitiesVpsa(SquareMatrix(2, {1, 1, 1, 1}), 0.5f), Error);
}

TEST(PruneIdentitiesVpsa, MatchesDoubleLoop) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 20;
    std::vector<float> v = testing::RandomScores(rng, n * n, trial % 3 == 0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 0.3f + 0.7f * std::abs(v[i * n + i]);
    const SimilarityMatrix sim = SquareMatrix(n, v);
    const float t = std::uniform_real_distribution<float>(0.3f, 0.99f)(rng);
    const auto expected = testing::DoubleLoopVpsa(sim, t);
    if (expected.empty()) {
      EXPECT_THROW(PruneIdentitiesVpsa(sim, t), Error);
    } else {
      EXPECT_EQ(PruneIdentitiesVpsa(sim, t), expected);
    }
  }
}

TEST(DefaultSelfMatchThreshold, UsesOffDiagonalImposters) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng() % 30;
    const auto inst = testing::MakeVerificationInstance(rng, n, trial % 2 == 0);
    std::vector<float> imposter;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && inst.ids[i] != inst.ids[j]) imposter.push_back(inst.sim(i, j));
      }
    }
    if (imposter.empty()) continue;
    EXPECT_EQ(DefaultSelfMatchThreshold(inst.sim, inst.ids, 0.01),
              testing::BruteForceThreshold(imposter, 0.01));
  }
}

}  // namespace
}  // namespace fairsa
