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

#ifndef FAIRSA_COMMON_H_
#define FAIRSA_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fairsa {

// Base class of every fatal condition raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A protected or unprotected subgroup is empty, so a bias is undefined.
class SubgroupDegenerate : public Error {
 public:
  using Error::Error;
};

// A task metric has no support (e.g. no genuine or no imposter pairs).
class MetricUndefined : public Error {
 public:
  using Error::Error;
};

// An operating threshold cannot be calibrated from an empty score set.
class CalibrationUndefined : public MetricUndefined {
 public:
  using MetricUndefined::MetricUndefined;
};

// A curve has fewer than two defined points.
class AucUndefined : public Error {
 public:
  using Error::Error;
};

// Runs `fn(task)` for task in [0, num_tasks) on up to `workers` threads.
// Tasks are handed out dynamically; callers must write results by task index
// so that the outcome does not depend on scheduling. The first exception
// thrown by any task is rethrown on the calling thread.
void ParallelFor(std::size_t num_tasks, int workers,
                 const std::function<void(std::size_t)>& fn);

// Worker count to use when the caller asks for "all cores".
int DefaultWorkerCount();

// SplitMix64 finalizer.
std::uint64_t Mix64(std::uint64_t x);

// Order-sensitive combination of a run seed, a string key and a counter.
std::uint64_t Hash64(std::uint64_t seed, std::string_view key,
                     std::uint64_t counter);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string DigestHex(std::string_view bytes);

// Shortest "%.9g" rendering used by every text output.
std::string FormatReal(double value);

}  // namespace fairsa

#endif  // FAIRSA_COMMON_H_
