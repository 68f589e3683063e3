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

#ifndef FAIRSA_PERTURB_H_
#define FAIRSA_PERTURB_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fairsa/image.h"

namespace fairsa {

enum class PerturbationKind {
  kGaussianBlur,
  kGammaContrast,
  kRotation,
  kSpeckleNoise,
  kExposure,
  kSaturation,
  kMotionBlur,
  kJpegCompression,
  kVignette,
};

inline constexpr std::array<PerturbationKind, 9> kAllPerturbations = {
    PerturbationKind::kGaussianBlur,   PerturbationKind::kGammaContrast,
    PerturbationKind::kRotation,       PerturbationKind::kSpeckleNoise,
    PerturbationKind::kExposure,       PerturbationKind::kSaturation,
    PerturbationKind::kMotionBlur,     PerturbationKind::kJpegCompression,
    PerturbationKind::kVignette,
};

std::string_view KindName(PerturbationKind kind);  // e.g. "gaussian-blur"
PerturbationKind ParseKind(std::string_view name);

struct LevelRange {
  double lower;
  double upper;
};

// Default valid stimulus range of each kind.
LevelRange ValidRange(PerturbationKind kind);

// Exposure and saturation sweep through zero from both sides.
bool IsBidirectional(PerturbationKind kind);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::kGaussianBlur;
  int n = 5;
  double lower = 0.0;
  double upper = 1.0;
  std::uint64_t seed = 0;

  // Throws Error unless n >= 2, lower < upper, the bounds lie in the kind's
  // valid range, and they respect the kind's direction convention.
  void Validate() const;
};

// Evenly spaced stimulus levels, endpoints included.
struct StimulusLadder {
  std::vector<double> levels;

  // Index of the level equal to 0, or -1 when zero is off the grid.
  int ZeroIndex() const;
};

StimulusLadder MakeLadder(const PerturbationSpec& spec);

// Applies T(image, delta). Pure and deterministic; delta == 0 returns a
// bit-identical copy for every kind. `seed`, `image_id` and `level_index`
// only matter for speckle noise, whose generator is keyed on all three.
Image Apply(const Image& image, PerturbationKind kind, double delta, std::uint64_t seed = 0,
            std::string_view image_id = {}, int level_index = 0);

// Peak signal-to-noise ratio in dB over all channels; +inf for equal images.
double Psnr(const Image& a, const Image& b);

}  // namespace fairsa

#endif  // FAIRSA_PERTURB_H_
