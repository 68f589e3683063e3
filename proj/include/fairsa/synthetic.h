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

#ifndef FAIRSA_SYNTHETIC_H_
#define FAIRSA_SYNTHETIC_H_

#include <filesystem>

#include "fairsa/image.h"

namespace fairsa {

// Procedural face-like corpus with a known robustness asymmetry. Even
// identities carry their identity signal in high-frequency stripes (attribute
// "Stripes" = 1), odd identities in low-frequency gradients. Blur erases the
// first kind and barely touches the second. A second attribute, "Warm",
// tints half of each group.
struct SyntheticOptions {
  int identities = 32;
  int images_per_identity = 2;
  // Extra identities with one image each, numbered after the others. VPSA
  // pruning only retains identities without a second image.
  int singles = 0;
  int size = 64;
};

Image SyntheticImage(int identity, int variant, int size);

bool SyntheticStripes(int identity);
bool SyntheticWarm(int identity);

// Writes <dir>/images/*.png, <dir>/identity.txt and <dir>/attributes.txt
// (CelebA layout).
void WriteSyntheticDataset(const std::filesystem::path& dir, const SyntheticOptions& options = {});

}  // namespace fairsa

#endif  // FAIRSA_SYNTHETIC_H_
