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

#include "fairsa/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "fairsa/common.h"
#include "fairsa/report.h"

namespace fairsa {

bool SyntheticStripes(int identity) { return identity % 2 == 0; }

bool SyntheticWarm(int identity) { return identity % 4 == 0 || identity % 4 == 3; }

Image SyntheticImage(int identity, int variant, int size) {
  if (size < 16) throw Error("synthetic images need size >= 16");
  constexpr double kPi = std::numbers::pi;
  const int k = identity / 2;
  const bool stripes = SyntheticStripes(identity);
  // Golden-ratio spacing keeps stripe orientations distinct for every k.
  const double turn = k * std::numbers::phi - std::floor(k * std::numbers::phi);
  const double angle = stripes ? kPi * turn : 2.0 * kPi * k / 16.0;
  // Stripes: 11-14 cycles per image. Gradients: 1-1.5 cycles.
  const double freq = stripes ? 11.0 + k % 4 : 1.0 + (k % 2) * 0.5;
  const double phase = variant * 0.3 + (stripes ? 0.0 : k);
  const double tint[3] = {SyntheticWarm(identity) ? 1.0 : 0.9, 0.95,
                          SyntheticWarm(identity) ? 0.85 : 1.0};

  Image image(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = static_cast<double>(x) / size;
      const double v = static_cast<double>(y) / size;
      // Shared "face" blob common to every identity.
      const double base =
          0.5 + 0.15 * std::exp(-((u - 0.5) * (u - 0.5) + (v - 0.45) * (v - 0.45)) / 0.08);
      const double signal =
          0.25 * std::cos(2.0 * kPi * freq * (std::cos(angle) * u + std::sin(angle) * v) + phase);
      const double g = base + signal;
      for (int c = 0; c < 3; ++c) {
        const double value = std::clamp(g * tint[c], 0.0, 1.0);
        image.at(x, y, c) = static_cast<std::uint8_t>(std::floor(value * 255.0 + 0.5));
      }
    }
  }
  return image;
}

void WriteSyntheticDataset(const std::filesystem::path& dir, const SyntheticOptions& options) {
  const auto images = dir / "images";
  std::filesystem::create_directories(images);
  std::ostringstream identity_file;
  std::ostringstream attr_file;
  attr_file << options.identities * options.images_per_identity + options.singles
            << "\nStripes Warm\n";
  for (int id = 0; id < options.identities + options.singles; ++id) {
    const int count = id < options.identities ? options.images_per_identity : 1;
    for (int v = 0; v < count; ++v) {
      char name[32];
      std::snprintf(name, sizeof(name), "s%03d_%d.png", id, v);
      WritePng(SyntheticImage(id, v, options.size), images / name);
      identity_file << name << ' ' << id << '\n';
      attr_file << name << "  " << (SyntheticStripes(id) ? " 1" : "-1") << ' '
                << (SyntheticWarm(id) ? " 1" : "-1") << '\n';
    }
  }
  WriteTextFile(dir / "identity.txt", identity_file.str());
  WriteTextFile(dir / "attributes.txt", attr_file.str());
}

}  // namespace fairsa
