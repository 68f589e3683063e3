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

#ifndef FAIRSA_IMAGE_H_
#define FAIRSA_IMAGE_H_

#include <cstdint>
#include <filesystem>
#include <vector>

namespace fairsa {

// Interleaved 8-bit RGB raster, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  bool empty() const { return width <= 0 || height <= 0; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  std::uint8_t& at(int x, int y, int c) {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// Decodes a PNG or JPEG file (detected from its signature) to 8-bit RGB.
Image ReadImage(const std::filesystem::path& path);

void WritePng(const Image& image, const std::filesystem::path& path);

// Baseline JPEG encode at `quality` in [1, 100] with 4:2:0 chroma subsampling
// followed by a decode. Uses the integer DCT so results are reproducible.
Image JpegRoundTrip(const Image& image, int quality);

// Writes a JPEG file (used for fixtures and tests).
void WriteJpeg(const Image& image, const std::filesystem::path& path, int quality);

}  // namespace fairsa

#endif  // FAIRSA_IMAGE_H_
