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

#ifndef FAIRSA_EMBED_H_
#define FAIRSA_EMBED_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairsa/image.h"

namespace fairsa {

// Row-major count x dim matrix of model responses. Row i belongs to ids[i].
struct EmbeddingMatrix {
  std::vector<std::string> ids;
  int dim = 0;
  std::vector<float> values;

  std::size_t size() const { return ids.size(); }
  std::span<const float> row(std::size_t i) const {
    return {values.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  // Throws Error on a non-positive dim, a shape mismatch or a non-finite value.
  void Validate() const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

inline constexpr int kToyDim = 256;

// Luma -> 16x16 bilinear resize -> flatten -> subtract mean -> L2 normalize.
// A (near) constant image maps to the first standard basis vector.
std::vector<float> ToyEmbed(const Image& image);

enum class ProviderVariant { kBuiltinToy, kFile, kProcess };

struct ProviderConfig {
  ProviderVariant variant = ProviderVariant::kBuiltinToy;
  std::filesystem::path file;  // kFile: FSAE or CSV embedding file
  std::string command;         // kProcess: shell command line
  std::optional<int> expected_dim;
};

class Provider {
 public:
  virtual ~Provider() = default;

  virtual int dim() const = 0;
  // Stable human-readable description, recorded in run manifests.
  virtual std::string Identity() const = 0;
  // The response for one image. `key` names the (possibly perturbed) image.
  virtual std::vector<float> Embed(const std::string& key, const Image& image) = 0;

  // True when Embed may be called concurrently on one instance.
  virtual bool thread_safe() const { return false; }
  // False when the provider answers from `key` alone and ignores pixels.
  virtual bool needs_pixels() const { return true; }
  // Keys this provider cannot answer; empty for providers that compute.
  virtual std::vector<std::string> MissingKeys(std::span<const std::string> keys) const;
};

// Opens one provider. For the process variant the hello handshake has
// completed when this returns.
std::unique_ptr<Provider> OpenProvider(const ProviderConfig& config);

struct LabeledImage {
  std::string key;
  Image image;  // left empty when the provider does not need pixels
};

// Embeds images in order. Rows follow the input order.
EmbeddingMatrix EmbedBatch(Provider& provider, std::span<const LabeledImage> images);

// Owns enough provider instances for `workers` concurrent users: one shared
// instance for thread-safe variants, one per worker otherwise.
class ProviderPool {
 public:
  ProviderPool(const ProviderConfig& config, int workers);
  explicit ProviderPool(std::unique_ptr<Provider> shared);

  int workers() const { return workers_; }
  int dim() const { return providers_.front()->dim(); }
  bool needs_pixels() const { return providers_.front()->needs_pixels(); }
  std::string Identity() const { return providers_.front()->Identity(); }
  Provider& at(int worker) { return *providers_[providers_.size() == 1 ? 0 : worker]; }
  Provider& front() { return *providers_.front(); }

 private:
  int workers_ = 1;
  std::vector<std::unique_ptr<Provider>> providers_;
};

// Builds rows [0, count) with `make(i, pixels)` and embeds them, splitting the
// index range into contiguous chunks, one per worker. Output is independent of
// the worker count. Missing keys of lookup providers are reported together.
EmbeddingMatrix EmbedParallel(ProviderPool& pool, std::size_t count,
                              const std::function<LabeledImage(std::size_t, bool)>& make);

// FSAE binary: "FSAE" | u32 version=1 | u32 count | u32 dim |
// count x { u16 id_len | id bytes | dim x f32 }, all little endian.
void WriteFsae(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix ReadFsae(const std::filesystem::path& path);

// CSV: header "id,v0,...,v{dim-1}", one row per image.
void WriteEmbeddingCsv(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix ReadEmbeddingCsv(const std::filesystem::path& path);

// Reads either format, detected from the file signature.
EmbeddingMatrix ReadEmbeddingFile(const std::filesystem::path& path);

}  // namespace fairsa

#endif  // FAIRSA_EMBED_H_
