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

#include "fairsa/embed.h"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "fairsa/common.h"

namespace fairsa {

std::unique_ptr<Provider> OpenProcessProvider(const ProviderConfig& config);  // provider_process.cc

void EmbeddingMatrix::Validate() const {
  if (dim <= 0) throw Error("embedding dimension must be positive, got " + std::to_string(dim));
  if (values.size() != ids.size() * static_cast<std::size_t>(dim)) {
    throw Error("embedding matrix holds " + std::to_string(values.size()) + " values for " +
                std::to_string(ids.size()) + " rows of dim " + std::to_string(dim));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error("non-finite embedding value in row '" + ids[i / dim] + "'");
    }
  }
}

std::vector<float> ToyEmbed(const Image& image) {
  if (image.empty()) throw Error("cannot embed a zero-area image");
  constexpr int kSide = 16;
  const int w = image.width;
  const int h = image.height;
  std::vector<double> luma(image.pixel_count());
  for (std::size_t p = 0; p < luma.size(); ++p) {
    luma[p] = (0.299 * image.rgb[3 * p] + 0.587 * image.rgb[3 * p + 1] +
               0.114 * image.rgb[3 * p + 2]) /
              255.0;
  }
  auto source = [](int out, int in_size) {
    const double s = (out + 0.5) * in_size / kSide - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(in_size - 1));
  };
  std::vector<double> v(kSide * kSide);
  for (int oy = 0; oy < kSide; ++oy) {
    const double sy = source(oy, h);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - y0;
    for (int ox = 0; ox < kSide; ++ox) {
      const double sx = source(ox, w);
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - x0;
      auto at = [&](int x, int y) { return luma[static_cast<std::size_t>(y) * w + x]; };
      const double top = (1.0 - fx) * at(x0, y0) + fx * at(x1, y0);
      const double bottom = (1.0 - fx) * at(x0, y1) + fx * at(x1, y1);
      v[oy * kSide + ox] = (1.0 - fy) * top + fy * bottom;
    }
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double norm_sq = 0.0;
  for (double& x : v) {
    x -= mean;
    norm_sq += x * x;
  }
  const double norm = std::sqrt(norm_sq);
  std::vector<float> out(v.size(), 0.0f);
  if (norm < 1e-12) {
    out[0] = 1.0f;
    return out;
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

std::vector<std::string> Provider::MissingKeys(std::span<const std::string>) const { return {}; }

namespace {

class ToyProvider final : public Provider {
 public:
  int dim() const override { return kToyDim; }
  std::string Identity() const override { return "builtin-toy/v1"; }
  std::vector<float> Embed(const std::string&, const Image& image) override {
    return ToyEmbed(image);
  }
  bool thread_safe() const override { return true; }
};

class FileProvider final : public Provider {
 public:
  explicit FileProvider(const std::filesystem::path& path)
      : path_(path), matrix_(ReadEmbeddingFile(path)) {
    index_.reserve(matrix_.size());
    for (std::size_t i = 0; i < matrix_.size(); ++i) {
      if (!index_.emplace(matrix_.ids[i], i).second) {
        throw Error("duplicate id '" + matrix_.ids[i] + "' in " + path.string());
      }
    }
  }

  int dim() const override { return matrix_.dim; }
  std::string Identity() const override {
    return "file:" + path_.filename().string() + ":" + std::to_string(matrix_.dim);
  }
  std::vector<float> Embed(const std::string& key, const Image&) override {
    const auto it = index_.find(key);
    if (it == index_.end()) {
      throw Error("embedding file " + path_.string() + " has no entry for '" + key + "'");
    }
    const auto row = matrix_.row(it->second);
    return {row.begin(), row.end()};
  }
  bool thread_safe() const override { return true; }
  bool needs_pixels() const override { return false; }
  std::vector<std::string> MissingKeys(std::span<const std::string> keys) const override {
    std::vector<std::string> missing;
    for (const auto& key : keys) {
      if (!index_.contains(key)) missing.push_back(key);
    }
    return missing;
  }

 private:
  std::filesystem::path path_;
  EmbeddingMatrix matrix_;
  std::unordered_map<std::string, std::size_t> index_;
};

void CheckDim(int dim, const ProviderConfig& config, const std::string& what) {
  if (dim <= 0) throw Error(what + " reports invalid dimension " + std::to_string(dim));
  if (config.expected_dim && *config.expected_dim != dim) {
    throw Error(what + " has dimension " + std::to_string(dim) + ", expected " +
                std::to_string(*config.expected_dim));
  }
}

template <typename T>
void PutLe(std::ostream& out, T value) {
  auto raw = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
  out.write(reinterpret_cast<const char*>(raw.data()), sizeof(T));
}

template <typename T>
T GetLe(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, sizeof(T)> raw;
  if (!in.read(reinterpret_cast<char*>(raw.data()), sizeof(T))) {
    throw Error("truncated FSAE file: " + path.string());
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
  return std::bit_cast<T>(raw);
}

std::vector<std::string> SplitCommas(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) return fields;
    start = comma + 1;
  }
}

}  // namespace

std::unique_ptr<Provider> OpenProvider(const ProviderConfig& config) {
  std::unique_ptr<Provider> provider;
  switch (config.variant) {
    case ProviderVariant::kBuiltinToy:
      provider = std::make_unique<ToyProvider>();
      break;
    case ProviderVariant::kFile:
      provider = std::make_unique<FileProvider>(config.file);
      break;
    case ProviderVariant::kProcess:
      return OpenProcessProvider(config);  // validates dim during the handshake
  }
  CheckDim(provider->dim(), config, provider->Identity());
  return provider;
}

EmbeddingMatrix EmbedBatch(Provider& provider, std::span<const LabeledImage> images) {
  EmbeddingMatrix out;
  out.dim = provider.dim();
  std::vector<std::string> keys;
  keys.reserve(images.size());
  for (const auto& item : images) keys.push_back(item.key);
  if (const auto missing = provider.MissingKeys(keys); !missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) list += (i ? ", " : "") + missing[i];
    throw Error(std::to_string(missing.size()) + " ids missing from " + provider.Identity() +
                ": " + list);
  }
  out.ids = std::move(keys);
  out.values.reserve(images.size() * static_cast<std::size_t>(out.dim));
  for (const auto& item : images) {
    const auto vec = provider.Embed(item.key, item.image);
    if (static_cast<int>(vec.size()) != out.dim) {
      throw Error("provider returned " + std::to_string(vec.size()) + " values for '" +
                  item.key + "', expected " + std::to_string(out.dim));
    }
    out.values.insert(out.values.end(), vec.begin(), vec.end());
  }
  out.Validate();
  return out;
}

ProviderPool::ProviderPool(const ProviderConfig& config, int workers)
    : workers_(std::max(workers, 1)) {
  providers_.push_back(OpenProvider(config));
  if (!providers_.front()->thread_safe()) {
    for (int i = 1; i < workers_; ++i) providers_.push_back(OpenProvider(config));
  }
}

ProviderPool::ProviderPool(std::unique_ptr<Provider> shared) {
  providers_.push_back(std::move(shared));
}

EmbeddingMatrix EmbedParallel(ProviderPool& pool, std::size_t count,
                              const std::function<LabeledImage(std::size_t, bool)>& make) {
  const bool pixels = pool.needs_pixels();
  EmbeddingMatrix out;
  out.dim = pool.dim();
  out.ids.resize(count);
  for (std::size_t i = 0; i < count; ++i) out.ids[i] = make(i, false).key;
  if (const auto missing = pool.front().MissingKeys(out.ids); !missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) list += (i ? ", " : "") + missing[i];
    throw Error(std::to_string(missing.size()) + " ids missing from " + pool.Identity() + ": " +
                list);
  }
  out.values.assign(count * static_cast<std::size_t>(out.dim), 0.0f);
  const std::size_t chunks = static_cast<std::size_t>(pool.workers());
  ParallelFor(chunks, pool.workers(), [&](std::size_t chunk) {
    Provider& provider = pool.at(static_cast<int>(chunk));
    const std::size_t begin = chunk * count / chunks;
    const std::size_t end = (chunk + 1) * count / chunks;
    for (std::size_t i = begin; i < end; ++i) {
      const LabeledImage item = pixels ? make(i, true) : LabeledImage{out.ids[i], {}};
      const auto vec = provider.Embed(item.key, item.image);
      if (static_cast<int>(vec.size()) != out.dim) {
        throw Error("provider returned " + std::to_string(vec.size()) + " values for '" +
                    item.key + "', expected " + std::to_string(out.dim));
      }
      std::copy(vec.begin(), vec.end(), out.values.begin() + i * out.dim);
    }
  });
  out.Validate();
  return out;
}

void WriteFsae(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  matrix.Validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write("FSAE", 4);
  PutLe<std::uint32_t>(out, 1);
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.size()));
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.dim));
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    const std::string& id = matrix.ids[i];
    if (id.size() > 0xFFFF) throw Error("id too long for FSAE: " + id.substr(0, 32) + "...");
    PutLe<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (float v : matrix.row(i)) PutLe<float>(out, v);
  }
  if (!out) throw Error("I/O error writing " + path.string());
}

EmbeddingMatrix ReadFsae(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding file: " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "FSAE", 4) != 0) {
    throw Error("not an FSAE file: " + path.string());
  }
  const auto version = GetLe<std::uint32_t>(in, path);
  if (version != 1) throw Error("unsupported FSAE version " + std::to_string(version));
  const auto count = GetLe<std::uint32_t>(in, path);
  const auto dim = GetLe<std::uint32_t>(in, path);
  EmbeddingMatrix m;
  m.dim = static_cast<int>(dim);
  m.ids.reserve(count);
  m.values.reserve(static_cast<std::size_t>(count) * dim);
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto len = GetLe<std::uint16_t>(in, path);
    std::string id(len, '\0');
    if (!in.read(id.data(), len)) throw Error("truncated FSAE file: " + path.string());
    m.ids.push_back(std::move(id));
    for (std::uint32_t k = 0; k < dim; ++k) m.values.push_back(GetLe<float>(in, path));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error("trailing bytes after FSAE records: " + path.string());
  }
  m.Validate();
  return m;
}

void WriteEmbeddingCsv(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  matrix.Validate();
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "id";
  for (int k = 0; k < matrix.dim; ++k) out << ",v" << k;
  out << '\n';
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    if (matrix.ids[i].find_first_of(",\n\"") != std::string::npos) {
      throw Error("id '" + matrix.ids[i] + "' cannot be written to CSV");
    }
    out << matrix.ids[i];
    for (float v : matrix.row(i)) out << ',' << FormatReal(v);
    out << '\n';
  }
  if (!out) throw Error("I/O error writing " + path.string());
}

EmbeddingMatrix ReadEmbeddingCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("empty embedding CSV: " + path.string());
  const auto header = SplitCommas(line);
  if (header.size() < 2 || header[0] != "id") {
    throw Error(path.string() + ":1: header must be id,v0,...");
  }
  for (std::size_t k = 1; k < header.size(); ++k) {
    if (header[k] != "v" + std::to_string(k - 1)) {
      throw Error(path.string() + ":1: unexpected column '" + header[k] + "'");
    }
  }
  EmbeddingMatrix m;
  m.dim = static_cast<int>(header.size() - 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = SplitCommas(line);
    if (fields.size() != header.size()) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                  std::to_string(header.size()) + " fields");
    }
    m.ids.push_back(fields[0]);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      float v = 0.0f;
      const auto& f = fields[k];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw Error(path.string() + ":" + std::to_string(line_no) + ": bad number '" + f + "'");
      }
      m.values.push_back(v);
    }
  }
  m.Validate();
  return m;
}

EmbeddingMatrix ReadEmbeddingFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding file: " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::memcmp(magic, "FSAE", 4) == 0) return ReadFsae(path);
  return ReadEmbeddingCsv(path);
}

}  // namespace fairsa
