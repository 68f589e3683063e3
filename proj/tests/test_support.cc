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

#include "test_support.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fairsa::testing {

TempDir::TempDir() {
  std::string pattern = (std::filesystem::temp_directory_path() / "fairsa-test-XXXXXX").string();
  if (mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

namespace {

std::uint8_t Clip(double v) {
  return static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
}

template <typename F>
Image Paint(int w, int h, F f) {
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto rgb = f(x, y);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = Clip(rgb[c]);
    }
  }
  return img;
}

}  // namespace

std::vector<Image> FixtureCorpus() {
  std::vector<Image> out;
  std::mt19937 rng(20240607);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // Blobs of color on a dark background.
  for (int k = 0; k < 3; ++k) {
    const int w = 48 + 16 * k;
    const int h = 64 - 8 * k;
    struct Blob {
      double x, y, s, r, g, b;
    };
    std::vector<Blob> blobs;
    for (int i = 0; i < 4; ++i) {
      blobs.push_back({u(rng) * w, u(rng) * h, 4 + 8 * u(rng), 255 * u(rng), 255 * u(rng),
                       255 * u(rng)});
    }
    out.push_back(Paint(w, h, [&](int x, int y) {
      std::array<double, 3> v{20, 25, 30};
      for (const auto& b : blobs) {
        const double e = std::exp(-((x - b.x) * (x - b.x) + (y - b.y) * (y - b.y)) / (2 * b.s * b.s));
        v[0] += b.r * e;
        v[1] += b.g * e;
        v[2] += b.b * e;
      }
      return v;
    }));
  }
  // A hard diagonal edge.
  out.push_back(Paint(40, 40, [](int x, int y) {
    const double v = x > y ? 210.0 : 40.0;
    return std::array<double, 3>{v, v * 0.8, v * 0.6};
  }));
  // Checkerboard.
  out.push_back(Paint(33, 29, [](int x, int y) {
    const double v = ((x / 4 + y / 4) % 2) ? 230.0 : 20.0;
    return std::array<double, 3>{v, v, v};
  }));
  // Sinusoidal texture.
  out.push_back(Paint(64, 64, [](int x, int y) {
    const double v = 128 + 90 * std::sin(0.45 * x) * std::cos(0.3 * y);
    return std::array<double, 3>{v, 255 - v, 0.5 * v + 60};
  }));
  // Smooth gradient with mild noise.
  {
    std::normal_distribution<double> n(0.0, 6.0);
    std::vector<double> noise(3 * 50 * 37);
    for (double& v : noise) v = n(rng);
    out.push_back(Paint(50, 37, [&](int x, int y) {
      const std::size_t p = 3 * (static_cast<std::size_t>(y) * 50 + x);
      return std::array<double, 3>{4.0 * x + noise[p], 6.0 * y + noise[p + 1],
                                   128 + noise[p + 2]};
    }));
  }
  // Uniform noise.
  {
    std::vector<double> noise(3 * 24 * 24);
    for (double& v : noise) v = 255 * u(rng);
    out.push_back(Paint(24, 24, [&](int x, int y) {
      const std::size_t p = 3 * (static_cast<std::size_t>(y) * 24 + x);
      return std::array<double, 3>{noise[p], noise[p + 1], noise[p + 2]};
    }));
  }
  // Concentric rings.
  out.push_back(Paint(57, 57, [](int x, int y) {
    const double r = std::hypot(x - 28.0, y - 28.0);
    const double v = 128 + 100 * std::cos(r * 0.7);
    return std::array<double, 3>{v, v, 255 - v};
  }));
  // Portrait-like oval on a gradient.
  out.push_back(Paint(45, 60, [](int x, int y) {
    const double dx = (x - 22.0) / 15.0;
    const double dy = (y - 28.0) / 21.0;
    const double face = dx * dx + dy * dy < 1.0 ? 1.0 : 0.0;
    return std::array<double, 3>{60 + 150 * face + y, 50 + 110 * face + y, 40 + 90 * face + y};
  }));
  return out;
}

Image Uniform(int width, int height, std::uint8_t value) {
  Image img(width, height);
  std::fill(img.rgb.begin(), img.rgb.end(), value);
  return img;
}

Dataset WriteFixtureDataset(const std::filesystem::path& dir,
                            const std::vector<FixtureRecord>& records,
                            const std::vector<std::string>& attribute_names) {
  std::filesystem::create_directories(dir / "images");
  std::ofstream ids(dir / "identity.txt");
  std::ofstream attrs(dir / "attributes.txt");
  attrs << records.size() << '\n';
  for (std::size_t i = 0; i < attribute_names.size(); ++i) {
    attrs << (i ? " " : "") << attribute_names[i];
  }
  attrs << '\n';
  for (const auto& r : records) {
    WritePng(r.image, dir / "images" / r.filename);
    ids << r.filename << ' ' << r.identity << '\n';
    attrs << r.filename;
    for (int f : r.flags) attrs << (f > 0 ? "  1" : " -1");
    attrs << '\n';
  }
  ids.close();
  attrs.close();
  return LoadDataset(dir / "images", dir / "identity.txt", dir / "attributes.txt").dataset;
}

std::vector<double> ReferenceToyEmbed(const Image& image) {
  const int w = image.width;
  const int h = image.height;
  const int n = 16;
  std::vector<std::vector<double>> gray(h, std::vector<double>(w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      gray[y][x] =
          (0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) + 0.114 * image.at(x, y, 2)) /
          255.0;
    }
  }
  // Sample position, lower tap and weight of the upper tap along one axis.
  struct Tap {
    int lo, hi;
    double f;
  };
  auto taps = [n](int size) {
    std::vector<Tap> t(n);
    for (int o = 0; o < n; ++o) {
      double s = (o + 0.5) * size / n - 0.5;
      if (s < 0) s = 0;
      if (s > size - 1) s = size - 1;
      const int lo = static_cast<int>(s);
      t[o] = {lo, lo + 1 < size ? lo + 1 : lo, s - lo};
    }
    return t;
  };
  const auto tx = taps(w);
  const auto ty = taps(h);
  std::vector<std::vector<double>> horiz(h, std::vector<double>(n));
  for (int y = 0; y < h; ++y) {
    for (int o = 0; o < n; ++o) {
      horiz[y][o] = gray[y][tx[o].lo] + tx[o].f * (gray[y][tx[o].hi] - gray[y][tx[o].lo]);
    }
  }
  std::vector<double> v;
  for (int oy = 0; oy < n; ++oy) {
    for (int ox = 0; ox < n; ++ox) {
      const double a = horiz[ty[oy].lo][ox];
      const double b = horiz[ty[oy].hi][ox];
      v.push_back(a + ty[oy].f * (b - a));
    }
  }
  double mean = 0;
  for (double x : v) mean += x;
  mean /= v.size();
  double ss = 0;
  for (double& x : v) {
    x -= mean;
    ss += x * x;
  }
  if (std::sqrt(ss) < 1e-12) {
    std::vector<double> e0(v.size(), 0.0);
    e0[0] = 1.0;
    return e0;
  }
  for (double& x : v) x /= std::sqrt(ss);
  return v;
}

double ReferenceCosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  if (std::sqrt(aa) < 1e-12 || std::sqrt(bb) < 1e-12) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace fairsa::testing
