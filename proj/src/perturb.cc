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

#include "fairsa/perturb.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "fairsa/common.h"

namespace fairsa {
namespace {

struct KindInfo {
  PerturbationKind kind;
  std::string_view name;
  LevelRange range;
};

constexpr KindInfo kKinds[] = {
    {PerturbationKind::kGaussianBlur, "gaussian-blur", {0.0, 8.0}},
    {PerturbationKind::kGammaContrast, "gamma-contrast", {0.0, 3.0}},
    {PerturbationKind::kRotation, "rotation", {0.0, 90.0}},
    {PerturbationKind::kSpeckleNoise, "speckle-noise", {0.0, 0.5}},
    {PerturbationKind::kExposure, "exposure", {-4.0, 4.0}},
    {PerturbationKind::kSaturation, "saturation", {-1.0, 3.0}},
    {PerturbationKind::kMotionBlur, "motion-blur", {0.0, 30.0}},
    {PerturbationKind::kJpegCompression, "jpeg-compression", {0.0, 99.0}},
    {PerturbationKind::kVignette, "vignette", {0.0, 1.0}},
};

const KindInfo& Info(PerturbationKind kind) {
  for (const auto& info : kKinds) {
    if (info.kind == kind) return info;
  }
  throw Error("unknown perturbation kind");
}

// Per-channel working copy in [0, 1].
struct Planar {
  int width;
  int height;
  std::vector<double> v;  // interleaved like Image::rgb

  double& at(int x, int y, int c) { return v[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int x, int y, int c) const {
    return v[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

Planar ToPlanar(const Image& image) {
  Planar p{image.width, image.height, std::vector<double>(image.rgb.size())};
  for (std::size_t i = 0; i < image.rgb.size(); ++i) p.v[i] = image.rgb[i] / 255.0;
  return p;
}

std::uint8_t Quantize(double value) {
  const double clipped = std::clamp(value, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(clipped * 255.0 + 0.5));
}

Image ToImage(const Planar& p) {
  Image out(p.width, p.height);
  for (std::size_t i = 0; i < p.v.size(); ++i) out.rgb[i] = Quantize(p.v[i]);
  return out;
}

template <typename Fn>
Image MapValues(const Image& image, Fn fn) {
  Image out(image.width, image.height);
  for (std::size_t i = 0; i < image.rgb.size(); ++i) out.rgb[i] = Quantize(fn(image.rgb[i] / 255.0));
  return out;
}

// Half-sample symmetric reflection ("d c b a | a b c d | d c b a"), valid for
// any offset including ones larger than the image.
int Reflect(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

// 1-D correlation along x (axis 0) or y (axis 1) with offsets [first, first + taps).
Planar Convolve1D(const Planar& in, const std::vector<double>& taps, int first, int axis) {
  Planar out{in.width, in.height, std::vector<double>(in.v.size())};
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < taps.size(); ++k) {
          const int offset = first + static_cast<int>(k);
          const double sample = axis == 0 ? in.at(Reflect(x + offset, in.width), y, c)
                                          : in.at(x, Reflect(y + offset, in.height), c);
          acc += taps[k] * sample;
        }
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

Image GaussianBlur(const Image& image, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    taps[k + radius] = std::exp(-static_cast<double>(k) * k / (2.0 * sigma * sigma));
    total += taps[k + radius];
  }
  for (double& w : taps) w /= total;
  const Planar horizontal = Convolve1D(ToPlanar(image), taps, -radius, 0);
  return ToImage(Convolve1D(horizontal, taps, -radius, 1));
}

Image MotionBlur(const Image& image, double delta) {
  const int length = 1 + static_cast<int>(std::lround(delta));
  const std::vector<double> taps(length, 1.0 / length);
  return ToImage(Convolve1D(ToPlanar(image), taps, -((length - 1) / 2), 0));
}

Image Rotate(const Image& image, double degrees) {
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double cx = image.width / 2.0;
  const double cy = image.height / 2.0;
  const Planar src = ToPlanar(image);
  auto sample = [&](int x, int y, int c) {
    if (x < 0 || y < 0 || x >= src.width || y >= src.height) return 0.0;
    return src.at(x, y, c);
  };
  Planar out{image.width, image.height, std::vector<double>(src.v.size())};
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      // Inverse mapping: destination pixel centre back into the source.
      const double sx = cx + cos_t * dx + sin_t * dy - 0.5;
      const double sy = cy - sin_t * dx + cos_t * dy - 0.5;
      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      const double fx = sx - fx0;
      const double fy = sy - fy0;
      const int x0 = static_cast<int>(fx0);
      const int y0 = static_cast<int>(fy0);
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - fx) * sample(x0, y0, c) + fx * sample(x0 + 1, y0, c);
        const double bottom = (1.0 - fx) * sample(x0, y0 + 1, c) + fx * sample(x0 + 1, y0 + 1, c);
        out.at(x, y, c) = (1.0 - fy) * top + fy * bottom;
      }
    }
  }
  return ToImage(out);
}

// Box-Muller over a 64-bit Mersenne Twister; both are fully specified, so
// the noise field is the same on every platform.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double Next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;        // [0, 1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

Image Speckle(const Image& image, double delta, std::uint64_t seed, std::string_view image_id,
              int level_index) {
  NormalStream normal(Hash64(seed, image_id, static_cast<std::uint64_t>(level_index)));
  Image out(image.width, image.height);
  for (std::size_t i = 0; i < image.rgb.size(); ++i) {
    out.rgb[i] = Quantize(image.rgb[i] / 255.0 * (1.0 + delta * normal.Next()));
  }
  return out;
}

Image Saturation(const Image& image, double delta) {
  Image out(image.width, image.height);
  const double scale = 1.0 + delta;
  for (std::size_t p = 0; p < image.pixel_count(); ++p) {
    const double r = image.rgb[3 * p] / 255.0;
    const double g = image.rgb[3 * p + 1] / 255.0;
    const double b = image.rgb[3 * p + 2] / 255.0;
    const double gray = 0.299 * r + 0.587 * g + 0.114 * b;
    out.rgb[3 * p] = Quantize(gray + scale * (r - gray));
    out.rgb[3 * p + 1] = Quantize(gray + scale * (g - gray));
    out.rgb[3 * p + 2] = Quantize(gray + scale * (b - gray));
  }
  return out;
}

Image Vignette(const Image& image, double delta) {
  const double cx = image.width / 2.0;
  const double cy = image.height / 2.0;
  const double corner_sq = cx * cx + cy * cy;
  Image out(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      const double gain = 1.0 - delta * (dx * dx + dy * dy) / corner_sq;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = Quantize(image.at(x, y, c) / 255.0 * gain);
    }
  }
  return out;
}

}  // namespace

std::string_view KindName(PerturbationKind kind) { return Info(kind).name; }

PerturbationKind ParseKind(std::string_view name) {
  for (const auto& info : kKinds) {
    if (info.name == name) return info.kind;
  }
  throw Error("unknown perturbation kind '" + std::string(name) + "'");
}

LevelRange ValidRange(PerturbationKind kind) { return Info(kind).range; }

bool IsBidirectional(PerturbationKind kind) {
  return kind == PerturbationKind::kExposure || kind == PerturbationKind::kSaturation;
}

void PerturbationSpec::Validate() const {
  const std::string name(KindName(kind));
  if (n < 2) throw Error(name + ": level count must be at least 2, got " + std::to_string(n));
  if (!(lower < upper)) {
    throw Error(name + ": lower bound " + FormatReal(lower) + " must be below upper bound " +
                FormatReal(upper));
  }
  const LevelRange range = ValidRange(kind);
  if (lower < range.lower || upper > range.upper) {
    throw Error(name + ": bounds [" + FormatReal(lower) + ", " + FormatReal(upper) +
                "] exceed valid range [" + FormatReal(range.lower) + ", " +
                FormatReal(range.upper) + "]");
  }
  if (IsBidirectional(kind)) {
    if (!(lower < 0.0 && 0.0 < upper)) {
      throw Error(name + ": bidirectional sweep must straddle 0");
    }
  } else if (lower != 0.0) {
    throw Error(name + ": unidirectional sweep must start at 0");
  }
}

int StimulusLadder::ZeroIndex() const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == 0.0) return static_cast<int>(i);
  }
  return -1;
}

StimulusLadder MakeLadder(const PerturbationSpec& spec) {
  if (spec.n < 2) throw Error("ladder needs at least 2 levels");
  if (!(spec.lower < spec.upper)) throw Error("ladder lower bound must be below upper bound");
  const double span = spec.upper - spec.lower;
  StimulusLadder ladder;
  ladder.levels.resize(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    double level = spec.lower + i * span / (spec.n - 1);
    // Snap rounding residue so that a grid point meant to be 0 is exactly 0.
    if (std::abs(level) < 1e-12 * span) level = 0.0;
    ladder.levels[i] = level;
  }
  ladder.levels.back() = spec.upper;
  return ladder;
}

Image Apply(const Image& image, PerturbationKind kind, double delta, std::uint64_t seed,
            std::string_view image_id, int level_index) {
  if (image.empty()) throw Error("cannot perturb a zero-area image");
  const LevelRange range = ValidRange(kind);
  if (!(delta >= range.lower && delta <= range.upper)) {
    throw Error(std::string(KindName(kind)) + ": level " + FormatReal(delta) +
                " outside valid range [" + FormatReal(range.lower) + ", " +
                FormatReal(range.upper) + "]");
  }
  if (delta == 0.0) return image;

  switch (kind) {
    case PerturbationKind::kGaussianBlur:
      return GaussianBlur(image, delta);
    case PerturbationKind::kGammaContrast: {
      const double exponent = std::exp2(delta);
      return MapValues(image, [exponent](double v) { return std::pow(v, exponent); });
    }
    case PerturbationKind::kRotation:
      return Rotate(image, delta);
    case PerturbationKind::kSpeckleNoise:
      return Speckle(image, delta, seed, image_id, level_index);
    case PerturbationKind::kExposure: {
      const double gain = std::exp2(delta);
      return MapValues(image, [gain](double v) { return v * gain; });
    }
    case PerturbationKind::kSaturation:
      return Saturation(image, delta);
    case PerturbationKind::kMotionBlur:
      return MotionBlur(image, delta);
    case PerturbationKind::kJpegCompression:
      return JpegRoundTrip(image, static_cast<int>(std::lround(100.0 - delta)));
    case PerturbationKind::kVignette:
      return Vignette(image, delta);
  }
  throw Error("unhandled perturbation kind");
}

double Psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) throw Error("PSNR of mismatched images");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = static_cast<double>(a.rgb[i]) - b.rgb[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(a.rgb.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace fairsa
