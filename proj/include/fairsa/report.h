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

#ifndef FAIRSA_REPORT_H_
#define FAIRSA_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fairsa/analysis.h"
#include "fairsa/curves.h"

namespace fairsa {

inline constexpr std::string_view kToolVersion = "fairsa 1.0.0";

// Identifies the exact configuration behind a set of outputs. The timestamp
// is informational and excluded from the digest.
struct RunManifest {
  std::string config_digest;
  std::string dataset_digest;
  std::uint64_t seed = 0;
  std::string provider;
  std::string timestamp;
  std::string tool_version = std::string(kToolVersion);

  std::string Digest() const;
};

// Header:
// task,perturbation,attribute,value,pruning,level_index,stimulus,value,defined,n_protected,n_unprotected
// The first "value" is the subgroup value (1/0, empty for item-response
// curves); the second is the curve value (empty when undefined). Rows are
// sorted by (perturbation, attribute, subgroup value, level_index); reals use
// 9 significant digits.
void EmitCurvesCsv(std::span<const Curve> curves, const std::filesystem::path& out);
std::string CurvesCsv(std::span<const Curve> curves);
// Inverse of EmitCurvesCsv. Ladder bounds are taken from the first and last
// level of each curve.
std::vector<Curve> ParseCurvesCsv(const std::filesystem::path& in);

// One JSON object with sorted keys: row_labels, col_labels, values (null for
// undefined cells), row_l1, col_l1, matrix_l1, undefined_cells,
// manifest_digest.
void EmitAucJson(const AucMatrix& matrix, const std::string& manifest_digest,
                 const std::filesystem::path& out);
struct ParsedAucJson {
  AucMatrix matrix;
  std::string manifest_digest;
};
ParsedAucJson ParseAucJson(const std::filesystem::path& in);

// Line plot of curves against the stimulus (normalized to [0, 1] when the
// curves mix perturbation kinds). Bias curves use a [-1, 1] axis with a zero
// gridline, item-response curves [0, 1]. Throws Error if no point is defined.
std::string CurvesSvg(std::span<const Curve> curves, const std::string& title,
                      const std::string& manifest_digest);
void RenderCurvesSvg(std::span<const Curve> curves, const std::string& title,
                     const std::string& manifest_digest, const std::filesystem::path& out);

// Heatmap of an AUC matrix. `diverging` selects a symmetric blue-white-red
// scale centered at 0 (bias); otherwise a sequential scale over [0, 1].
// Labels carry the L1 marginals. Throws Error if no cell is defined.
std::string HeatmapSvg(const AucMatrix& matrix, bool diverging, const std::string& title,
                       const std::string& manifest_digest);
void RenderHeatmapSvg(const AucMatrix& matrix, bool diverging, const std::string& title,
                      const std::string& manifest_digest, const std::filesystem::path& out);

// Writes `contents` to `path`, throwing Error on I/O failure.
void WriteTextFile(const std::filesystem::path& path, const std::string& contents);

}  // namespace fairsa

#endif  // FAIRSA_REPORT_H_
