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

#ifndef FAIRSA_ANALYSIS_H_
#define FAIRSA_ANALYSIS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairsa/curves.h"

namespace fairsa {

// Signed AUC of a curve: trapezoid rule over its defined points on the
// normalized stimulus axis x = (delta - lower) / (upper - lower).
// Throws AucUndefined with fewer than two defined points.
double CurveAuc(const Curve& curve);

// Attribute x perturbation grid of signed AUCs with L1 marginals. Cells
// without a defined AUC are excluded from every norm and counted.
struct AucMatrix {
  std::vector<std::string> row_labels;  // "Male=1", or "irc" for item-response curves
  std::vector<std::string> col_labels;  // perturbation names
  std::vector<std::vector<std::optional<double>>> values;
  std::vector<double> row_l1;
  std::vector<double> col_l1;
  double matrix_l1 = 0.0;
  std::size_t undefined_cells = 0;

  // Recomputes the marginals and the undefined count from `values`.
  void ComputeNorms();

  friend bool operator==(const AucMatrix&, const AucMatrix&) = default;
};

// Rows and columns appear in first-seen order. Curves must share task and
// pruning mode; a repeated (row, column) cell is an Error.
AucMatrix BuildAucMatrix(std::span<const Curve> curves);

// Row label of a curve in an AUC matrix.
std::string RowLabel(const Curve& curve);

}  // namespace fairsa

#endif  // FAIRSA_ANALYSIS_H_
