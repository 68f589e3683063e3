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

#include "fairsa/analysis.h"

#include <algorithm>
#include <cmath>

#include "fairsa/common.h"

namespace fairsa {

double CurveAuc(const Curve& curve) {
  if (!(curve.lower < curve.upper)) throw Error("curve has an empty stimulus range");
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : curve.points) {
    if (p.defined()) xy.emplace_back((p.stimulus - curve.lower) / (curve.upper - curve.lower), *p.value);
  }
  if (xy.size() < 2) {
    throw AucUndefined("curve has " + std::to_string(xy.size()) + " defined points, need 2");
  }
  std::stable_sort(xy.begin(), xy.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  double area = 0.0;
  for (std::size_t i = 1; i < xy.size(); ++i) {
    area += 0.5 * (xy[i].second + xy[i - 1].second) * (xy[i].first - xy[i - 1].first);
  }
  return area;
}

std::string RowLabel(const Curve& curve) {
  return curve.subgroup ? curve.subgroup->Label() : std::string("irc");
}

void AucMatrix::ComputeNorms() {
  row_l1.assign(row_labels.size(), 0.0);
  col_l1.assign(col_labels.size(), 0.0);
  matrix_l1 = 0.0;
  undefined_cells = 0;
  for (std::size_t i = 0; i < row_labels.size(); ++i) {
    for (std::size_t j = 0; j < col_labels.size(); ++j) {
      const auto& cell = values[i][j];
      if (!cell) {
        ++undefined_cells;
        continue;
      }
      const double magnitude = std::abs(*cell);
      row_l1[i] += magnitude;
      col_l1[j] += magnitude;
      matrix_l1 += magnitude;
    }
  }
}

AucMatrix BuildAucMatrix(std::span<const Curve> curves) {
  if (curves.empty()) throw Error("no curves to tabulate");
  AucMatrix m;
  auto index_of = [](std::vector<std::string>& labels, const std::string& label) {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it != labels.end()) return static_cast<std::size_t>(it - labels.begin());
    labels.push_back(label);
    return labels.size() - 1;
  };
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (const auto& c : curves) {
    if (c.task != curves.front().task || c.pruning != curves.front().pruning) {
      throw Error("AUC matrix mixes tasks or pruning modes");
    }
    cells.emplace_back(index_of(m.row_labels, RowLabel(c)),
                       index_of(m.col_labels, std::string(KindName(c.kind))));
  }
  m.values.assign(m.row_labels.size(),
                  std::vector<std::optional<double>>(m.col_labels.size()));
  std::vector<std::vector<bool>> seen(m.row_labels.size(),
                                      std::vector<bool>(m.col_labels.size(), false));
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto [i, j] = cells[c];
    if (seen[i][j]) {
      throw Error("duplicate AUC cell (" + m.row_labels[i] + ", " + m.col_labels[j] + ")");
    }
    seen[i][j] = true;
    try {
      m.values[i][j] = CurveAuc(curves[c]);
    } catch (const AucUndefined&) {
      m.values[i][j].reset();
    }
  }
  m.ComputeNorms();
  return m;
}

}  // namespace fairsa
