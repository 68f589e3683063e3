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

#include "fairsa/report.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "fairsa/common.h"
#include "json.hpp"

namespace fairsa {
namespace {

using nlohmann::json;

constexpr std::string_view kCsvHeader =
    "task,perturbation,attribute,value,pruning,level_index,stimulus,value,defined,n_protected,"
    "n_unprotected";

std::string Fixed(double v, int decimals = 2) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string Escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) return fields;
    start = comma + 1;
  }
}

double ParseDouble(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error(where + ": bad number '" + s + "'");
  return v;
}

std::size_t ParseCount(const std::string& s, const std::string& where) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error(where + ": bad count '" + s + "'");
  return v;
}

struct Rgb {
  double r, g, b;
};

std::string Color(Rgb from, Rgb to, double t) {
  t = std::clamp(t, 0.0, 1.0);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rgb(%ld,%ld,%ld)", std::lround(from.r + (to.r - from.r) * t),
                std::lround(from.g + (to.g - from.g) * t), std::lround(from.b + (to.b - from.b) * t));
  return buf;
}

constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kRed{178, 24, 43};
constexpr Rgb kBlue{33, 102, 172};
constexpr Rgb kGreen{0, 90, 50};

constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
                                    "#e6ab02", "#a6761d", "#666666", "#1f78b4", "#b2df8a"};

std::string CurveLabel(const Curve& c) {
  std::string label = RowLabel(c);
  label += " / ";
  label += KindName(c.kind);
  return label;
}

}  // namespace

std::string RunManifest::Digest() const {
  std::ostringstream out;
  out << config_digest << '\n'
      << dataset_digest << '\n'
      << seed << '\n'
      << provider << '\n'
      << tool_version << '\n';
  return DigestHex(out.str());
}

void WriteTextFile(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << contents;
  out.flush();
  if (!out) throw Error("I/O error writing " + path.string());
}

std::string CurvesCsv(std::span<const Curve> curves) {
  struct Row {
    std::string kind;
    std::string attribute;
    int value;
    int level;
    std::string text;
  };
  std::vector<Row> rows;
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      std::string line;
      line += TaskName(c.task);
      line += ',';
      line += KindName(c.kind);
      line += ',';
      line += c.subgroup ? c.subgroup->attribute : "";
      line += ',';
      line += c.subgroup ? (c.subgroup->value ? "1" : "0") : "";
      line += ',';
      line += PruningName(c.pruning);
      line += ',' + std::to_string(p.level_index);
      line += ',' + FormatReal(p.stimulus);
      line += ',' + (p.defined() ? FormatReal(*p.value) : std::string());
      line += p.defined() ? ",true" : ",false";
      line += ',' + std::to_string(p.n_protected);
      line += ',' + std::to_string(p.n_unprotected);
      rows.push_back({std::string(KindName(c.kind)), c.subgroup ? c.subgroup->attribute : "",
                      c.subgroup ? static_cast<int>(c.subgroup->value) : -1, p.level_index,
                      std::move(line)});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.kind, a.attribute, a.value, a.level) <
           std::tie(b.kind, b.attribute, b.value, b.level);
  });
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) out += r.text + '\n';
  return out;
}

void EmitCurvesCsv(std::span<const Curve> curves, const std::filesystem::path& out) {
  WriteTextFile(out, CurvesCsv(curves));
}

std::vector<Curve> ParseCurvesCsv(const std::filesystem::path& in) {
  std::ifstream file(in);
  if (!file) throw Error("cannot open curves file: " + in.string());
  std::string line;
  if (!std::getline(file, line) || line != kCsvHeader) {
    throw Error(in.string() + ":1: unexpected curves header");
  }
  std::vector<Curve> curves;
  std::map<std::tuple<std::string, std::string, std::string, std::string, std::string>, std::size_t>
      index;
  std::size_t line_no = 1;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = in.string() + ":" + std::to_string(line_no);
    const auto f = SplitCsv(line);
    if (f.size() != 11) throw Error(where + ": expected 11 fields");
    const auto key = std::make_tuple(f[0], f[1], f[2], f[3], f[4]);
    auto it = index.find(key);
    if (it == index.end()) {
      Curve c;
      c.task = ParseTask(f[0]);
      c.kind = ParseKind(f[1]);
      if (!f[2].empty()) {
        if (f[3] != "1" && f[3] != "0") throw Error(where + ": subgroup value must be 1 or 0");
        c.subgroup = SubgroupSpec{f[2], f[3] == "1"};
      } else if (!f[3].empty()) {
        throw Error(where + ": subgroup value without attribute");
      }
      c.pruning = ParsePruning(f[4]);
      curves.push_back(std::move(c));
      it = index.emplace(key, curves.size() - 1).first;
    }
    CurvePoint p;
    p.level_index = static_cast<int>(ParseCount(f[5], where));
    p.stimulus = ParseDouble(f[6], where);
    if (f[8] == "true") {
      p.value = ParseDouble(f[7], where);
    } else if (f[8] != "false" || !f[7].empty()) {
      throw Error(where + ": inconsistent defined/value fields");
    }
    p.n_protected = ParseCount(f[9], where);
    p.n_unprotected = ParseCount(f[10], where);
    curves[it->second].points.push_back(p);
  }
  for (auto& c : curves) {
    std::stable_sort(c.points.begin(), c.points.end(),
                     [](const CurvePoint& a, const CurvePoint& b) { return a.level_index < b.level_index; });
    c.lower = c.points.front().stimulus;
    c.upper = c.points.back().stimulus;
  }
  return curves;
}

void EmitAucJson(const AucMatrix& matrix, const std::string& manifest_digest,
                 const std::filesystem::path& out) {
  json values = json::array();
  for (const auto& row : matrix.values) {
    json r = json::array();
    for (const auto& cell : row) r.push_back(cell ? json(*cell) : json(nullptr));
    values.push_back(std::move(r));
  }
  const json doc = {
      {"row_labels", matrix.row_labels}, {"col_labels", matrix.col_labels},
      {"values", std::move(values)},     {"row_l1", matrix.row_l1},
      {"col_l1", matrix.col_l1},         {"matrix_l1", matrix.matrix_l1},
      {"undefined_cells", matrix.undefined_cells}, {"manifest_digest", manifest_digest},
  };
  WriteTextFile(out, doc.dump(2) + "\n");
}

ParsedAucJson ParseAucJson(const std::filesystem::path& in) {
  std::ifstream file(in);
  if (!file) throw Error("cannot open AUC file: " + in.string());
  json doc;
  try {
    doc = json::parse(file);
    ParsedAucJson out;
    AucMatrix& m = out.matrix;
    m.row_labels = doc.at("row_labels").get<std::vector<std::string>>();
    m.col_labels = doc.at("col_labels").get<std::vector<std::string>>();
    for (const auto& row : doc.at("values")) {
      std::vector<std::optional<double>> r;
      for (const auto& cell : row) {
        r.push_back(cell.is_null() ? std::nullopt : std::optional<double>(cell.get<double>()));
      }
      if (r.size() != m.col_labels.size()) throw Error(in.string() + ": ragged values row");
      m.values.push_back(std::move(r));
    }
    if (m.values.size() != m.row_labels.size()) throw Error(in.string() + ": row count mismatch");
    m.row_l1 = doc.at("row_l1").get<std::vector<double>>();
    m.col_l1 = doc.at("col_l1").get<std::vector<double>>();
    m.matrix_l1 = doc.at("matrix_l1").get<double>();
    m.undefined_cells = doc.at("undefined_cells").get<std::size_t>();
    out.manifest_digest = doc.at("manifest_digest").get<std::string>();
    return out;
  } catch (const json::exception& e) {
    throw Error("malformed AUC file " + in.string() + ": " + e.what());
  }
}

std::string CurvesSvg(std::span<const Curve> curves, const std::string& title,
                      const std::string& manifest_digest) {
  bool any_defined = false;
  bool all_irc = !curves.empty();
  bool mixed_kinds = false;
  for (const auto& c : curves) {
    all_irc = all_irc && c.is_irc();
    mixed_kinds = mixed_kinds || c.kind != curves.front().kind;
    for (const auto& p : c.points) any_defined = any_defined || p.defined();
  }
  if (!any_defined) throw Error("nothing to render: no defined curve points");

  double x_min = mixed_kinds ? 0.0 : curves.front().lower;
  double x_max = mixed_kinds ? 1.0 : curves.front().upper;
  if (!(x_min < x_max)) x_max = x_min + 1.0;
  const double y_min = all_irc ? 0.0 : -1.0;
  const double y_max = 1.0;

  constexpr double kWidth = 720, kHeight = 420, kLeft = 60, kRight = 240, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + (y_max - y) / (y_max - y_min) * plot_h; };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
    << "<!-- manifest " << Escape(manifest_digest) << " -->\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kLeft << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">"
    << Escape(title) << "</text>\n";

  const double y_step = all_irc ? 0.25 : 0.5;
  for (double y = y_min; y <= y_max + 1e-9; y += y_step) {
    const bool zero = std::abs(y) < 1e-9;
    s << "<line" << (zero ? " id=\"zero-line\"" : "") << " x1=\"" << Fixed(px(x_min)) << "\" y1=\""
      << Fixed(py(y)) << "\" x2=\"" << Fixed(px(x_max)) << "\" y2=\"" << Fixed(py(y))
      << "\" stroke=\"" << (zero ? "#444" : "#ddd") << "\" stroke-width=\"1\"/>\n"
      << "<text x=\"" << Fixed(kLeft - 8) << "\" y=\"" << Fixed(py(y) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << Fixed(y)
      << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double x = x_min + (x_max - x_min) * i / 4.0;
    s << "<text x=\"" << Fixed(px(x)) << "\" y=\"" << Fixed(kTop + plot_h + 18)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
      << Escape(FormatReal(x)) << "</text>\n";
  }
  s << "<text x=\"" << Fixed(kLeft + plot_w / 2) << "\" y=\"" << Fixed(kHeight - 10)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
    << (mixed_kinds ? "normalized stimulus level" : "stimulus level") << "</text>\n"
    << "<text transform=\"translate(16," << Fixed(kTop + plot_h / 2)
    << ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
    << (all_irc ? "match rate" : "bias (protected - unprotected)") << "</text>\n"
    << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
    << plot_h << "\" fill=\"none\" stroke=\"#888\"/>\n";

  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const Curve& c = curves[ci];
    const char* color = kPalette[ci % std::size(kPalette)];
    auto x_of = [&](const CurvePoint& p) {
      return mixed_kinds ? (p.stimulus - c.lower) / (c.upper - c.lower) : p.stimulus;
    };
    std::vector<std::string> run;
    auto flush = [&] {
      if (!run.empty()) {
        s << "<polyline class=\"curve\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"2\" points=\"";
        for (std::size_t k = 0; k < run.size(); ++k) s << (k ? " " : "") << run[k];
        s << "\"/>\n";
      }
      run.clear();
    };
    for (const auto& p : c.points) {
      if (!p.defined()) {
        flush();
        continue;
      }
      run.push_back(Fixed(px(x_of(p))) + "," + Fixed(py(*p.value)));
    }
    flush();

    std::string auc = "n/a";
    try {
      auc = Fixed(CurveAuc(c), 3);
    } catch (const Error&) {
    }
    const double ly = kTop + 14 + 18 * static_cast<double>(ci);
    s << "<line x1=\"" << Fixed(kWidth - kRight + 12) << "\" y1=\"" << Fixed(ly - 4) << "\" x2=\""
      << Fixed(kWidth - kRight + 32) << "\" y2=\"" << Fixed(ly - 4) << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << Fixed(kWidth - kRight + 38) << "\" y=\"" << Fixed(ly)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << Escape(CurveLabel(c)) << " (AUC "
      << auc << ")</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void RenderCurvesSvg(std::span<const Curve> curves, const std::string& title,
                     const std::string& manifest_digest, const std::filesystem::path& out) {
  WriteTextFile(out, CurvesSvg(curves, title, manifest_digest));
}

std::string HeatmapSvg(const AucMatrix& m, bool diverging, const std::string& title,
                       const std::string& manifest_digest) {
  double scale = 0.0;
  bool any_defined = false;
  for (const auto& row : m.values) {
    for (const auto& cell : row) {
      if (!cell) continue;
      any_defined = true;
      scale = std::max(scale, std::abs(*cell));
    }
  }
  if (!any_defined) throw Error("nothing to render: no defined AUC cells");
  if (scale == 0.0) scale = 1.0;

  constexpr double kCellW = 78, kCellH = 34, kLeft = 190, kTop = 130;
  const double width = kLeft + kCellW * static_cast<double>(m.col_labels.size()) + 30;
  const double height = kTop + kCellH * static_cast<double>(m.row_labels.size()) + 40;

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Fixed(width) << "\" height=\""
    << Fixed(height) << "\">\n"
    << "<!-- manifest " << Escape(manifest_digest) << " -->\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"10\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\">" << Escape(title)
    << " (matrix L1 " << Fixed(m.matrix_l1, 3) << ")</text>\n";
  for (std::size_t j = 0; j < m.col_labels.size(); ++j) {
    const double x = kLeft + kCellW * (static_cast<double>(j) + 0.5);
    s << "<text transform=\"translate(" << Fixed(x) << "," << Fixed(kTop - 8)
      << ") rotate(-40)\" font-family=\"sans-serif\" font-size=\"11\">"
      << Escape(m.col_labels[j]) << " (" << Fixed(m.col_l1[j], 3) << ")</text>\n";
  }
  for (std::size_t i = 0; i < m.row_labels.size(); ++i) {
    const double y = kTop + kCellH * static_cast<double>(i);
    s << "<text x=\"" << Fixed(kLeft - 8) << "\" y=\"" << Fixed(y + kCellH / 2 + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << Escape(m.row_labels[i]) << " (" << Fixed(m.row_l1[i], 3) << ")</text>\n";
    for (std::size_t j = 0; j < m.col_labels.size(); ++j) {
      const double x = kLeft + kCellW * static_cast<double>(j);
      const auto& cell = m.values[i][j];
      std::string fill = "rgb(200,200,200)";
      if (cell) {
        if (diverging) {
          const double t = *cell / scale;
          fill = t >= 0 ? Color(kWhite, kRed, t) : Color(kWhite, kBlue, -t);
        } else {
          fill = Color(kWhite, kGreen, *cell);
        }
      }
      s << "<rect class=\"cell\" x=\"" << Fixed(x) << "\" y=\"" << Fixed(y) << "\" width=\""
        << Fixed(kCellW) << "\" height=\"" << Fixed(kCellH) << "\" fill=\"" << fill
        << "\" stroke=\"white\"/>\n"
        << "<text x=\"" << Fixed(x + kCellW / 2) << "\" y=\"" << Fixed(y + kCellH / 2 + 4)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << (cell ? Fixed(*cell, 3) : std::string("n/a")) << "</text>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

void RenderHeatmapSvg(const AucMatrix& matrix, bool diverging, const std::string& title,
                      const std::string& manifest_digest, const std::filesystem::path& out) {
  WriteTextFile(out, HeatmapSvg(matrix, diverging, title, manifest_digest));
}

}  // namespace fairsa
