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

#include "fairsa/common.h"
#include "fairsa/report.h"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <regex>
#include <sstream>

#include "fairsa/analysis.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "test_support.h"

namespace fairsa {
namespace {

using ::testing::HasSubstr;
using testing::TempDir;

constexpr char kHeader[] =
    "task,perturbation,attribute,value,pruning,level_index,stimulus,value,defined,n_protected,"
    "n_unprotected";

Curve MakeCurve(PerturbationKind kind, std::optional<SubgroupSpec> subgroup,
                std::vector<std::optional<double>> values, double lower = 0, double upper = 8) {
  Curve c;
  c.task = Task::kVerification;
  c.kind = kind;
  c.subgroup = std::move(subgroup);
  c.lower = lower;
  c.upper = upper;
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < n; ++i) {
    c.points.push_back({static_cast<int>(i), lower + (upper - lower) * i / (n - 1), values[i], 10 + i, 20});
  }
  return c;
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

void ExpectWellFormed(const std::string& svg) {
  std::istringstream in(svg);
  boost::property_tree::ptree tree;
  EXPECT_NO_THROW(boost::property_tree::read_xml(in, tree)) << svg;
  EXPECT_EQ(tree.count("svg"), 1u);
}

TEST(CurvesCsv, OneCurveThreePoints) {
  TempDir dir;
  const Curve c = MakeCurve(PerturbationKind::kRotation, SubgroupSpec{"Male", true}, {0.0, -0.125, 1.0 / 3}, 0, 90);
  EmitCurvesCsv(std::span(&c, 1), dir / "c.csv");
  const auto lines = Lines(testing::ReadFile(dir / "c.csv"));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], kHeader);
  EXPECT_EQ(lines[1], "verification,rotation,Male,1,none,0,0,0,true,10,20");
  EXPECT_EQ(lines[2], "verification,rotation,Male,1,none,1,45,-0.125,true,11,20");
  EXPECT_EQ(lines[3], "verification,rotation,Male,1,none,2,90,0.333333333,true,12,20");
}

TEST(CurvesCsv, UndefinedPointsAndItemResponseRows) {
  std::vector<Curve> curves = {
      MakeCurve(PerturbationKind::kGaussianBlur, SubgroupSpec{"Young", false}, {0.5, std::nullopt}),
      MakeCurve(PerturbationKind::kGaussianBlur, std::nullopt, {1.0, 0.25}),
  };
  const auto lines = Lines(CurvesCsv(curves));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[1], "verification,gaussian-blur,,,none,0,0,1,true,10,20");
  EXPECT_EQ(lines[4], "verification,gaussian-blur,Young,0,none,1,8,,false,11,20");
}

TEST(CurvesCsv, RowsAreSortedByPerturbationAttributeLevel) {
  std::vector<Curve> curves = {
      MakeCurve(PerturbationKind::kVignette, SubgroupSpec{"B", true}, {0.1, 0.2}),
      MakeCurve(PerturbationKind::kExposure, SubgroupSpec{"B", true}, {0.1, 0.2}, -4, 4),
      MakeCurve(PerturbationKind::kVignette, SubgroupSpec{"A", true}, {0.1, 0.2}),
  };
  const auto lines = Lines(CurvesCsv(curves));
  std::vector<std::string> keys;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> f;
    std::stringstream ss(lines[i]);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    keys.push_back(f[1] + "|" + f[2] + "|" + f[5]);
  }
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  EXPECT_EQ(keys.front(), "exposure|B|0");
}

TEST(CurvesCsv, ParseRoundTrip) {
  TempDir dir;
  std::vector<Curve> curves = {
      MakeCurve(PerturbationKind::kExposure, SubgroupSpec{"Male", false}, {0.1, std::nullopt, -0.7, 0.3, 0.0}, -4, 4),
      MakeCurve(PerturbationKind::kExposure, std::nullopt, {1.0, 0.5, 0.25, 0.125, 0.0}, -4, 4),
      MakeCurve(PerturbationKind::kSpeckleNoise, SubgroupSpec{"Male", false}, {0.0, 1.0 / 7}, 0, 0.5),
  };
  EmitCurvesCsv(curves, dir / "a.csv");
  const std::vector<Curve> parsed = ParseCurvesCsv(dir / "a.csv");
  EXPECT_EQ(CurvesCsv(parsed), testing::ReadFile(dir / "a.csv"));
  ASSERT_EQ(parsed.size(), 3u);
  for (const Curve& p : parsed) {
    const Curve* original = nullptr;
    for (const Curve& c : curves) {
      if (c.kind == p.kind && c.subgroup == p.subgroup) original = &c;
    }
    ASSERT_NE(original, nullptr);
    EXPECT_EQ(p.task, original->task);
    EXPECT_EQ(p.lower, original->lower);
    EXPECT_EQ(p.upper, original->upper);
    ASSERT_EQ(p.points.size(), original->points.size());
    for (std::size_t i = 0; i < p.points.size(); ++i) {
      EXPECT_EQ(p.points[i].defined(), original->points[i].defined());
      EXPECT_EQ(p.points[i].n_protected, original->points[i].n_protected);
      if (p.points[i].defined()) {
        EXPECT_NEAR(*p.points[i].value, *original->points[i].value, 1e-9);
      }
    }
  }
}

TEST(CurvesCsv, FloatValuesRoundTripExactly) {
  Curve c = MakeCurve(PerturbationKind::kRotation, SubgroupSpec{"X", true}, {0.0, 0.0}, 0, 90);
  c.points[0].value = static_cast<double>(0.1f);
  c.points[1].value = static_cast<double>(-0.7654321f);
  TempDir dir;
  EmitCurvesCsv(std::span(&c, 1), dir / "f.csv");
  const Curve back = ParseCurvesCsv(dir / "f.csv").front();
  EXPECT_EQ(static_cast<float>(*back.points[0].value), 0.1f);
  EXPECT_EQ(static_cast<float>(*back.points[1].value), -0.7654321f);
}

TEST(CurvesCsv, MalformedInputIsFatal) {
  TempDir dir;
  WriteTextFile(dir / "bad.csv", std::string(kHeader) + "\nverification,rotation,X,1,none,0\n");
  EXPECT_THROW(ParseCurvesCsv(dir / "bad.csv"), Error);
  WriteTextFile(dir / "hdr.csv", "task,perturbation\n");
  EXPECT_THROW(ParseCurvesCsv(dir / "hdr.csv"), Error);
}

TEST(AucJson, SingletonValue) {
  TempDir dir;
  const Curve c = MakeCurve(PerturbationKind::kRotation, SubgroupSpec{"M", true}, {0.25, 0.25}, 0, 90);
  const AucMatrix m = BuildAucMatrix(std::span(&c, 1));
  EmitAucJson(m, "abc123", dir / "a.json");
  const auto doc = nlohmann::json::parse(testing::ReadFile(dir / "a.json"));
  EXPECT_EQ(doc["matrix_l1"].get<double>(), 0.25);
  EXPECT_EQ(doc["manifest_digest"], "abc123");
}

TEST(AucJson, KeysSortedNullsAndExactRoundTrip) {
  TempDir dir;
  AucMatrix m;
  m.row_labels = {"A=1", "B=0"};
  m.col_labels = {"rotation", "vignette"};
  m.values = {{0.1, -0.2}, {-0.3, 0.4}};
  m.ComputeNorms();
  EXPECT_NEAR(m.row_l1[0], 0.3, 1e-15);
  EXPECT_NEAR(m.row_l1[1], 0.7, 1e-15);
  EXPECT_NEAR(m.col_l1[0], 0.4, 1e-15);
  EXPECT_NEAR(m.col_l1[1], 0.6, 1e-15);
  EXPECT_NEAR(m.matrix_l1, 1.0, 1e-15);
  EmitAucJson(m, "d1", dir / "m.json");
  ParsedAucJson back = ParseAucJson(dir / "m.json");
  EXPECT_EQ(back.matrix, m);
  EXPECT_EQ(back.manifest_digest, "d1");

  m.values[1][0].reset();
  m.values[0][1] = 1.0 / 3;
  m.ComputeNorms();
  EmitAucJson(m, "d2", dir / "n.json");
  const std::string text = testing::ReadFile(dir / "n.json");
  EXPECT_THAT(text, HasSubstr("null"));
  EXPECT_EQ(ParseAucJson(dir / "n.json").matrix, m);

  const auto doc = nlohmann::json::parse(text);
  std::vector<std::string> keys;
  for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  EXPECT_THAT(keys, ::testing::ElementsAre("col_l1", "col_labels", "manifest_digest", "matrix_l1",
                                           "row_l1", "row_labels", "undefined_cells", "values"));
  const std::size_t first = text.find("\"col_l1\"");
  const std::size_t last = text.find("\"values\"");
  EXPECT_LT(first, last);
}

TEST(Svg, FlatZeroCurveSitsOnZeroGridline) {
  const Curve c = MakeCurve(PerturbationKind::kRotation, SubgroupSpec{"M", true}, {0.0, 0.0, 0.0}, 0, 90);
  const std::string svg = CurvesSvg(std::span(&c, 1), "flat", "dig");
  ExpectWellFormed(svg);
  std::smatch zero;
  ASSERT_TRUE(std::regex_search(svg, zero, std::regex("id=\"zero-line\"[^>]* y1=\"([0-9.]+)\"")));
  std::smatch poly;
  ASSERT_TRUE(std::regex_search(svg, poly, std::regex("class=\"curve\"[^>]* points=\"([^\"]+)\"")));
  std::istringstream pts(poly[1].str());
  int count = 0;
  for (std::string p; pts >> p; ++count) EXPECT_EQ(p.substr(p.find(',') + 1), zero[1].str());
  EXPECT_EQ(count, 3);
  EXPECT_THAT(svg, HasSubstr("dig"));
}

TEST(Svg, HeatmapOfZerosIsUniformlyMidScale) {
  AucMatrix m;
  m.row_labels = {"A=1", "B=1", "C&D=1"};
  m.col_labels = {"rotation", "gamma-contrast"};
  m.values.assign(3, std::vector<std::optional<double>>(2, 0.0));
  m.ComputeNorms();
  const std::string svg = HeatmapSvg(m, true, "zeros <test>", "dig");
  ExpectWellFormed(svg);
  std::regex fill("class=\"cell\"[^>]* fill=\"([^\"]+)\"");
  std::set<std::string> fills;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), fill); it != std::sregex_iterator(); ++it) {
    fills.insert((*it)[1].str());
  }
  EXPECT_EQ(fills, std::set<std::string>{"rgb(255,255,255)"});
}

TEST(Svg, HeatmapSignsAndNormLabels) {
  AucMatrix m;
  m.row_labels = {"A=1"};
  m.col_labels = {"rotation", "vignette", "exposure"};
  m.values = {{0.5, -0.5, std::nullopt}};
  m.ComputeNorms();
  const std::string svg = HeatmapSvg(m, true, "signs", "dig");
  ExpectWellFormed(svg);
  EXPECT_THAT(svg, HasSubstr("fill=\"rgb(178,24,43)\""));
  EXPECT_THAT(svg, HasSubstr("A=1 (1.000)"));
  EXPECT_THAT(svg, HasSubstr("matrix L1 1.000"));
  EXPECT_THAT(svg, HasSubstr("n/a"));
  ExpectWellFormed(HeatmapSvg(m, false, "seq", "dig"));
}

TEST(Svg, NothingToRenderIsFatal) {
  const Curve c = MakeCurve(PerturbationKind::kRotation, SubgroupSpec{"M", true}, {std::nullopt, std::nullopt}, 0, 90);
  EXPECT_THROW(CurvesSvg(std::span(&c, 1), "none", "d"), Error);
  AucMatrix m;
  m.row_labels = {"A=1"};
  m.col_labels = {"rotation"};
  m.values = {{std::nullopt}};
  m.ComputeNorms();
  EXPECT_THROW(HeatmapSvg(m, true, "none", "d"), Error);
}

TEST(Svg, MixedCurvesRenderWellFormed) {
  std::vector<Curve> curves = {
      MakeCurve(PerturbationKind::kExposure, SubgroupSpec{"A<B", true}, {0.1, std::nullopt, -0.7, 0.3}, -4, 4),
      MakeCurve(PerturbationKind::kRotation, SubgroupSpec{"A<B", true}, {0.1, 0.2}, 0, 90),
  };
  ExpectWellFormed(CurvesSvg(curves, "mixed & matched", "d"));
  std::vector<Curve> irc = {MakeCurve(PerturbationKind::kRotation, std::nullopt, {1.0, 0.4}, 0, 90)};
  ExpectWellFormed(CurvesSvg(irc, "irc", "d"));
}

TEST(Manifest, DigestIgnoresTimestamp) {
  RunManifest a{"c", "d", 7, "builtin-toy/v1", "2026-01-01T00:00:00Z"};
  RunManifest b = a;
  b.timestamp = "2030-12-31T23:59:59Z";
  EXPECT_EQ(a.Digest(), b.Digest());
  b.seed = 8;
  EXPECT_NE(a.Digest(), b.Digest());
  EXPECT_EQ(a.Digest().size(), 16u);
}

TEST(WriteTextFile, IoFailureIsFatal) {
  EXPECT_THROW(WriteTextFile("/nonexistent-dir/x/y.txt", "z"), Error);
}

}  // namespace
}  // namespace fairsa
