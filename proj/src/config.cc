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

#include "fairsa/config.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "fairsa/common.h"

namespace fairsa {
namespace {

using nlohmann::json;

void RejectUnknownKeys(const json& obj, std::initializer_list<std::string_view> allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw Error(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error("unknown config key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T Get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error("config " + where + "." + key + ": " + e.what());
  }
}

std::filesystem::path Resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path.lexically_normal();
  return (base / path).lexically_normal();
}

std::string ProviderVariantName(ProviderVariant v) {
  switch (v) {
    case ProviderVariant::kBuiltinToy:
      return "builtin-toy";
    case ProviderVariant::kFile:
      return "file";
    case ProviderVariant::kProcess:
      return "process";
  }
  return "builtin-toy";
}

std::string UtcTimestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<SubgroupSpec> EffectiveSubgroups(const RunConfig& config, const Dataset& dataset) {
  if (!config.subgroups.empty()) return config.subgroups;
  std::vector<SubgroupSpec> all;
  for (const auto& name : dataset.attribute_names()) all.push_back({name, true});
  return all;
}

}  // namespace

void RunConfig::Validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  if (perturbations.empty()) throw Error("config lists no perturbations");
  std::set<PerturbationKind> kinds;
  for (const auto& p : perturbations) {
    p.Validate();
    if (!kinds.insert(p.kind).second) {
      throw Error("perturbation '" + std::string(KindName(p.kind)) + "' listed twice");
    }
  }
  std::set<SubgroupSpec> seen;
  for (const auto& s : subgroups) {
    if (s.attribute.empty()) throw Error("subgroup with empty attribute name");
    if (!seen.insert(s).second) throw Error("subgroup " + s.Label() + " listed twice");
  }
  if (pruning == Pruning::kVerificationPairs && task != Task::kVerification) {
    throw Error("verification-pairs pruning requires the verification task");
  }
  if (pruning == Pruning::kVpsaIdentities && task != Task::kSelfMatching) {
    throw Error("vpsa-identities pruning requires the self-matching task");
  }
  if (workers < 1) throw Error("workers must be at least 1");
  if (provider.variant == ProviderVariant::kFile && provider.file.empty()) {
    throw Error("file provider needs a path");
  }
  if (provider.variant == ProviderVariant::kProcess && provider.command.empty()) {
    throw Error("process provider needs a command");
  }
  if (provider.expected_dim && *provider.expected_dim <= 0) {
    throw Error("expected_dim must be positive");
  }
  if (threshold && !std::isfinite(*threshold)) throw Error("threshold must be finite");
}

json RunConfig::ToJson() const {
  json prov = {{"variant", ProviderVariantName(provider.variant)}};
  if (provider.variant == ProviderVariant::kFile) prov["path"] = provider.file.string();
  if (provider.variant == ProviderVariant::kProcess) prov["command"] = provider.command;
  if (provider.expected_dim) prov["expected_dim"] = *provider.expected_dim;
  json perts = json::array();
  for (const auto& p : perturbations) {
    perts.push_back(
        {{"kind", std::string(KindName(p.kind))}, {"n", p.n}, {"lower", p.lower}, {"upper", p.upper}});
  }
  json groups = json::array();
  for (const auto& s : subgroups) groups.push_back({{"attribute", s.attribute}, {"value", s.value}});
  return {
      {"dataset",
       {{"image_dir", dataset.image_dir.string()},
        {"identity_file", dataset.identity_file.string()},
        {"attr_file", dataset.attr_file.string()}}},
      {"task", std::string(TaskName(task))},
      {"provider", prov},
      {"perturbations", perts},
      {"subgroups", groups},
      {"threshold", threshold ? json(static_cast<double>(*threshold)) : json("auto")},
      {"alpha", alpha},
      {"pruning", std::string(PruningName(pruning))},
      {"seed", seed},
      {"workers", workers},
      {"output_dir", output_dir.string()},
  };
}

RunConfig RunConfig::FromJson(const json& doc, const std::filesystem::path& base_dir) {
  RejectUnknownKeys(doc,
                    {"dataset", "task", "provider", "perturbations", "subgroups", "threshold",
                     "alpha", "pruning", "seed", "workers", "output_dir"},
                    "config");
  RunConfig c;
  const json& ds = doc.at("dataset");
  RejectUnknownKeys(ds, {"image_dir", "identity_file", "attr_file"}, "dataset");
  c.dataset.image_dir = Resolve(base_dir, Get<std::string>(ds, "image_dir", "dataset"));
  c.dataset.identity_file = Resolve(base_dir, Get<std::string>(ds, "identity_file", "dataset"));
  c.dataset.attr_file = Resolve(base_dir, Get<std::string>(ds, "attr_file", "dataset"));

  if (doc.contains("task")) c.task = ParseTask(Get<std::string>(doc, "task", "config"));

  if (doc.contains("provider")) {
    const json& pv = doc["provider"];
    RejectUnknownKeys(pv, {"variant", "path", "command", "expected_dim"}, "provider");
    const auto variant = Get<std::string>(pv, "variant", "provider");
    if (variant == "builtin-toy") {
      c.provider.variant = ProviderVariant::kBuiltinToy;
    } else if (variant == "file") {
      c.provider.variant = ProviderVariant::kFile;
      c.provider.file = Resolve(base_dir, Get<std::string>(pv, "path", "provider"));
    } else if (variant == "process") {
      c.provider.variant = ProviderVariant::kProcess;
      c.provider.command = Get<std::string>(pv, "command", "provider");
    } else {
      throw Error("unknown provider variant '" + variant + "'");
    }
    if (c.provider.variant != ProviderVariant::kFile && pv.contains("path")) {
      throw Error("provider.path only applies to the file variant");
    }
    if (c.provider.variant != ProviderVariant::kProcess && pv.contains("command")) {
      throw Error("provider.command only applies to the process variant");
    }
    if (pv.contains("expected_dim")) c.provider.expected_dim = Get<int>(pv, "expected_dim", "provider");
  }

  if (!doc.contains("perturbations") || !doc["perturbations"].is_array()) {
    throw Error("config.perturbations must be an array");
  }
  for (const auto& p : doc["perturbations"]) {
    RejectUnknownKeys(p, {"kind", "n", "lower", "upper"}, "perturbation");
    PerturbationSpec spec;
    spec.kind = ParseKind(Get<std::string>(p, "kind", "perturbation"));
    const LevelRange range = ValidRange(spec.kind);
    spec.n = p.contains("n") ? Get<int>(p, "n", "perturbation") : 5;
    spec.lower = p.contains("lower") ? Get<double>(p, "lower", "perturbation") : range.lower;
    spec.upper = p.contains("upper") ? Get<double>(p, "upper", "perturbation") : range.upper;
    c.perturbations.push_back(spec);
  }
  if (doc.contains("subgroups")) {
    for (const auto& s : doc["subgroups"]) {
      RejectUnknownKeys(s, {"attribute", "value"}, "subgroup");
      c.subgroups.push_back({Get<std::string>(s, "attribute", "subgroup"),
                             s.contains("value") ? Get<bool>(s, "value", "subgroup") : true});
    }
  }
  if (doc.contains("threshold")) {
    const json& t = doc["threshold"];
    if (t.is_string()) {
      if (t.get<std::string>() != "auto") throw Error("threshold must be a number or \"auto\"");
    } else if (t.is_number()) {
      c.threshold = t.get<float>();
    } else {
      throw Error("threshold must be a number or \"auto\"");
    }
  }
  if (doc.contains("alpha")) c.alpha = Get<double>(doc, "alpha", "config");
  if (doc.contains("pruning")) c.pruning = ParsePruning(Get<std::string>(doc, "pruning", "config"));
  if (doc.contains("seed")) c.seed = Get<std::uint64_t>(doc, "seed", "config");
  if (doc.contains("workers")) c.workers = Get<int>(doc, "workers", "config");
  if (doc.contains("output_dir")) {
    c.output_dir = Resolve(base_dir, Get<std::string>(doc, "output_dir", "config"));
  }
  for (auto& p : c.perturbations) p.seed = c.seed;
  c.Validate();
  return c;
}

std::string RunConfig::ResultDigest() const {
  json doc = ToJson();
  doc.erase("workers");
  doc.erase("output_dir");
  return DigestHex(doc.dump());
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error("config is not valid JSON: " + path.string());
  return RunConfig::FromJson(doc, std::filesystem::absolute(path).parent_path());
}

RunResult ComputeRun(const RunConfig& config, const Dataset& dataset, ProviderPool& providers) {
  config.Validate();
  const auto subgroups = EffectiveSubgroups(config, dataset);
  AuditOptions options;
  options.task = config.task;
  options.pruning = config.pruning;
  options.alpha = config.alpha;
  options.threshold = config.threshold;
  options.workers = config.workers;
  Auditor auditor(dataset, providers, options);

  RunResult result;
  const bool irc = config.task == Task::kSelfMatching;
  for (PerturbationSpec spec : config.perturbations) {
    spec.seed = config.seed;
    auto curves = auditor.Sweep(spec, subgroups, irc);
    if (irc) {
      result.irc_curves.push_back(std::move(curves.back()));
      curves.pop_back();
    }
    for (auto& c : curves) result.curves.push_back(std::move(c));
  }
  result.auc = BuildAucMatrix(result.curves);
  if (irc) result.irc_auc = BuildAucMatrix(result.irc_curves);

  result.manifest.config_digest = config.ResultDigest();
  result.manifest.dataset_digest = dataset.Digest();
  result.manifest.seed = config.seed;
  result.manifest.provider = providers.Identity();
  result.manifest.timestamp = UtcTimestamp();
  return result;
}

void WriteRunOutputs(const RunResult& result, const RunConfig& config,
                     const std::filesystem::path& run_dir) {
  std::filesystem::create_directories(run_dir);
  const std::string digest = result.manifest.Digest();
  const std::string task(TaskName(config.task));
  auto try_render = [](const std::filesystem::path& file, const auto& render) {
    try {
      render();
    } catch (const Error& e) {
      std::cerr << "fairsa: skipped " << file.filename().string() << ": " << e.what() << '\n';
    }
  };

  EmitCurvesCsv(result.curves, run_dir / "curves.csv");
  EmitAucJson(result.auc, digest, run_dir / "auc.json");
  for (const auto& spec : config.perturbations) {
    std::vector<Curve> group;
    for (const auto& c : result.curves) {
      if (c.kind == spec.kind) group.push_back(c);
    }
    const auto file = run_dir / ("curves_" + std::string(KindName(spec.kind)) + ".svg");
    try_render(file, [&] {
      RenderCurvesSvg(group, "Fair SA " + task + ": " + std::string(KindName(spec.kind)), digest,
                      file);
    });
  }
  try_render(run_dir / "heatmap.svg", [&] {
    RenderHeatmapSvg(result.auc, true, "Fair SA AUC (" + task + ")", digest,
                     run_dir / "heatmap.svg");
  });
  if (result.irc_auc) {
    EmitCurvesCsv(result.irc_curves, run_dir / "irc.csv");
    EmitAucJson(*result.irc_auc, digest, run_dir / "irc_auc.json");
    try_render(run_dir / "irc.svg", [&] {
      RenderCurvesSvg(result.irc_curves, "VPSA item-response curves", digest, run_dir / "irc.svg");
    });
    try_render(run_dir / "irc_heatmap.svg", [&] {
      RenderHeatmapSvg(*result.irc_auc, false, "VPSA IRC AUC", digest,
                       run_dir / "irc_heatmap.svg");
    });
  }

  const json manifest = {
      {"manifest_digest", digest},
      {"config", config.ToJson()},
      {"config_digest", result.manifest.config_digest},
      {"dataset_digest", result.manifest.dataset_digest},
      {"seed", result.manifest.seed},
      {"provider", result.manifest.provider},
      {"timestamp", result.manifest.timestamp},
      {"tool_version", result.manifest.tool_version},
      {"load_report",
       {{"missing_images", result.load_report.missing_images},
        {"identity_only", result.load_report.identity_only},
        {"attributes_only", result.load_report.attributes_only}}},
  };
  WriteTextFile(run_dir / "manifest.json", manifest.dump(2) + "\n");
}

RunResult ExecuteRun(const RunConfig& config) {
  config.Validate();
  const LoadedDataset loaded = LoadDataset(config.dataset.image_dir, config.dataset.identity_file,
                                           config.dataset.attr_file);
  const LoadReport& report = loaded.report;
  if (report.missing_images + report.identity_only + report.attributes_only > 0) {
    std::cerr << "fairsa: skipped " << report.missing_images << " records without images, "
              << report.identity_only << " only in the identity file, " << report.attributes_only
              << " only in the attribute file\n";
  }
  ProviderPool providers(config.provider, config.workers);
  RunResult result = ComputeRun(config, loaded.dataset, providers);
  result.load_report = report;
  result.run_dir = config.output_dir / std::string(TaskName(config.task)) /
                   std::string(PruningName(config.pruning));
  WriteRunOutputs(result, config, result.run_dir);
  return result;
}

std::size_t ExecuteEmbed(const RunConfig& config, const std::filesystem::path& out) {
  config.Validate();
  const LoadedDataset loaded = LoadDataset(config.dataset.image_dir, config.dataset.identity_file,
                                           config.dataset.attr_file);
  const Dataset& dataset = loaded.dataset;
  ProviderPool providers(config.provider, config.workers);

  EmbeddingMatrix all = EmbedParallel(providers, dataset.size(), [&](std::size_t i, bool pixels) {
    return LabeledImage{dataset[i].id, pixels ? dataset.LoadImage(i) : Image{}};
  });
  for (const auto& spec : config.perturbations) {
    const StimulusLadder ladder = MakeLadder(spec);
    for (std::size_t level = 0; level < ladder.levels.size(); ++level) {
      const double delta = ladder.levels[level];
      if (delta == 0.0) continue;
      const EmbeddingMatrix probes =
          EmbedParallel(providers, dataset.size(), [&](std::size_t i, bool pixels) {
            LabeledImage item{ProbeKey(dataset[i].id, spec.kind, delta), {}};
            if (pixels) {
              item.image = Apply(dataset.LoadImage(i), spec.kind, delta, config.seed, dataset[i].id,
                                 static_cast<int>(level));
            }
            return item;
          });
      all.ids.insert(all.ids.end(), probes.ids.begin(), probes.ids.end());
      all.values.insert(all.values.end(), probes.values.begin(), probes.values.end());
    }
  }
  WriteFsae(all, out);
  return all.size();
}

void RerenderReport(const std::filesystem::path& run_dir) {
  auto render_set = [&](const std::string& csv, const std::string& auc_json, bool irc) {
    if (!std::filesystem::exists(run_dir / csv)) return false;
    const auto curves = ParseCurvesCsv(run_dir / csv);
    const auto parsed = ParseAucJson(run_dir / auc_json);
    if (irc) {
      RenderCurvesSvg(curves, "VPSA item-response curves", parsed.manifest_digest, run_dir / "irc.svg");
      RenderHeatmapSvg(parsed.matrix, false, "VPSA IRC AUC", parsed.manifest_digest,
                       run_dir / "irc_heatmap.svg");
      return true;
    }
    std::map<PerturbationKind, std::vector<Curve>> by_kind;
    for (const auto& c : curves) by_kind[c.kind].push_back(c);
    for (const auto& [kind, group] : by_kind) {
      const std::string task(TaskName(group.front().task));
      RenderCurvesSvg(group, "Fair SA " + task + ": " + std::string(KindName(kind)),
                      parsed.manifest_digest,
                      run_dir / ("curves_" + std::string(KindName(kind)) + ".svg"));
    }
    const std::string task = curves.empty() ? "" : std::string(TaskName(curves.front().task));
    RenderHeatmapSvg(parsed.matrix, true, "Fair SA AUC (" + task + ")", parsed.manifest_digest,
                     run_dir / "heatmap.svg");
    return true;
  };
  if (!render_set("curves.csv", "auc.json", false)) {
    throw Error("no curves.csv in " + run_dir.string());
  }
  render_set("irc.csv", "irc_auc.json", true);
}

}  // namespace fairsa
