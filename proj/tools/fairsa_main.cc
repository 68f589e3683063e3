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

// fairsa: robustness-fairness audits of face embedding models.
//
//   fairsa run --config cfg.json [--task T] [--workers N] [--seed S] [--out DIR]
//   fairsa embed --config cfg.json --out embeddings.fsae
//   fairsa perturb --image in.png --kind gaussian-blur --level 2 --out out.png
//   fairsa report --in DIR [--svg]
//   fairsa synth --out DIR

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fairsa/common.h"
#include "fairsa/config.h"
#include "fairsa/perturb.h"
#include "fairsa/report.h"
#include "fairsa/synthetic.h"

namespace {

using namespace fairsa;

void PrintMatrix(const AucMatrix& m, std::ostream& out) {
  out << "matrix L1 " << FormatReal(m.matrix_l1);
  if (m.undefined_cells > 0) out << " (" << m.undefined_cells << " undefined cells)";
  out << '\n';
  for (std::size_t i = 0; i < m.row_labels.size(); ++i) {
    out << "  " << m.row_labels[i] << " L1 " << FormatReal(m.row_l1[i]) << ':';
    for (std::size_t j = 0; j < m.col_labels.size(); ++j) {
      out << ' ' << m.col_labels[j] << '='
          << (m.values[i][j] ? FormatReal(*m.values[i][j]) : std::string("n/a"));
    }
    out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair sensitivity analysis of face recognition models under perturbation"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Sweep perturbation ladders and write curves and AUCs");
  std::string run_config;
  std::optional<std::string> run_task;
  std::optional<int> run_workers;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::string> run_out;
  run->add_option("--config", run_config, "JSON run configuration")->required();
  run->add_option("--task", run_task, "verification or self-matching");
  run->add_option("--workers", run_workers, "worker threads / provider processes");
  run->add_option("--seed", run_seed, "run seed (speckle noise)");
  run->add_option("--out", run_out, "output directory");

  auto* embed = app.add_subcommand("embed", "Precompute embeddings into an FSAE file");
  std::string embed_config;
  std::string embed_out;
  embed->add_option("--config", embed_config, "JSON run configuration")->required();
  embed->add_option("--out", embed_out, "FSAE output file")->required();

  auto* perturb = app.add_subcommand("perturb", "Preview one perturbation as a PNG");
  std::string image_in;
  std::string kind_name;
  double level = 0.0;
  std::uint64_t perturb_seed = 0;
  int level_index = 0;
  std::string image_out;
  perturb->add_option("--image", image_in, "input PNG or JPEG")->required();
  perturb->add_option("--kind", kind_name, "perturbation kind")->required();
  perturb->add_option("--level", level, "stimulus level")->required();
  perturb->add_option("--seed", perturb_seed, "run seed (speckle noise)");
  perturb->add_option("--level-index", level_index, "ladder index keying the noise stream");
  perturb->add_option("--out", image_out, "output PNG")->required();

  auto* report = app.add_subcommand("report", "Summarize or re-render a run directory");
  std::string report_in;
  bool report_svg = false;
  report->add_option("--in", report_in, "run directory (<out>/<task>/<pruning>)")->required();
  report->add_flag("--svg", report_svg, "re-render SVG plots from CSV/JSON");

  auto* synth = app.add_subcommand("synth", "Write the synthetic stripes/gradients corpus");
  std::string synth_out;
  SyntheticOptions synth_options;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--identities", synth_options.identities, "number of identities");
  synth->add_option("--per-identity", synth_options.images_per_identity, "images per identity");
  synth->add_option("--singles", synth_options.singles, "extra identities with a single image");
  synth->add_option("--size", synth_options.size, "image side in pixels");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      RunConfig config = LoadRunConfig(run_config);
      if (run_task) config.task = ParseTask(*run_task);
      if (run_workers) config.workers = *run_workers;
      if (run_seed) {
        config.seed = *run_seed;
        for (auto& p : config.perturbations) p.seed = config.seed;
      }
      if (run_out) config.output_dir = *run_out;
      const RunResult result = ExecuteRun(config);
      std::cout << "wrote " << result.run_dir.string() << '\n';
      PrintMatrix(result.auc, std::cout);
      if (result.irc_auc) {
        std::cout << "item-response curves: ";
        PrintMatrix(*result.irc_auc, std::cout);
      }
    } else if (*embed) {
      const RunConfig config = LoadRunConfig(embed_config);
      const std::size_t rows = ExecuteEmbed(config, embed_out);
      std::cout << "wrote " << rows << " embeddings to " << embed_out << '\n';
    } else if (*perturb) {
      const Image in = ReadImage(image_in);
      WritePng(Apply(in, ParseKind(kind_name), level, perturb_seed,
                     std::filesystem::path(image_in).stem().string(), level_index),
               image_out);
    } else if (*report) {
      const std::filesystem::path dir(report_in);
      if (report_svg) {
        RerenderReport(dir);
        std::cout << "re-rendered SVGs in " << dir.string() << '\n';
      }
      PrintMatrix(ParseAucJson(dir / "auc.json").matrix, std::cout);
      if (std::filesystem::exists(dir / "irc_auc.json")) {
        std::cout << "item-response curves: ";
        PrintMatrix(ParseAucJson(dir / "irc_auc.json").matrix, std::cout);
      }
    } else if (*synth) {
      WriteSyntheticDataset(synth_out, synth_options);
      std::cout << "wrote synthetic dataset to " << synth_out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "fairsa: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
