/*
 * Copyright 2026 The ecca-cpp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ecca/cli.hpp"

int main(int argc, char** argv) {
  using ecca::cli::RunConfig;
  RunConfig cfg;
  std::string ranks, grid, settings = "1";

  CLI::App app{"Exponential canonical correlation analysis"};
  app.require_subcommand(1);

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out, "Output directory")->default_str(".");
    sub->add_option("--seed", cfg.seed, "Random seed");
  };
  const auto add_data = [&](CLI::App* sub) {
    sub->add_option("--x1", cfg.x1, "CSV matrix of view 1 (n x p1)")->required();
    sub->add_option("--x2", cfg.x2, "CSV matrix of view 2 (n x p2)")->required();
    sub->add_option("--family1", cfg.family1, "gaussian | binomial:<m>");
    sub->add_option("--family2", cfg.family2, "gaussian | binomial:<m>");
  };
  const auto add_fit = [&](CLI::App* sub) {
    sub->add_option("--gamma", cfg.gamma, "SOC inverse step size");
    sub->add_option("--eps", cfg.eps, "Outer nll tolerance (default 1e-6 n (p1 + p2))");
    sub->add_option("--t-max", cfg.t_max, "Maximum outer iterations");
    sub->add_flag("--no-intercept", [&](std::int64_t) { cfg.intercept = false; },
                  "Fix mu_k = 0");
  };

  auto* sim = app.add_subcommand("simulate", "Draw replicates of a simulation setting");
  add_common(sim);
  sim->add_option("--setting", settings, "1 | 2 | 3");
  sim->add_option("--reps", cfg.reps, "Number of replicates");
  sim->add_flag("--noiseless", cfg.noiseless, "Observe Theta (or its mean) without noise");

  auto* fit = app.add_subcommand("fit", "Fit ECCA with given ranks");
  add_common(fit);
  add_data(fit);
  add_fit(fit);
  fit->add_option("--ranks", ranks, "r0,r1,r2");
  fit->add_option("--rank-json", cfg.rank_json, "rank.json produced by 'rank'");

  auto* rank = app.add_subcommand("rank", "Select total and joint ranks");
  add_common(rank);
  add_data(rank);
  rank->add_option("--grid", grid, "Candidate total ranks, e.g. 1-10 or 2,4,6");
  rank->add_option("--folds", cfg.folds, "Cross-validation folds");

  auto* eval = app.add_subcommand("evaluate", "Compare a fitted model with the truth");
  add_common(eval);
  eval->add_option("--model", cfg.model, "Fitted model.json")->required();
  eval->add_option("--truth", cfg.truth, "Ground-truth model json")->required();

  auto* bench = app.add_subcommand("bench", "simulate -> fit -> evaluate over replicates");
  add_common(bench);
  add_fit(bench);
  bench->add_option("--setting", settings, "Comma list of settings, e.g. 1,2,3");
  bench->add_option("--reps", cfg.reps, "Replicates per setting");
  bench->add_flag("--noiseless", cfg.noiseless, "Noise-free observations");
  bench->add_flag("--timing", cfg.timing, "Record wall time (results then vary run to run)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ecca::cli::kExitInvalid;
  }

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    if (!ranks.empty()) cfg.ranks = ecca::cli::parse_ranks(ranks);
    if (!grid.empty()) cfg.grid = ecca::cli::parse_grid(grid);
    cfg.settings.clear();
    for (auto s : ecca::cli::parse_grid(settings, "--setting")) cfg.settings.push_back(static_cast<int>(s));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ecca::cli::kExitInvalid;
  }
  return ecca::cli::run(cfg, std::cout, std::cerr);
}
