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

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ecca/errors.hpp"
#include "ecca/expfam.hpp"
#include "ecca/fit.hpp"
#include "ecca/io.hpp"
#include "ecca/metrics.hpp"
#include "ecca/model.hpp"
#include "ecca/rank.hpp"
#include "ecca/simgen.hpp"

namespace ecca::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitMaxIter = 2;

struct RunConfig {
  std::string command;
  fs::path x1, x2;
  std::string family1 = "gaussian";
  std::string family2 = "gaussian";
  std::optional<std::array<Index, 3>> ranks;  // r0, r1, r2
  fs::path rank_json;
  std::vector<Index> grid;
  std::uint64_t seed = 1;
  fs::path out = ".";
  int reps = 1;
  std::vector<int> settings{1};
  double gamma = 1000.0;
  double eps = 0.0;
  int t_max = 100;
  bool intercept = true;
  int folds = 10;
  bool noiseless = false;
  bool timing = false;
  fs::path model, truth;
};

/// Ranks given as "r0,r1,r2".
inline std::array<Index, 3> parse_ranks(const std::string& text) {
  std::array<Index, 3> r{};
  std::size_t at = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t comma = text.find(',', at);
    if ((i < 2) == (comma == std::string::npos))
      throw Error(ErrorKind::kInvalidInput, "--ranks: expected r0,r1,r2");
    const double v = io::parse_double(text.substr(at, comma - at), "--ranks");
    if (v < 0 || v != static_cast<double>(static_cast<Index>(v)))
      throw Error(ErrorKind::kInvalidInput, "--ranks: entries must be nonnegative integers");
    r[i] = static_cast<Index>(v);
    at = comma + 1;
  }
  return r;
}

/// Rank grid as a comma list ("1,2,5") and/or ranges ("1-8").
inline std::vector<Index> parse_grid(const std::string& text, const std::string& flag = "--grid") {
  std::vector<Index> out;
  std::size_t at = 0;
  while (at <= text.size()) {
    const std::size_t comma = text.find(',', at);
    const std::string item = text.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
    const std::size_t dash = item.find('-', 1);
    const auto to_index = [&flag](const std::string& s) {
      const double v = io::parse_double(s, flag);
      if (v < 0 || v != static_cast<double>(static_cast<Index>(v)))
        throw Error(ErrorKind::kInvalidInput, flag + ": entries must be nonnegative integers");
      return static_cast<Index>(v);
    };
    if (dash == std::string::npos) {
      out.push_back(to_index(item));
    } else {
      const Index lo = to_index(item.substr(0, dash)), hi = to_index(item.substr(dash + 1));
      if (hi < lo) throw Error(ErrorKind::kInvalidInput, flag + ": empty range " + item);
      for (Index r = lo; r <= hi; ++r) out.push_back(r);
    }
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  return out;
}

inline ExpFamily family_arg(const std::string& text, const char* flag) {
  try {
    return parse_family(text);
  } catch (const Error& e) {
    throw e.with_context(flag);
  }
}

inline FitOptions fit_options(const RunConfig& c) {
  FitOptions o;
  o.eps = c.eps;
  o.t_max = c.t_max;
  o.soc.gamma = c.gamma;
  o.intercept = c.intercept;
  require(c.gamma > 0.0, ErrorKind::kInvalidInput, "--gamma: must be > 0");
  require(c.t_max >= 1, ErrorKind::kInvalidInput, "--t-max: must be >= 1");
  return o;
}

inline SimScenario scenario_for(int setting, std::uint64_t seed, bool noiseless) {
  SimScenario s = SimScenario::setting(setting, seed);
  s.noiseless = noiseless;
  return s;
}

/// Seed of replicate `rep` of `setting` under a base seed.
inline std::uint64_t replicate_seed(std::uint64_t base, int setting, int rep) {
  return mix_seed(mix_seed(base, static_cast<std::uint64_t>(setting)),
                  static_cast<std::uint64_t>(rep));
}

inline std::string trace_csv(const FitTrace& tr) {
  std::string s = "iter,nll,nll_loadings,nll_z,nll_u,max_residual\n";
  const auto f = io::format_double;
  s += "0," + f(tr.initial_nll) + ",NA,NA,NA," + f(tr.initial_residual) + "\n";
  for (std::size_t t = 0; t < tr.iterations.size(); ++t) {
    const FitIteration& it = tr.iterations[t];
    s += std::to_string(t + 1) + "," + f(it.nll_rotation) + "," + f(it.nll_loadings) + "," +
         f(it.nll_z) + "," + f(it.nll_u) + "," + f(it.max_residual) + "\n";
  }
  return s;
}

inline int cmd_simulate(const RunConfig& c, std::ostream& out) {
  require(c.reps >= 0, ErrorKind::kInvalidInput, "--reps: must be >= 0");
  require(c.settings.size() == 1, ErrorKind::kInvalidInput,
          "--setting: simulate takes exactly one setting");
  fs::create_directories(c.out);
  for (int i = 0; i < c.reps; ++i) {
    const SimScenario scn = scenario_for(c.settings.front(), replicate_seed(c.seed, c.settings.front(), i), c.noiseless);
    const SimTruth truth = simulate(scn);
    const fs::path dir = c.out / ("rep_" + std::to_string(i));
    io::write_csv(dir / "x1.csv", truth.x1);
    io::write_csv(dir / "x2.csv", truth.x2);
    io::write_json(dir / "truth.json", io::model_to_json(truth.model));
    io::write_json(dir / "scenario.json", io::scenario_to_json(scn));
  }
  out << "wrote " << c.reps << " replicate(s) to " << c.out.string() << "\n";
  return kExitOk;
}

inline int cmd_fit(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require(!c.x1.empty() && !c.x2.empty(), ErrorKind::kInvalidInput, "--x1/--x2: both inputs are required");
  const ExpFamily f1 = family_arg(c.family1, "--family1");
  const ExpFamily f2 = family_arg(c.family2, "--family2");
  const MatrixXd x1 = io::read_csv(c.x1);
  const MatrixXd x2 = io::read_csv(c.x2);
  std::array<Index, 3> r{};
  if (c.ranks) {
    r = *c.ranks;
  } else {
    require(!c.rank_json.empty(), ErrorKind::kInvalidInput,
            "--ranks: required unless --rank-json is given");
    const RankEstimate est = io::rank_from_json(io::read_json(c.rank_json));
    r = {est.r0, est.r1, est.r2};
  }
  const FitResult res = fit_ecca(x1, x2, f1, f2, r[0], r[1], r[2], fit_options(c));
  io::write_json(c.out / "model.json", io::model_to_json(res.model));
  io::write_text(c.out / "trace.csv", trace_csv(res.trace));
  for (const auto& w : res.trace.warnings) err << "warning: " << w << "\n";
  out << "nll " << io::format_double(res.trace.final_nll()) << " after "
      << res.trace.iterations.size() << " iteration(s)"
      << (res.trace.converged ? "" : " (t_max reached)") << "\n";
  return res.trace.converged ? kExitOk : kExitMaxIter;
}

inline std::vector<Index> default_grid(Index n, Index p) {
  std::vector<Index> g;
  for (Index r = 1; r <= std::min<Index>({10, n - 1, p}); ++r) g.push_back(r);
  return g;
}

inline int cmd_rank(const RunConfig& c, std::ostream& out) {
  require(!c.x1.empty() && !c.x2.empty(), ErrorKind::kInvalidInput, "--x1/--x2: both inputs are required");
  const ExpFamily f1 = family_arg(c.family1, "--family1");
  const ExpFamily f2 = family_arg(c.family2, "--family2");
  const MatrixXd x1 = io::read_csv(c.x1);
  const MatrixXd x2 = io::read_csv(c.x2);
  require(x1.rows() == x2.rows(), ErrorKind::kInvalidInput, "--x2: row count differs from --x1");
  const auto g1 = c.grid.empty() ? default_grid(x1.rows(), x1.cols()) : c.grid;
  const auto g2 = c.grid.empty() ? default_grid(x2.rows(), x2.cols()) : c.grid;
  const RankEstimate est = estimate_ranks(x1, x2, f1, f2, g1, g2, c.folds, c.seed);
  io::write_json(c.out / "rank.json", io::rank_to_json(est));
  out << "r0=" << est.r0 << " r1=" << est.r1 << " r2=" << est.r2 << "\n";
  return kExitOk;
}

inline int cmd_evaluate(const RunConfig& c, std::ostream& out) {
  require(!c.model.empty() && !c.truth.empty(), ErrorKind::kInvalidInput,
          "--model/--truth: both model files are required");
  const EccaModel fitted = io::model_from_json(io::read_json(c.model));
  const EccaModel truth = io::model_from_json(io::read_json(c.truth));
  const EvalReport rep = evaluate(fitted, truth);
  std::string csv = "view,relative_error,chordal_distance\n";
  for (int k = 0; k < 2; ++k)
    csv += std::to_string(k + 1) + "," + io::format_double(rep.relative_error[k]) + "," +
           io::format_double(rep.chordal_distance[k]) + "\n";
  io::write_text(c.out / "eval.csv", csv);
  out << csv;
  return kExitOk;
}

/// simulate -> fit (true ranks) -> evaluate for every setting and replicate.
/// Rows are ordered by (setting, rep, view); failures become status rows.
inline int cmd_bench(const RunConfig& c, std::ostream& out) {
  require(c.reps >= 0, ErrorKind::kInvalidInput, "--reps: must be >= 0");
  const FitOptions opts = fit_options(c);
  std::string csv =
      "setting,rep,view,relative_error,chordal_distance,nll_final,converged,seconds,status\n";
  std::string timing = "setting,rep,seconds\n";
  int failures = 0;
  for (int setting : c.settings) {
    require(setting >= 1 && setting <= 3, ErrorKind::kInvalidInput, "--setting: must be 1, 2 or 3");
    for (int rep = 0; rep < c.reps; ++rep) {
      const std::string head = std::to_string(setting) + "," + std::to_string(rep) + ",";
      const auto start = std::chrono::steady_clock::now();
      try {
        const SimScenario scn = scenario_for(setting, replicate_seed(c.seed, setting, rep), c.noiseless);
        const SimTruth truth = simulate(scn);
        const FitResult res =
            fit_ecca(truth.x1, truth.x2, scn.fam1, scn.fam2, scn.r0, scn.r1, scn.r2, opts);
        const EvalReport ev = evaluate(res.model, truth.model, setting, rep);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        timing += head + io::format_double(secs) + "\n";
        for (int k = 0; k < 2; ++k) {
          csv += head + std::to_string(k + 1) + "," + io::format_double(ev.relative_error[k]) +
                 "," + io::format_double(ev.chordal_distance[k]) + "," +
                 io::format_double(res.trace.final_nll()) + "," +
                 (res.trace.converged ? "1" : "0") + "," +
                 (c.timing ? io::format_double(secs) : std::string("NA")) + ",ok\n";
        }
      } catch (const std::exception& e) {
        ++failures;
        std::string msg = e.what();
        for (char& ch : msg)
          if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
        for (int k = 0; k < 2; ++k)
          csv += head + std::to_string(k + 1) + ",NA,NA,NA,0,NA,error: " + msg + "\n";
      }
    }
  }
  io::write_text(c.out / "results.csv", csv);
  if (c.timing) io::write_text(c.out / "timing.csv", timing);
  out << "wrote " << (c.out / "results.csv").string() << " (" << failures << " failed replicate(s))\n";
  return kExitOk;
}

/// Dispatches one subcommand; errors are reported on `err` with exit code 1.
inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    if (c.command == "simulate") return cmd_simulate(c, out);
    if (c.command == "fit") return cmd_fit(c, out, err);
    if (c.command == "rank") return cmd_rank(c, out);
    if (c.command == "evaluate") return cmd_evaluate(c, out);
    if (c.command == "bench") return cmd_bench(c, out);
    throw Error(ErrorKind::kInvalidInput, "unknown command '" + c.command + "'");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace ecca::cli
