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

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ecca/errors.hpp"
#include "ecca/expfam.hpp"
#include "ecca/model.hpp"
#include "ecca/rank.hpp"
#include "ecca/simgen.hpp"

namespace ecca::io {

using nlohmann::json;

/// Shortest text that parses back to the same double; locale independent.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::kInvalidInput, where + ": cannot parse '" + std::string(s) + "'");
  return v;
}

/// Headerless comma-separated matrix, one row per line.
inline std::string matrix_to_csv(const MatrixXd& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline MatrixXd matrix_from_csv(const std::string& text, const std::string& name = "csv") {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++row;
    std::vector<double> vals;
    std::string_view rest(line);
    std::size_t col = 0;
    while (true) {
      const std::size_t comma = rest.find(',');
      ++col;
      vals.push_back(parse_double(rest.substr(0, comma), name + ": row " + std::to_string(row) +
                                                             ", column " + std::to_string(col)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && vals.size() != rows.front().size())
      throw Error(ErrorKind::kInvalidInput,
                  name + ": row " + std::to_string(row) + " has " + std::to_string(vals.size()) +
                      " fields, expected " + std::to_string(rows.front().size()));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw Error(ErrorKind::kInvalidInput, name + ": no data rows");
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

inline MatrixXd read_csv(const std::filesystem::path& path) {
  return matrix_from_csv(read_text(path), path.string());
}

inline void write_csv(const std::filesystem::path& path, const MatrixXd& m) {
  write_text(path, matrix_to_csv(m));
}

inline json matrix_to_json(const MatrixXd& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline MatrixXd matrix_from_json(const json& j, const std::string& name) {
  try {
    const Index r = j.at("rows").get<Index>(), c = j.at("cols").get<Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (r < 0 || c < 0 || static_cast<Index>(data.size()) != r * c)
      throw Error(ErrorKind::kInvalidInput, name + ": data length does not match rows x cols");
    return Eigen::Map<const MatrixXd>(data.data(), r, c);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, name + ": " + e.what());
  }
}

inline json model_to_json(const EccaModel& m) {
  json mats;
  for (int k = 0; k < 2; ++k) {
    const std::string s = std::to_string(k + 1);
    mats["mu" + s] = matrix_to_json(m.mu[k]);
    mats["U" + s] = matrix_to_json(m.u[k]);
    mats["V" + s] = matrix_to_json(m.v[k]);
    mats["Z" + s] = matrix_to_json(m.z[k]);
    mats["A" + s] = matrix_to_json(m.a[k]);
  }
  mats["lambda"] = matrix_to_json(m.lambda);
  return {{"dims", {{"n", m.n()}, {"p1", m.p(0)}, {"p2", m.p(1)}}},
          {"ranks", {{"r0", m.r0()}, {"r1", m.rank(0)}, {"r2", m.rank(1)}}},
          {"families", {m.fam[0].str(), m.fam[1].str()}},
          {"intercept", m.intercept},
          {"matrices", mats}};
}

inline EccaModel model_from_json(const json& j) {
  EccaModel m;
  try {
    const auto& mats = j.at("matrices");
    for (int k = 0; k < 2; ++k) {
      const std::string s = std::to_string(k + 1);
      m.mu[k] = matrix_from_json(mats.at("mu" + s), "mu" + s);
      m.u[k] = matrix_from_json(mats.at("U" + s), "U" + s);
      m.v[k] = matrix_from_json(mats.at("V" + s), "V" + s);
      m.z[k] = matrix_from_json(mats.at("Z" + s), "Z" + s);
      m.a[k] = matrix_from_json(mats.at("A" + s), "A" + s);
      m.fam[k] = parse_family(j.at("families").at(k).get<std::string>());
    }
    m.lambda = matrix_from_json(mats.at("lambda"), "lambda");
    m.intercept = j.value("intercept", true);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("model json: ") + e.what());
  }
  m.check_shapes();
  return m;
}

inline json scenario_to_json(const SimScenario& s) {
  return {{"n", s.n},
          {"p1", s.p1},
          {"p2", s.p2},
          {"r0", s.r0},
          {"r1", s.r1},
          {"r2", s.r2},
          {"lambda", std::vector<double>(s.lambda.data(), s.lambda.data() + s.lambda.size())},
          {"family1", s.fam1.str()},
          {"family2", s.fam2.str()},
          {"snr", s.snr},
          {"trials", s.trials},
          {"seed", s.seed},
          {"noiseless", s.noiseless},
          {"rng", "mt19937_64"}};
}

inline SimScenario scenario_from_json(const json& j) {
  SimScenario s;
  try {
    s.n = j.at("n").get<Index>();
    s.p1 = j.at("p1").get<Index>();
    s.p2 = j.at("p2").get<Index>();
    s.r0 = j.at("r0").get<Index>();
    s.r1 = j.at("r1").get<Index>();
    s.r2 = j.at("r2").get<Index>();
    const auto lam = j.at("lambda").get<std::vector<double>>();
    s.lambda = Eigen::Map<const VectorXd>(lam.data(), static_cast<Index>(lam.size()));
    s.fam1 = parse_family(j.at("family1").get<std::string>());
    s.fam2 = parse_family(j.at("family2").get<std::string>());
    s.snr = j.at("snr").get<double>();
    s.trials = j.at("trials").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.noiseless = j.value("noiseless", false);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("scenario json: ") + e.what());
  }
  s.validate();
  return s;
}

inline json rank_to_json(const RankEstimate& r) {
  json curves;
  for (int k = 0; k < 2; ++k) {
    json c = json::array();
    for (const auto& pt : r.cv_curves[k])
      c.push_back({{"rank", pt.rank}, {"heldout_nll", pt.heldout_nll}});
    curves["view" + std::to_string(k + 1)] = c;
  }
  return {{"r0", r.r0}, {"r1", r.r1}, {"r2", r.r2}, {"curves", curves},
          {"angles_deg", r.angles_deg}, {"split_index", r.split_index}};
}

inline RankEstimate rank_from_json(const json& j) {
  RankEstimate r;
  try {
    r.r0 = j.at("r0").get<Index>();
    r.r1 = j.at("r1").get<Index>();
    r.r2 = j.at("r2").get<Index>();
    r.angles_deg = j.value("angles_deg", std::vector<double>{});
    r.split_index = j.value("split_index", Index{0});
    if (j.contains("curves")) {
      for (int k = 0; k < 2; ++k) {
        const std::string key = "view" + std::to_string(k + 1);
        if (!j["curves"].contains(key)) continue;
        for (const auto& pt : j["curves"][key])
          r.cv_curves[k].push_back({pt.at("rank").get<Index>(), pt.at("heldout_nll").get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("rank json: ") + e.what());
  }
  return r;
}

inline json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace ecca::io
