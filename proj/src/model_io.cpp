/*
 * Copyright 2026 The hekan Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <fstream>

#include "hekan/error.hpp"
#include "hekan/kan_model.hpp"

namespace hekan::kan {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::kSchemaMismatch, where + ": missing '" + key + "'");
  return j.at(key);
}

Eigen::MatrixXd matrix_from_json(const json& j, std::size_t rows, std::size_t cols, const std::string& where) {
  if (!j.is_array() || j.size() != rows) {
    throw Error(ErrorCode::kSchemaMismatch, where + ": expected " + std::to_string(rows) + " rows");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw Error(ErrorCode::kSchemaMismatch, where + ": row " + std::to_string(r) + " needs " +
                                                  std::to_string(cols) + " entries");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw Error(ErrorCode::kSchemaMismatch, where + ": non-numeric entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

json layer_to_json(const KanLayer& layer) {
  const auto n_i = static_cast<Eigen::Index>(layer.n_i());
  const Eigen::Index bc = layer.grid.basis_count();
  json s = json::array();
  for (Eigen::Index o = 0; o < layer.w_prime.rows(); ++o) {
    json per_input = json::array();
    for (Eigen::Index i = 0; i < n_i; ++i) {
      json coeffs = json::array();
      for (Eigen::Index m = 0; m < bc; ++m) coeffs.push_back(layer.w_prime(o, i * bc + m));
      per_input.push_back(std::move(coeffs));
    }
    s.push_back(std::move(per_input));
  }
  json j{{"n_i", layer.n_i()},
         {"n_o", layer.n_o()},
         {"g", layer.g()},
         {"k", layer.k()},
         {"R", layer.grid.bound()},
         {"W_b", matrix_to_json(layer.w_b)},
         {"S", std::move(s)},
         {"silu_poly", layer.silu_poly.to_json()},
         {"act_stats", {{"mu", layer.act_stats.mu}, {"sigma", layer.act_stats.sigma}}}};
  if (const auto& u = layer.grid.uniform_spec()) {
    j["uniform_grid"] = {{"lo", u->lo}, {"hi", u->hi}};
  } else {
    j["grid"] = matrix_to_json(layer.grid.knots());
  }
  return j;
}

KanLayer layer_from_json(const json& j, const std::string& where) {
  const auto n_i = field(j, "n_i", where).get<std::size_t>();
  const auto n_o = field(j, "n_o", where).get<std::size_t>();
  const int g = field(j, "g", where).get<int>();
  const int k = field(j, "k", where).get<int>();
  const double bound = j.contains("R") ? j.at("R").get<double>() : 0.0;
  if (n_i == 0 || n_o == 0 || g < 1 || k < 0) throw Error(ErrorCode::kSchemaMismatch, where + ": bad dimensions");
  const auto bc = static_cast<std::size_t>(g + k);

  std::optional<bspline::GridMatrix> grid;
  const json* uniform = j.contains("uniform_grid") ? &j.at("uniform_grid") : nullptr;
  if (j.contains("grid") && j.at("grid").is_object()) uniform = &field(j.at("grid"), "uniform", where + ".grid");
  if (uniform != nullptr) {
    const json& u = *uniform;
    if (u.contains("g") && u.at("g").get<int>() != g) throw Error(ErrorCode::kSchemaMismatch, where + ": grid g differs");
    if (u.contains("k") && u.at("k").get<int>() != k) throw Error(ErrorCode::kSchemaMismatch, where + ": grid k differs");
    grid.emplace(bspline::GridMatrix::uniform(n_i, field(u, "lo", where).get<double>(),
                                              field(u, "hi", where).get<double>(), g, k, bound));
  } else if (j.contains("grid")) {
    grid.emplace(matrix_from_json(j.at("grid"), n_i, static_cast<std::size_t>(g + 2 * k + 1), where + ".grid"), g, k,
                 bound);
  } else {
    throw Error(ErrorCode::kSchemaMismatch, where + ": missing 'grid' or 'uniform_grid'");
  }
  if (!grid->strictly_increasing()) throw Error(ErrorCode::kSchemaMismatch, where + ": repeated knots");

  Eigen::MatrixXd w_b = matrix_from_json(field(j, "W_b", where), n_o, n_i, where + ".W_b");
  Eigen::MatrixXd w_prime(static_cast<Eigen::Index>(n_o), static_cast<Eigen::Index>(n_i * bc));
  const json& s = field(j, "S", where);
  if (s.is_object()) {
    const Eigen::MatrixXd w_s = matrix_from_json(field(s, "W_s", where), n_o, n_i, where + ".S.W_s");
    const Eigen::MatrixXd c = matrix_from_json(field(s, "C", where), n_i, bc, where + ".S.C");
    for (Eigen::Index o = 0; o < w_prime.rows(); ++o)
      for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index m = 0; m < c.cols(); ++m) w_prime(o, i * c.cols() + m) = w_s(o, i) * c(i, m);
  } else {
    if (!s.is_array() || s.size() != n_o) throw Error(ErrorCode::kSchemaMismatch, where + ".S: expected n_o blocks");
    for (std::size_t o = 0; o < n_o; ++o) {
      const Eigen::MatrixXd block = matrix_from_json(s[o], n_i, bc, where + ".S[" + std::to_string(o) + "]");
      for (Eigen::Index i = 0; i < block.rows(); ++i)
        for (Eigen::Index m = 0; m < block.cols(); ++m)
          w_prime(static_cast<Eigen::Index>(o), i * block.cols() + m) = block(i, m);
    }
  }

  KanLayer layer{std::move(*grid), std::move(w_b), std::move(w_prime),
                 approx::Polynomial::from_json(field(j, "silu_poly", where)), {}};
  if (j.contains("act_stats")) {
    const json& a = j.at("act_stats");
    layer.act_stats = {field(a, "mu", where).get<double>(), field(a, "sigma", where).get<double>()};
  }
  return layer;
}

}  // namespace

json model_to_json(const KanModel& model) {
  json layers = json::array();
  for (const auto& l : model.layers) layers.push_back(layer_to_json(l));
  return {{"version", kModelSchemaVersion}, {"input_shape", model.input_shape}, {"layers", std::move(layers)}};
}

KanModel model_from_json(const json& j) {
  try {
    const int version = field(j, "version", "model").get<int>();
    if (version != kModelSchemaVersion) {
      throw Error(ErrorCode::kSchemaMismatch, "unsupported model version " + std::to_string(version));
    }
    KanModel model;
    const json& shape = field(j, "input_shape", "model");
    if (!shape.is_array() || shape.size() != 3) throw Error(ErrorCode::kSchemaMismatch, "input_shape needs 3 entries");
    model.input_shape = shape.get<std::array<std::size_t, 3>>();
    const json& layers = field(j, "layers", "model");
    if (!layers.is_array() || layers.empty()) throw Error(ErrorCode::kSchemaMismatch, "model needs layers");
    for (std::size_t l = 0; l < layers.size(); ++l)
      model.layers.push_back(layer_from_json(layers[l], "layers[" + std::to_string(l) + "]"));
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSchemaMismatch) throw;
    throw Error(ErrorCode::kSchemaMismatch, e.what());
  }
}

void save_model(const KanModel& model, const std::string& path) {
  model.validate();
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  out << model_to_json(model).dump(1) << '\n';
}

KanModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kCorruptFile, "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kCorruptFile, path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace hekan::kan
