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

// KAN layers and models in the clear: the reference forward pass, a linear
// least-squares fitter on fixed grids, and JSON/CSV I/O.

#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hekan/bspline.hpp"
#include "hekan/polynomial.hpp"

namespace hekan::kan {

double silu(double x);

/// Edge activation w_b * silu(x) + w_s * sum_m c_m B_{m,k}(x).
double phi(double x, double w_b, double w_s, std::span<const double> spline_coeffs,
           std::span<const double> knots, int k);

struct ActStats {
  double mu = 0.0;
  double sigma = 1.0;
};

struct KanLayer {
  bspline::GridMatrix grid;
  /// n_o x n_i base weights.
  Eigen::MatrixXd w_b;
  /// Spline tensor flattened to n_o x n_i(g+k): S[o, i, m] sits at (o, i(g+k) + m).
  Eigen::MatrixXd w_prime;
  approx::Polynomial silu_poly;
  ActStats act_stats;

  std::size_t n_i() const { return grid.n_i(); }
  std::size_t n_o() const { return static_cast<std::size_t>(w_b.rows()); }
  int g() const { return grid.g(); }
  int k() const { return grid.k(); }
  double spline(std::size_t o, std::size_t i, int m) const;

  /// Throws kDimensionMismatch on inconsistent shapes.
  void validate() const;
};

struct KanModel {
  std::vector<KanLayer> layers;
  std::array<std::size_t, 3> input_shape{1, 1, 1};  // h, w, c

  std::size_t input_dim() const { return input_shape[0] * input_shape[1] * input_shape[2]; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().n_o(); }
  void validate() const;
};

enum class ForwardMode {
  kExact,     // true silu, Cox-de Boor basis
  kMirrored,  // silu_poly and the comparator emulation of the encrypted pipeline
};

std::vector<double> layer_forward_plain(const KanLayer& layer, std::span<const double> x, ForwardMode mode,
                                        const bspline::Comparator& comparator = bspline::Comparator::composite());
std::vector<double> model_forward_plain(const KanModel& model, std::span<const double> x, ForwardMode mode,
                                        const bspline::Comparator& comparator = bspline::Comparator::composite());

struct Dataset {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;

  std::size_t size() const { return inputs.size(); }
  void validate() const;
};

/// One sample per row; the first n_inputs columns are inputs, the rest targets.
/// A non-numeric first line is treated as a header.
Dataset load_dataset_csv(const std::string& path, std::size_t n_inputs);
void save_dataset_csv(const Dataset& data, const std::string& path);

enum class BaseWeightMode { kFixed, kFitted };

struct FitOptions {
  BaseWeightMode w_b_mode = BaseWeightMode::kFitted;
  double ridge = 1e-8;
  int silu_degree = 10;
};

struct FitResult {
  KanLayer layer;
  double train_rmse = 0.0;
};

/// Least squares for S (and W_b when fitted) on features [B_{m,k}(x_i); silu(x_i)].
/// The ridge term applies to spline coefficients only; fixed mode pins W_b = 1.
FitResult fit_layer_ls(const Dataset& data, std::size_t n_o, const bspline::GridMatrix& grid,
                       const FitOptions& options = {});

struct RandomModelOptions {
  double lo = -1.0;  // uniform grid span
  double hi = 1.0;
  int silu_degree = 8;
};

/// Model with uniform grids and weights scaled so every layer maps [lo, hi]
/// into (-1, 1); widths = {n_1, ..., n_out}, input shape 1 x 1 x n_1.
KanModel random_model(const std::vector<std::size_t>& widths, int g, int k, std::uint64_t seed,
                      const RandomModelOptions& options = {});

nlohmann::json model_to_json(const KanModel& model);
KanModel model_from_json(const nlohmann::json& j);
void save_model(const KanModel& model, const std::string& path);
KanModel load_model(const std::string& path);

inline constexpr int kModelSchemaVersion = 1;

}  // namespace hekan::kan
