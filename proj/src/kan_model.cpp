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

#include "hekan/kan_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "hekan/error.hpp"
#include "hekan/poly_approx.hpp"

namespace hekan::kan {

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double phi(double x, double w_b, double w_s, std::span<const double> spline_coeffs, std::span<const double> knots,
           int k) {
  const auto basis = bspline::bspline_basis_plain(x, knots, k);
  if (spline_coeffs.size() != basis.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(spline_coeffs.size()) + " coefficients for " +
                                                std::to_string(basis.size()) + " basis functions");
  }
  double spline = 0.0;
  for (std::size_t m = 0; m < basis.size(); ++m) spline += spline_coeffs[m] * basis[m];
  return w_b * silu(x) + w_s * spline;
}

double KanLayer::spline(std::size_t o, std::size_t i, int m) const {
  return w_prime(static_cast<Eigen::Index>(o),
                 static_cast<Eigen::Index>(i * static_cast<std::size_t>(g() + k()) + static_cast<std::size_t>(m)));
}

void KanLayer::validate() const {
  const auto cols = static_cast<Eigen::Index>(n_i() * static_cast<std::size_t>(grid.basis_count()));
  if (static_cast<std::size_t>(w_b.cols()) != n_i()) {
    throw Error(ErrorCode::kDimensionMismatch, "W_b has " + std::to_string(w_b.cols()) + " columns, grid has " +
                                                   std::to_string(n_i()) + " rows");
  }
  if (w_b.rows() < 1) throw Error(ErrorCode::kDimensionMismatch, "layer has no outputs");
  if (w_prime.rows() != w_b.rows() || w_prime.cols() != cols) {
    throw Error(ErrorCode::kDimensionMismatch, "spline tensor is " + std::to_string(w_prime.rows()) + " x " +
                                                   std::to_string(w_prime.cols()) + ", expected " +
                                                   std::to_string(w_b.rows()) + " x " + std::to_string(cols));
  }
}

void KanModel::validate() const {
  if (layers.empty()) throw Error(ErrorCode::kDimensionMismatch, "model has no layers");
  if (layers.front().n_i() != input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "first layer takes " + std::to_string(layers.front().n_i()) +
                                                   " inputs, input shape gives " + std::to_string(input_dim()));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].validate();
    if (l > 0 && layers[l].n_i() != layers[l - 1].n_o()) {
      throw Error(ErrorCode::kDimensionMismatch, "layer " + std::to_string(l) + " takes " +
                                                     std::to_string(layers[l].n_i()) + " inputs, previous layer emits " +
                                                     std::to_string(layers[l - 1].n_o()));
    }
  }
}

std::vector<double> layer_forward_plain(const KanLayer& layer, std::span<const double> x, ForwardMode mode,
                                        const bspline::Comparator& comparator) {
  if (x.size() != layer.n_i()) {
    throw Error(ErrorCode::kDimensionMismatch, "input has " + std::to_string(x.size()) + " entries, layer takes " +
                                                   std::to_string(layer.n_i()));
  }
  const std::size_t basis_count = static_cast<std::size_t>(layer.grid.basis_count());
  Eigen::VectorXd act(static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXd basis(static_cast<Eigen::Index>(x.size() * basis_count));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto knots = layer.grid.row(i);
    std::vector<double> b;
    if (mode == ForwardMode::kExact) {
      act[static_cast<Eigen::Index>(i)] = silu(x[i]);
      b = bspline::bspline_basis_plain(x[i], knots, layer.k());
    } else {
      act[static_cast<Eigen::Index>(i)] = approx::evaluate_scheduled(layer.silu_poly, x[i]);
      b = bspline::bspline_basis_mirrored(x[i], knots, layer.k(), comparator, layer.grid.bound(),
                                               bspline::comparator_scale(layer.grid));
    }
    for (std::size_t m = 0; m < basis_count; ++m) basis[static_cast<Eigen::Index>(i * basis_count + m)] = b[m];
  }
  const Eigen::VectorXd y = layer.w_b * act + layer.w_prime * basis;
  return {y.begin(), y.end()};
}

std::vector<double> model_forward_plain(const KanModel& model, std::span<const double> x, ForwardMode mode,
                                        const bspline::Comparator& comparator) {
  if (x.empty()) throw Error(ErrorCode::kDimensionMismatch, "empty input");
  if (model.layers.empty()) throw Error(ErrorCode::kDimensionMismatch, "model has no layers");
  std::vector<double> v(x.begin(), x.end());
  for (const auto& layer : model.layers) v = layer_forward_plain(layer, v, mode, comparator);
  return v;
}

void Dataset::validate() const {
  if (inputs.size() != targets.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(inputs.size()) + " inputs but " +
                                                std::to_string(targets.size()) + " targets");
  }
  for (std::size_t s = 1; s < inputs.size(); ++s) {
    if (inputs[s].size() != inputs[0].size() || targets[s].size() != targets[0].size()) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged dataset at row " + std::to_string(s));
    }
  }
}

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    if (first == std::string::npos) return false;
    const auto last = cell.find_last_not_of(" \t\r");
    const std::string trimmed = cell.substr(first, last - first + 1);
    std::size_t used = 0;
    try {
      out.push_back(std::stod(trimmed, &used));
    } catch (const std::exception&) {
      return false;
    }
    if (used != trimmed.size()) return false;
  }
  return !out.empty();
}

}  // namespace

Dataset load_dataset_csv(const std::string& path, std::size_t n_inputs) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kCorruptFile, "cannot open " + path);
  Dataset data;
  std::string line;
  std::vector<double> row;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!parse_row(line, row)) {
      if (line_no == 1) continue;
      throw Error(ErrorCode::kCorruptFile, path + ":" + std::to_string(line_no) + ": not a numeric row");
    }
    if (row.size() < n_inputs) {
      throw Error(ErrorCode::kDimensionMismatch, path + ":" + std::to_string(line_no) + ": " +
                                                     std::to_string(row.size()) + " columns, need at least " +
                                                     std::to_string(n_inputs));
    }
    const auto split = row.begin() + static_cast<std::ptrdiff_t>(n_inputs);
    data.inputs.emplace_back(row.begin(), split);
    data.targets.emplace_back(split, row.end());
  }
  data.validate();
  return data;
}

void save_dataset_csv(const Dataset& data, const std::string& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  out.precision(17);
  for (std::size_t s = 0; s < data.size(); ++s) {
    bool first = true;
    for (const auto* v : {&data.inputs[s], &data.targets[s]}) {
      for (double x : *v) {
        out << (first ? "" : ",") << x;
        first = false;
      }
    }
    out << '\n';
  }
}

FitResult fit_layer_ls(const Dataset& data, std::size_t n_o, const bspline::GridMatrix& grid,
                       const FitOptions& options) {
  data.validate();
  if (data.size() == 0) throw Error(ErrorCode::kEmptySamples, "empty dataset");
  if (!(options.ridge >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "ridge must be non-negative");
  const std::size_t n_i = grid.n_i();
  if (data.inputs[0].size() != n_i) {
    throw Error(ErrorCode::kDimensionMismatch, "dataset has " + std::to_string(data.inputs[0].size()) +
                                                   " inputs, grid has " + std::to_string(n_i) + " rows");
  }
  if (data.targets[0].size() != n_o) {
    throw Error(ErrorCode::kDimensionMismatch, "dataset has " + std::to_string(data.targets[0].size()) +
                                                   " targets, layer has " + std::to_string(n_o) + " outputs");
  }
  const int basis_count = grid.basis_count();
  const std::size_t n_spline = n_i * static_cast<std::size_t>(basis_count);
  const bool fitted = options.w_b_mode == BaseWeightMode::kFitted;
  const std::size_t n_cols = n_spline + (fitted ? n_i : 0);
  const std::size_t n = data.size();
  const std::size_t n_ridge = options.ridge > 0.0 ? n_spline : 0;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + n_ridge), static_cast<Eigen::Index>(n_cols));
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + n_ridge), static_cast<Eigen::Index>(n_o));
  std::vector<double> pooled;
  pooled.reserve(n * n_i);
  for (std::size_t s = 0; s < n; ++s) {
    const auto r = static_cast<Eigen::Index>(s);
    double silu_sum = 0.0;
    for (std::size_t i = 0; i < n_i; ++i) {
      const double x = data.inputs[s][i];
      const auto knots = grid.row(i);
      if (x < knots.front() || x > knots.back()) {
        throw Error(ErrorCode::kInputOutOfRange, "sample " + std::to_string(s) + " input " + std::to_string(i) +
                                                     " = " + std::to_string(x) + " outside the grid span");
      }
      pooled.push_back(x);
      const auto b = bspline::bspline_basis_plain(x, knots, grid.k());
      for (int m = 0; m < basis_count; ++m)
        a(r, static_cast<Eigen::Index>(i * static_cast<std::size_t>(basis_count) + static_cast<std::size_t>(m))) = b[static_cast<std::size_t>(m)];
      if (fitted) a(r, static_cast<Eigen::Index>(n_spline + i)) = silu(x);
      silu_sum += silu(x);
    }
    for (std::size_t o = 0; o < n_o; ++o)
      y(r, static_cast<Eigen::Index>(o)) = data.targets[s][o] - (fitted ? 0.0 : silu_sum);
  }
  const double ridge_row = std::sqrt(options.ridge);
  for (std::size_t c = 0; c < n_ridge; ++c) a(static_cast<Eigen::Index>(n + c), static_cast<Eigen::Index>(c)) = ridge_row;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (static_cast<std::size_t>(qr.rank()) < n_cols) {
    throw Error(ErrorCode::kSingularSystem, "design matrix has rank " + std::to_string(qr.rank()) + " of " +
                                                std::to_string(n_cols) + "; the grid is too fine for the data");
  }
  const Eigen::MatrixXd coef = qr.solve(y);

  KanLayer layer{grid, Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n_o), static_cast<Eigen::Index>(n_i)),
                 coef.topRows(static_cast<Eigen::Index>(n_spline)).transpose(), approx::Polynomial{}, {}};
  if (fitted) layer.w_b = coef.bottomRows(static_cast<Eigen::Index>(n_i)).transpose();

  const Eigen::MatrixXd resid = a.topRows(static_cast<Eigen::Index>(n)) * coef - y.topRows(static_cast<Eigen::Index>(n));
  const double train_rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(n * n_o));

  const double lo = grid.knots().minCoeff();
  const double hi = grid.knots().maxCoeff();
  approx::ApproxRange range = approx::estimate_range(pooled, lo, hi);
  layer.act_stats = {range.mu, range.sigma};
  approx::WeightScheme weights = approx::WeightScheme::around(range);
  if (range.degenerate) {
    range.lo = lo;
    range.hi = hi;
    weights = approx::WeightScheme::uniform();
  }
  layer.silu_poly = approx::fit_weighted_ls(silu, range, options.silu_degree, weights);
  return {std::move(layer), train_rmse};
}

KanModel random_model(const std::vector<std::size_t>& widths, int g, int k, std::uint64_t seed,
                      const RandomModelOptions& options) {
  if (widths.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least input and output widths");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double silu_max = std::max(std::abs(silu(options.lo)), std::abs(silu(options.hi)));
  KanModel model;
  model.input_shape = {1, 1, widths.front()};
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto n_i = static_cast<Eigen::Index>(widths[l]);
    const auto n_o = static_cast<Eigen::Index>(widths[l + 1]);
    auto grid = bspline::GridMatrix::uniform(widths[l], options.lo, options.hi, g, k);
    // Each output is bounded by 0.45 (|w_b| silu_max + |S|) summed over inputs.
    const double scale = 0.45 / (static_cast<double>(n_i) * std::max(1.0, silu_max));
    Eigen::MatrixXd w_b(n_o, n_i);
    Eigen::MatrixXd w_prime(n_o, n_i * (g + k));
    for (Eigen::Index o = 0; o < n_o; ++o) {
      for (Eigen::Index i = 0; i < n_i; ++i) w_b(o, i) = scale * u(rng);
      for (Eigen::Index c = 0; c < w_prime.cols(); ++c) w_prime(o, c) = scale * u(rng);
    }
    const approx::ApproxRange range = approx::range_from_moments(0.0, 0.5, grid.knots().minCoeff(),
                                                                 grid.knots().maxCoeff());
    KanLayer layer{std::move(grid), std::move(w_b), std::move(w_prime),
                   approx::fit_weighted_ls(silu, range, options.silu_degree, approx::WeightScheme::around(range)),
                   {range.mu, range.sigma}};
    model.layers.push_back(std::move(layer));
  }
  return model;
}

}  // namespace hekan::kan
