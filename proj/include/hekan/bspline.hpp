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

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hekan/he_core.hpp"
#include "hekan/poly_approx.hpp"

namespace hekan::bspline {

/// Knot matrix G: one row of g + 2k + 1 non-decreasing knots per input feature.
class GridMatrix {
 public:
  struct Uniform {
    double lo;
    double hi;
  };

  /// bound <= 0 selects default_bound(knots).
  GridMatrix(Eigen::MatrixXd knots, int g, int k, double bound = 0.0);

  /// Every row: lo + (j - k) * (hi - lo) / g for j = 0 .. g + 2k.
  static GridMatrix uniform(std::size_t n_i, double lo, double hi, int g, int k, double bound = 0.0);

  /// 1.2 * max(|knot|, input_abs_max).
  static double default_bound(const Eigen::MatrixXd& knots, double input_abs_max = 0.0);

  const Eigen::MatrixXd& knots() const { return knots_; }
  std::size_t n_i() const { return static_cast<std::size_t>(knots_.rows()); }
  int g() const { return g_; }
  int k() const { return k_; }
  double bound() const { return bound_; }
  int interval_count() const { return g_ + 2 * k_; }
  int basis_count() const { return g_ + k_; }
  std::vector<double> row(std::size_t i) const;
  bool strictly_increasing() const;
  const std::optional<Uniform>& uniform_spec() const { return uniform_; }

 private:
  Eigen::MatrixXd knots_;
  int g_;
  int k_;
  double bound_;
  std::optional<Uniform> uniform_;
};

/// Columns l .. r-1 (1-based) of G concatenated: slot (j - l) * n_i + i = G[i][j].
std::vector<double> col_tile(const GridMatrix& grid, int l, int r);

struct PackedInput {
  he::CipherText ct;  // scale * x repeated `copies` times
  std::size_t n_i = 0;
  int copies = 0;
  double scale = 1.0;
};

/// Slots n_i * (g + k), ColTile order: slot j * n_i + i = B_{j,k}(x_i). Zero beyond.
struct BasisVector {
  he::CipherText ct;
  std::size_t n_i = 0;
  int basis_count = 0;
  std::size_t length() const { return n_i * static_cast<std::size_t>(basis_count); }
};

/// Throws kPackingOverflow unless x fits g + 2k times, including the
/// power-of-two overshoot of the doubling schedule.
void check_packing(std::size_t n_i, int g, int k, std::size_t slot_count);

/// Fast repeat packing: one mask multiply, ceil(log2(g + 2k)) rotations. The
/// mask carries `scale`, so the copies hold scale * x at no extra level.
PackedInput repeat_pack(he::Evaluator& ev, const he::CipherText& ct, int g, int k, std::size_t n_i,
                        double scale = 1.0);
/// Reference packing with g + 2k - 1 rotations.
PackedInput repeat_pack_naive(he::Evaluator& ev, const he::CipherText& ct, int g, int k, std::size_t n_i,
                              double scale = 1.0);

/// Packing scale that puts every comparator input of `grid` in [-1, 1].
inline double comparator_scale(const GridMatrix& grid) { return 1.0 / (2.0 * grid.bound()); }

enum class ComparatorMode { kExact, kComposite };

/// Comparison used for the order-0 indicators. Exact mode is a simulator
/// shortcut with the same dataflow and level cost as the composite sign.
struct Comparator {
  ComparatorMode mode = ComparatorMode::kComposite;
  const approx::CompositeSign* sign = nullptr;

  static Comparator exact(const approx::CompositeSign& cs = approx::default_composite_sign()) {
    return {ComparatorMode::kExact, &cs};
  }
  static Comparator composite(const approx::CompositeSign& cs = approx::default_composite_sign()) {
    return {ComparatorMode::kComposite, &cs};
  }
  int depth() const { return sign->depth(); }
};

/// 1 for d > 0, 0 for d < 0, 1/2 at 0.
double exact_step(double d);

struct BasisDiagnostics {
  /// Active comparator inputs closer than delta to a knot (Cleartext only).
  std::size_t near_knot = 0;
};

/// Levels bspline_basis_he consumes after packing.
int basis_depth(const Comparator& comparator, int k);

/// Encrypted B-spline basis over a repeat-packed input.
BasisVector bspline_basis_he(he::Evaluator& ev, const PackedInput& xp, const GridMatrix& grid,
                             const Comparator& comparator, BasisDiagnostics* diagnostics = nullptr);

/// Cox-de Boor values B_{m,k}(x), m = 0 .. knots.size() - k - 2. Half-open
/// order-0 intervals; 0/0 := 0 at repeated knots.
std::vector<double> bspline_basis_plain(double x, std::span<const double> knots, int k);

/// Scalar emulation of bspline_basis_he for one input and its knot row,
/// performing the same floating-point operations in the same order.
std::vector<double> bspline_basis_mirrored(double x, std::span<const double> knots, int k,
                                           const Comparator& comparator, double bound, double scale = 1.0);

/// Column-major to row-major reordering of an n_r x n_c matrix.
class PermutationSpec {
 public:
  PermutationSpec(std::size_t n_r, std::size_t n_c, std::vector<std::size_t> target_of_source);

  std::size_t n_r() const { return n_r_; }
  std::size_t n_c() const { return n_c_; }
  std::size_t size() const { return target_.size(); }
  /// 0-based target index of 0-based source index.
  std::size_t target(std::size_t source) const { return target_[source]; }
  /// 0-based source index feeding 0-based target index.
  std::size_t source(std::size_t target) const { return source_[target]; }

  /// (P v)[target(s)] = v[s].
  std::vector<double> apply(std::span<const double> v) const;
  Eigen::MatrixXd to_matrix() const;
  PermutationSpec inverse() const;

 private:
  std::size_t n_r_;
  std::size_t n_c_;
  std::vector<std::size_t> target_;
  std::vector<std::size_t> source_;
};

PermutationSpec gen_permutation(std::size_t n_r, std::size_t n_c);

/// W_f = W' * P.
Eigen::MatrixXd fuse_weights(const Eigen::MatrixXd& w_prime, const PermutationSpec& p);

}  // namespace hekan::bspline
