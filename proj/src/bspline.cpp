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

#include "hekan/bspline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "hekan/error.hpp"

namespace hekan::bspline {

GridMatrix::GridMatrix(Eigen::MatrixXd knots, int g, int k, double bound)
    : knots_(std::move(knots)), g_(g), k_(k), bound_(bound) {
  if (g_ < 1 || k_ < 0) throw Error(ErrorCode::kInvalidArgument, "grid needs g >= 1 and k >= 0");
  if (knots_.rows() < 1) throw Error(ErrorCode::kInvalidArgument, "grid has no rows");
  if (knots_.cols() != g_ + 2 * k_ + 1) {
    throw Error(ErrorCode::kDimensionMismatch, "grid has " + std::to_string(knots_.cols()) +
                                                   " knots per row, expected g + 2k + 1 = " +
                                                   std::to_string(g_ + 2 * k_ + 1));
  }
  for (Eigen::Index i = 0; i < knots_.rows(); ++i) {
    for (Eigen::Index j = 0; j < knots_.cols(); ++j) {
      if (!std::isfinite(knots_(i, j))) throw Error(ErrorCode::kInvalidArgument, "non-finite knot");
      if (j > 0 && knots_(i, j) < knots_(i, j - 1)) {
        throw Error(ErrorCode::kInvalidArgument, "knot row " + std::to_string(i) + " is decreasing");
      }
    }
  }
  if (bound_ <= 0.0) bound_ = default_bound(knots_);
  if (knots_.cwiseAbs().maxCoeff() > bound_) {
    throw Error(ErrorCode::kInvalidArgument, "knots exceed the bound R");
  }
}

GridMatrix GridMatrix::uniform(std::size_t n_i, double lo, double hi, int g, int k, double bound) {
  if (!(lo < hi)) throw Error(ErrorCode::kInvalidArgument, "uniform grid needs lo < hi");
  if (g < 1 || k < 0) throw Error(ErrorCode::kInvalidArgument, "grid needs g >= 1 and k >= 0");
  const double h = (hi - lo) / g;
  Eigen::MatrixXd knots(static_cast<Eigen::Index>(n_i), g + 2 * k + 1);
  for (Eigen::Index j = 0; j < knots.cols(); ++j) knots.col(j).setConstant(lo + (static_cast<double>(j) - k) * h);
  GridMatrix grid(std::move(knots), g, k, bound);
  grid.uniform_ = Uniform{lo, hi};
  return grid;
}

double GridMatrix::default_bound(const Eigen::MatrixXd& knots, double input_abs_max) {
  return 1.2 * std::max(knots.cwiseAbs().maxCoeff(), input_abs_max);
}

std::vector<double> GridMatrix::row(std::size_t i) const {
  const auto r = knots_.row(static_cast<Eigen::Index>(i));
  return {r.begin(), r.end()};
}

bool GridMatrix::strictly_increasing() const {
  for (Eigen::Index i = 0; i < knots_.rows(); ++i)
    for (Eigen::Index j = 1; j < knots_.cols(); ++j)
      if (!(knots_(i, j) > knots_(i, j - 1))) return false;
  return true;
}

std::vector<double> col_tile(const GridMatrix& grid, int l, int r) {
  const int cols = static_cast<int>(grid.knots().cols());
  if (l < 1 || l >= r || r > cols + 1) {
    throw Error(ErrorCode::kIndexOutOfRange, "col_tile(" + std::to_string(l) + ", " + std::to_string(r) +
                                                 ") on " + std::to_string(cols) + " columns");
  }
  const std::size_t n_i = grid.n_i();
  std::vector<double> out(n_i * static_cast<std::size_t>(r - l));
  for (int j = l; j < r; ++j)
    for (std::size_t i = 0; i < n_i; ++i)
      out[static_cast<std::size_t>(j - l) * n_i + i] = grid.knots()(static_cast<Eigen::Index>(i), j - 1);
  return out;
}

void check_packing(std::size_t n_i, int g, int k, std::size_t slot_count) {
  const int copies = g + 2 * k;
  if (n_i == 0 || copies < 1) throw Error(ErrorCode::kInvalidArgument, "nothing to pack");
  const std::size_t span = n_i * std::bit_ceil(static_cast<std::size_t>(copies));
  if (n_i * static_cast<std::size_t>(copies) > slot_count || span > slot_count) {
    throw Error(ErrorCode::kPackingOverflow,
                "n_i = " + std::to_string(n_i) + " repeated g + 2k = " + std::to_string(copies) +
                    " times (doubling span " + std::to_string(span) + ") exceeds " + std::to_string(slot_count) +
                    " slots");
  }
}

namespace {

he::PlainVector scaled_mask(const he::Evaluator& ev, std::size_t n, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::kInvalidArgument, "packing scale must be positive");
  std::vector<double> m(n, scale);
  return ev.encode(m);
}

std::vector<double> scaled(std::vector<double> v, double s) {
  if (s != 1.0)
    for (double& e : v) e *= s;
  return v;
}

}  // namespace

PackedInput repeat_pack(he::Evaluator& ev, const he::CipherText& ct, int g, int k, std::size_t n_i,
                        double scale) {
  check_packing(n_i, g, k, ev.slot_count());
  const int copies = g + 2 * k;
  he::CipherText x = ev.multiply(ct, scaled_mask(ev, n_i, scale));
  const int steps = std::bit_width(static_cast<unsigned>(copies - 1));  // ceil(log2(copies))
  for (int j = 1; j <= steps; ++j) {
    const long shift = static_cast<long>(n_i) << (j - 1);
    x = ev.add(ev.rotate(x, -shift), x);
  }
  return {std::move(x), n_i, copies, scale};
}

PackedInput repeat_pack_naive(he::Evaluator& ev, const he::CipherText& ct, int g, int k, std::size_t n_i,
                              double scale) {
  const int copies = g + 2 * k;
  if (n_i == 0 || copies < 1) throw Error(ErrorCode::kInvalidArgument, "nothing to pack");
  if (n_i * static_cast<std::size_t>(copies) > ev.slot_count()) {
    throw Error(ErrorCode::kPackingOverflow, "packed input exceeds slot count");
  }
  const he::CipherText x = ev.multiply(ct, scaled_mask(ev, n_i, scale));
  he::CipherText acc = x;
  for (int j = 1; j < copies; ++j) acc = ev.add(acc, ev.rotate(x, -static_cast<long>(n_i) * j));
  return {std::move(acc), n_i, copies, scale};
}

double exact_step(double d) {
  if (d > 0.0) return 1.0;
  if (d < 0.0) return 0.0;
  return 0.5;
}

int basis_depth(const Comparator& comparator, int k) { return comparator.depth() + std::max(k, 1); }

namespace {

// Plaintext factors of one recursion step, ColTile layout, zero-padded.
struct StepConstants {
  std::vector<double> t1, inv1, t3, inv2;
};

// Knots arrive multiplied by the packing scale; the reciprocals divide it out.
StepConstants step_constants(const GridMatrix& grid, int j, double scale) {
  const int r = grid.interval_count() + 1;
  StepConstants s;
  const auto t1 = col_tile(grid, 1, r - j);
  const auto t2 = col_tile(grid, j + 1, r);
  const auto t3 = col_tile(grid, j + 2, r + 1);
  const auto t4 = col_tile(grid, 2, r - j + 1);
  s.t1 = scaled(t1, scale);
  s.t3 = scaled(t3, scale);
  s.inv1.resize(t1.size());
  s.inv2.resize(t1.size());
  for (std::size_t q = 0; q < t1.size(); ++q) {
    s.inv1[q] = 1.0 / (t2[q] - t1[q]) / scale;
    s.inv2[q] = 1.0 / (t3[q] - t4[q]) / scale;
  }
  return s;
}

}  // namespace

BasisVector bspline_basis_he(he::Evaluator& ev, const PackedInput& xp, const GridMatrix& grid,
                             const Comparator& comparator, BasisDiagnostics* diagnostics) {
  const std::size_t n_i = grid.n_i();
  const int k = grid.k();
  if (xp.n_i != n_i || xp.copies != grid.interval_count()) {
    throw Error(ErrorCode::kDimensionMismatch, "packed input does not match the grid");
  }
  if (!grid.strictly_increasing()) {
    throw Error(ErrorCode::kInvalidArgument, "repeated knots are not supported on the encrypted path");
  }
  if (comparator.sign == nullptr) throw Error(ErrorCode::kInvalidArgument, "comparator without sign stages");
  const int need = basis_depth(comparator, k);
  if (xp.ct.level() < need) {
    throw Error(ErrorCode::kDepthExhausted, "B-spline basis needs " + std::to_string(need) +
                                                " levels, packed input has " + std::to_string(xp.ct.level()));
  }

  const int r = grid.interval_count() + 1;
  const double s = xp.scale;
  const auto g1 = ev.encode(scaled(col_tile(grid, 1, r), s));
  const auto g2 = ev.encode(scaled(col_tile(grid, 2, r + 1), s));
  const he::CipherText d1 = ev.sub(xp.ct, g1);
  const he::CipherText d2 = ev.sub(g2, xp.ct);

  const std::size_t active = n_i * static_cast<std::size_t>(grid.interval_count());
  const double residual = 1.0 / (2.0 * grid.bound() * s);
  const approx::CompositeSign cs = residual == 1.0 ? *comparator.sign : comparator.sign->scaled(residual);
  if (diagnostics != nullptr && ev.backend().exact()) {
    const double delta = cs.delta();
    for (const auto* d : {&d1, &d2})
      for (std::size_t q = 0; q < active; ++q)
        if (std::abs(d->slots()[q] * cs.input_scale()) < delta) ++diagnostics->near_knot;
  }

  auto step = [&](const he::CipherText& d) {
    if (comparator.mode == ComparatorMode::kExact) return ev.map_slots(d, exact_step, comparator.depth());
    return approx::composite_step(ev, d, cs);
  };
  // Indicator of [t_m, t_{m+1}) as H(x - t_m) + H(t_{m+1} - x) - 1: equal to the
  // product form for any step with step(-y) = 1 - step(y), one level cheaper.
  const auto ones = ev.encode(std::vector<double>(active, 1.0));
  he::CipherText b = ev.sub(ev.add(step(d1), step(d2)), ones);

  for (int j = 1; j <= k; ++j) {
    const StepConstants c = step_constants(grid, j, s);
    const he::CipherText f1 = ev.multiply(ev.sub(xp.ct, ev.encode(c.t1)), ev.encode(c.inv1));
    const he::CipherText b1 = ev.multiply(f1, b);
    const he::CipherText f2 = ev.multiply(ev.sub(ev.encode(c.t3), xp.ct), ev.encode(c.inv2));
    const he::CipherText b2 = ev.multiply(f2, ev.rotate(b, static_cast<long>(n_i)));
    b = ev.add(b1, b2);
  }
  if (k == 0) {
    // Order-0 values outside the packed region are not zero and nothing downstream clears them.
    std::vector<double> mask(active, 1.0);
    b = ev.multiply(b, ev.encode(mask));
  }
  return {std::move(b), n_i, grid.basis_count()};
}

std::vector<double> bspline_basis_plain(double x, std::span<const double> knots, int k) {
  if (k < 0) throw Error(ErrorCode::kInvalidArgument, "negative spline degree");
  if (knots.size() < static_cast<std::size_t>(k) + 2) {
    throw Error(ErrorCode::kInsufficientKnots, std::to_string(knots.size()) + " knots for degree " +
                                                   std::to_string(k));
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (knots[i] < knots[i - 1]) throw Error(ErrorCode::kInvalidArgument, "knots must be non-decreasing");
  }
  const std::size_t n0 = knots.size() - 1;
  std::vector<double> b(n0);
  for (std::size_t m = 0; m < n0; ++m) b[m] = (knots[m] <= x && x < knots[m + 1]) ? 1.0 : 0.0;
  for (int d = 1; d <= k; ++d) {
    const std::size_t n = n0 - static_cast<std::size_t>(d);
    for (std::size_t m = 0; m < n; ++m) {
      const double den1 = knots[m + static_cast<std::size_t>(d)] - knots[m];
      const double den2 = knots[m + static_cast<std::size_t>(d) + 1] - knots[m + 1];
      const double left = den1 > 0.0 ? (x - knots[m]) / den1 * b[m] : 0.0;
      const double right = den2 > 0.0 ? (knots[m + static_cast<std::size_t>(d) + 1] - x) / den2 * b[m + 1] : 0.0;
      b[m] = left + right;
    }
    b.resize(n);
  }
  return b;
}

std::vector<double> bspline_basis_mirrored(double x, std::span<const double> knots, int k,
                                           const Comparator& comparator, double bound, double scale) {
  if (knots.size() < static_cast<std::size_t>(k) + 2) {
    throw Error(ErrorCode::kInsufficientKnots, "too few knots");
  }
  const std::size_t n0 = knots.size() - 1;
  const double residual = 1.0 / (2.0 * bound * scale);
  const approx::CompositeSign cs = residual == 1.0 ? *comparator.sign : comparator.sign->scaled(residual);
  auto step = [&](double d) {
    if (comparator.mode == ComparatorMode::kExact) return exact_step(d);
    if (std::abs(d * cs.input_scale()) > 1.0 + 1e-12) {
      throw Error(ErrorCode::kInputOutOfRange, "comparator input " + std::to_string(d * cs.input_scale()) +
                                                   " outside [-1, 1]");
    }
    return cs.step(d);
  };
  const double xs = x * scale;
  std::vector<double> t(knots.begin(), knots.end());
  for (double& v : t) v = scale == 1.0 ? v : v * scale;
  std::vector<double> b(n0);
  for (std::size_t m = 0; m < n0; ++m) b[m] = (step(xs - t[m]) + step(t[m + 1] - xs)) - 1.0;
  for (int j = 1; j <= k; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    const std::size_t n = n0 - jj;
    for (std::size_t m = 0; m < n; ++m) {
      const double inv1 = 1.0 / (knots[m + jj] - knots[m]) / scale;
      const double inv2 = 1.0 / (knots[m + jj + 1] - knots[m + 1]) / scale;
      const double b1 = ((xs - t[m]) * inv1) * b[m];
      const double b2 = ((t[m + jj + 1] - xs) * inv2) * b[m + 1];
      b[m] = b1 + b2;
    }
    b.resize(n);
  }
  return b;
}

PermutationSpec::PermutationSpec(std::size_t n_r, std::size_t n_c, std::vector<std::size_t> target_of_source)
    : n_r_(n_r), n_c_(n_c), target_(std::move(target_of_source)), source_(target_.size(), target_.size()) {
  if (target_.size() != n_r_ * n_c_) throw Error(ErrorCode::kDimensionMismatch, "permutation size mismatch");
  for (std::size_t s = 0; s < target_.size(); ++s) {
    const std::size_t t = target_[s];
    if (t >= target_.size() || source_[t] != target_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "mapping is not a bijection");
    }
    source_[t] = s;
  }
}

std::vector<double> PermutationSpec::apply(std::span<const double> v) const {
  if (v.size() != size()) throw Error(ErrorCode::kDimensionMismatch, "vector length does not match permutation");
  std::vector<double> out(v.size());
  for (std::size_t s = 0; s < v.size(); ++s) out[target_[s]] = v[s];
  return out;
}

Eigen::MatrixXd PermutationSpec::to_matrix() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t s = 0; s < size(); ++s) p(static_cast<Eigen::Index>(target_[s]), static_cast<Eigen::Index>(s)) = 1.0;
  return p;
}

PermutationSpec PermutationSpec::inverse() const { return PermutationSpec(n_c_, n_r_, source_); }

PermutationSpec gen_permutation(std::size_t n_r, std::size_t n_c) {
  if (n_r == 0 || n_c == 0) throw Error(ErrorCode::kInvalidArgument, "permutation needs n_r, n_c >= 1");
  std::vector<std::size_t> target(n_r * n_c);
  for (std::size_t r = 1; r <= n_r; ++r) {
    for (std::size_t c = 1; c <= n_c; ++c) {
      const std::size_t j_c = (c - 1) * n_r + r;
      const std::size_t j_r = (r - 1) * n_c + c;
      target[j_c - 1] = j_r - 1;
    }
  }
  return PermutationSpec(n_r, n_c, std::move(target));
}

Eigen::MatrixXd fuse_weights(const Eigen::MatrixXd& w_prime, const PermutationSpec& p) {
  if (static_cast<std::size_t>(w_prime.cols()) != p.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "W' has " + std::to_string(w_prime.cols()) +
                                                   " columns, permutation has size " + std::to_string(p.size()));
  }
  // (W' P)[:, s] = W'[:, target(s)]
  Eigen::MatrixXd wf(w_prime.rows(), w_prime.cols());
  for (std::size_t s = 0; s < p.size(); ++s)
    wf.col(static_cast<Eigen::Index>(s)) = w_prime.col(static_cast<Eigen::Index>(p.target(s)));
  return wf;
}

}  // namespace hekan::bspline
