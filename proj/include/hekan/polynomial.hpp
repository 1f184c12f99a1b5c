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

#include <bit>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace hekan::approx {

/// Real polynomial, coefficients in ascending degree. Trailing zeros are
/// trimmed so the leading coefficient is non-zero unless the polynomial is 0.
class Polynomial {
 public:
  Polynomial() : coeffs_{0.0} {}
  explicit Polynomial(std::vector<double> coeffs);

  static Polynomial monomial(int degree, double coeff = 1.0);

  const std::vector<double>& coeffs() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }
  /// All even-degree coefficients are exactly zero.
  bool is_odd() const;

  /// Horner evaluation.
  double operator()(double x) const;

  /// q(x) = p(scale * x + shift).
  Polynomial compose_affine(double scale, double shift) const;
  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator*(double s) const;
  Polynomial operator*(const Polynomial& other) const;
  friend bool operator==(const Polynomial&, const Polynomial&) = default;

  /// Converts sum_j cheb[j] * T_j(t), t = (2x - lo - hi) / (hi - lo), to
  /// monomial form in x.
  static Polynomial from_chebyshev(std::span<const double> cheb, double lo, double hi);

  /// JSON array of ascending coefficients.
  nlohmann::json to_json() const;
  static Polynomial from_json(const nlohmann::json& j);

 private:
  std::vector<double> coeffs_;
};

/// Monomial coefficients of the Chebyshev polynomial T_n.
std::vector<double> chebyshev_monomials(int n);

// Balanced power-tree schedule.
//
// p(x) = q(x) + x^m * r(x) with m the largest power of two <= deg(p), applied
// recursively. Powers x^(2^j) come from repeated squaring. Multiplicative depth
// is ceil(log2(deg + 1)), and the same template drives the homomorphic
// evaluation, the scalar mirror and the depth planner, so all three agree
// operation for operation.
//
// Ops must provide:
//   using Value = ...;
//   Value mul(const Value&, const Value&);
//   Value mul_scalar(const Value&, double);
//   Value add(const Value&, const Value&);
//   Value add_scalar(const Value&, double);
//   Value constant(double);

namespace detail {

template <class Ops>
class PowerTree {
 public:
  using Value = typename Ops::Value;

  PowerTree(Ops& ops, const Value& x) : ops_(ops) { powers_.push_back(x); }

  Value run(std::span<const double> c) {
    auto [value, constant] = eval(c);
    if (!value) return ops_.constant(constant);
    if (constant != 0.0) return ops_.add_scalar(*value, constant);
    return *value;
  }

 private:
  struct Partial {
    std::optional<Value> value;
    double constant = 0.0;
  };

  // x^(2^j)
  const Value& power(std::size_t j) {
    while (powers_.size() <= j) powers_.push_back(ops_.mul(powers_.back(), powers_.back()));
    return powers_[j];
  }

  static bool all_zero(std::span<const double> c) {
    for (double v : c)
      if (v != 0.0) return false;
    return true;
  }

  Partial eval(std::span<const double> c) {
    if (c.size() == 1) return {std::nullopt, c[0]};
    const std::size_t degree = c.size() - 1;
    const std::size_t m = std::bit_floor(degree);
    const std::size_t j = static_cast<std::size_t>(std::countr_zero(m));

    Partial low = eval(c.first(m));
    std::optional<Value> term;
    auto high_coeffs = c.subspan(m);
    if (!all_zero(high_coeffs)) {
      Partial high = eval(high_coeffs);
      if (high.value) {
        Value h = high.constant != 0.0 ? ops_.add_scalar(*high.value, high.constant) : *high.value;
        term = ops_.mul(power(j), h);
      } else {
        term = ops_.mul_scalar(power(j), high.constant);
      }
    }
    if (low.value && term) return {ops_.add(*low.value, *term), low.constant};
    if (term) return {term, low.constant};
    return low;
  }

  Ops& ops_;
  std::vector<Value> powers_;
};

}  // namespace detail

template <class Ops>
typename Ops::Value evaluate_power_tree(Ops& ops, const typename Ops::Value& x,
                                        std::span<const double> coeffs) {
  return detail::PowerTree<Ops>(ops, x).run(coeffs);
}

/// Plain double arithmetic in the power-tree order.
struct ScalarOps {
  using Value = double;
  double mul(double a, double b) const { return a * b; }
  double mul_scalar(double a, double s) const { return a * s; }
  double add(double a, double b) const { return a + b; }
  double add_scalar(double a, double s) const { return a + s; }
  double constant(double c) const { return c; }
};

/// Tracks multiplicative depth only.
struct DepthOps {
  using Value = int;
  int mul(int a, int b) const { return std::max(a, b) + 1; }
  int mul_scalar(int a, double) const { return a + 1; }
  int add(int a, int b) const { return std::max(a, b); }
  int add_scalar(int a, double) const { return a; }
  int constant(double) const { return 0; }
};

/// p(x) evaluated with the power-tree schedule in double precision.
inline double evaluate_scheduled(const Polynomial& p, double x) {
  ScalarOps ops;
  return evaluate_power_tree(ops, x, p.coeffs());
}

/// Levels consumed by the power-tree evaluation of p.
inline int power_tree_depth(const Polynomial& p) {
  DepthOps ops;
  return evaluate_power_tree(ops, 0, p.coeffs());
}

}  // namespace hekan::approx
