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

#include "hekan/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include "hekan/error.hpp"

namespace hekan::approx {

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
  if (coeffs_.empty()) coeffs_.push_back(0.0);
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw Error(ErrorCode::kInvalidArgument, "non-finite polynomial coefficient");
  }
}

Polynomial Polynomial::monomial(int degree, double coeff) {
  std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
  c.back() = coeff;
  return Polynomial(std::move(c));
}

bool Polynomial::is_odd() const {
  for (std::size_t i = 0; i < coeffs_.size(); i += 2)
    if (coeffs_[i] != 0.0) return false;
  return true;
}

double Polynomial::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  std::vector<double> c(std::max(coeffs_.size(), other.coeffs_.size()), 0.0);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) c[i] += coeffs_[i];
  for (std::size_t i = 0; i < other.coeffs_.size(); ++i) c[i] += other.coeffs_[i];
  return Polynomial(std::move(c));
}

Polynomial Polynomial::operator*(double s) const {
  std::vector<double> c = coeffs_;
  for (double& v : c) v *= s;
  return Polynomial(std::move(c));
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  std::vector<double> c(coeffs_.size() + other.coeffs_.size() - 1, 0.0);
  for (std::size_t i = 0; i < coeffs_.size(); ++i)
    for (std::size_t j = 0; j < other.coeffs_.size(); ++j) c[i + j] += coeffs_[i] * other.coeffs_[j];
  return Polynomial(std::move(c));
}

Polynomial Polynomial::compose_affine(double scale, double shift) const {
  // Horner over polynomials: acc = acc * (scale x + shift) + c_i
  const Polynomial lin({shift, scale});
  Polynomial acc({coeffs_.back()});
  for (int i = degree() - 1; i >= 0; --i) acc = acc * lin + Polynomial({coeffs_[static_cast<std::size_t>(i)]});
  return acc;
}

std::vector<double> chebyshev_monomials(int n) {
  std::vector<double> prev{1.0};
  if (n == 0) return prev;
  std::vector<double> cur{0.0, 1.0};
  for (int k = 1; k < n; ++k) {
    std::vector<double> next(cur.size() + 1, 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += 2.0 * cur[i];
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= prev[i];
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

Polynomial Polynomial::from_chebyshev(std::span<const double> cheb, double lo, double hi) {
  if (!(hi > lo)) throw Error(ErrorCode::kInvalidArgument, "empty interval");
  std::vector<double> in_t(cheb.size(), 0.0);
  for (std::size_t j = 0; j < cheb.size(); ++j) {
    if (cheb[j] == 0.0) continue;
    const auto t = chebyshev_monomials(static_cast<int>(j));
    for (std::size_t i = 0; i < t.size(); ++i) in_t[i] += cheb[j] * t[i];
  }
  if (in_t.empty()) return Polynomial();
  const double scale = 2.0 / (hi - lo);
  const double shift = -(lo + hi) / (hi - lo);
  return Polynomial(std::move(in_t)).compose_affine(scale, shift);
}

nlohmann::json Polynomial::to_json() const { return coeffs_; }

Polynomial Polynomial::from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) {
    throw Error(ErrorCode::kSchemaMismatch, "polynomial must be a non-empty array of coefficients");
  }
  std::vector<double> c;
  c.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorCode::kSchemaMismatch, "polynomial coefficient is not a number");
    c.push_back(v.get<double>());
  }
  return Polynomial(std::move(c));
}

}  // namespace hekan::approx
