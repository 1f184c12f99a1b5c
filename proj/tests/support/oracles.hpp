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

// Reference implementations used only by tests. Deliberately written in the
// most literal form so they share no code path with the library.
#pragma once

#include <cstddef>
#include <vector>

namespace hekan::testing {

/// Textbook recursive Cox-de Boor B_{m,k}(x) with 0/0 := 0.
inline double cox_de_boor(const std::vector<double>& t, std::size_t m, int k, double x) {
  if (k == 0) return (t[m] <= x && x < t[m + 1]) ? 1.0 : 0.0;
  double left = 0.0, right = 0.0;
  const double d1 = t[m + k] - t[m];
  const double d2 = t[m + k + 1] - t[m + 1];
  if (d1 != 0.0) left = (x - t[m]) / d1 * cox_de_boor(t, m, k - 1, x);
  if (d2 != 0.0) right = (t[m + k + 1] - x) / d2 * cox_de_boor(t, m + 1, k - 1, x);
  return left + right;
}

inline std::vector<double> cox_de_boor_all(const std::vector<double>& t, int k, double x) {
  std::vector<double> out;
  for (std::size_t m = 0; m + k + 1 < t.size(); ++m) out.push_back(cox_de_boor(t, m, k, x));
  return out;
}

/// Dense y = W x.
inline std::vector<double> matvec(const std::vector<std::vector<double>>& w, const std::vector<double>& x) {
  std::vector<double> y(w.size(), 0.0);
  for (std::size_t r = 0; r < w.size(); ++r)
    for (std::size_t c = 0; c < x.size(); ++c) y[r] += w[r][c] * x[c];
  return y;
}

}  // namespace hekan::testing
