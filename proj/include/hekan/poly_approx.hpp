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

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hekan/he_core.hpp"
#include "hekan/polynomial.hpp"

namespace hekan::approx {

using ScalarFn = std::function<double(double)>;

struct ApproxRange {
  double lo = -1.0;
  double hi = 1.0;
  double mu = 0.0;
  double sigma = 1.0;
  /// sigma was zero; [lo, hi] is a tiny interval around mu.
  bool degenerate = false;
};

/// [max(mu - factor*sigma, x_min), min(mu + factor*sigma, x_max)].
ApproxRange range_from_moments(double mu, double sigma, double x_min, double x_max,
                               double factor = 5.0);
/// Same, with mu and sigma (population) estimated from samples.
ApproxRange estimate_range(std::span<const double> samples, double x_min, double x_max,
                           double factor = 5.0);

struct WeightScheme {
  double inner_lo = -3.0;
  double inner_hi = 3.0;
  double inner_weight = 10.0;
  double outer_weight = 1.0;

  /// mu +- 3 sigma, weights 10 and 1.
  static WeightScheme around(const ApproxRange& range, double k_sigma = 3.0);
  static WeightScheme uniform() { return {0.0, 0.0, 1.0, 1.0}; }
  double weight(double x) const {
    return (x >= inner_lo && x <= inner_hi) ? inner_weight : outer_weight;
  }
  void validate() const;
};

/// Evenly spaced sample grid over [lo, hi] with n points (endpoints included).
std::vector<double> sample_grid(double lo, double hi, int n);
int default_sample_count(int degree);

/// Minimises sum_i w_i (y_i - p(x_i))^2 over n_samples evenly spaced points.
/// n_samples <= 0 selects the default count.
Polynomial fit_weighted_ls(const ScalarFn& target, const ApproxRange& range, int degree,
                           const WeightScheme& weights, int n_samples = 0);
Polynomial fit_ols(const ScalarFn& target, const ApproxRange& range, int degree, int n_samples = 0);

struct RemezOptions {
  int max_iterations = 80;
  /// Stop when (max - min) / max of |error| at the reference is below this.
  double tolerance = 1e-6;
  /// Worst spread still accepted at the iteration cap.
  double accept_spread = 0.1;
  int grid_points = 40000;
};

struct RemezResult {
  std::vector<double> coeffs;   // in the caller's basis
  double max_error = 0.0;       // on the dense grid
  double level_error = 0.0;     // |E| from the last reference solve
  double spread = 0.0;          // (max - min)/max of |error| at the reference
  int iterations = 0;
  std::vector<double> reference;
};

/// Minimax fit of target on [lo, hi] in the span of `basis` (a Chebyshev system).
RemezResult remez(std::span<const ScalarFn> basis, const ScalarFn& target, double lo, double hi,
                  const RemezOptions& options = {});

/// Minimax polynomial of the given degree over range.
Polynomial fit_remez(const ScalarFn& target, const ApproxRange& range, int degree,
                     const RemezOptions& options = {});

/// Odd polynomial of the given odd degree minimising max |1 - p(x)| on [lo, hi], 0 < lo.
Polynomial fit_odd_sign(double lo, double hi, int degree, const RemezOptions& options = {});

struct FitErrors {
  double rmse_uniform = 0.0;
  double rmse_weighted = 0.0;
  double rmse_inner = 0.0;
  double max_error = 0.0;
};

/// Error metrics of p against target on the default sample grid for the range.
FitErrors measure_fit(const ScalarFn& target, const Polynomial& p, const ApproxRange& range,
                      const WeightScheme& weights, int n_samples = 0);

/// RMSE of p against target under a Gaussian(mu, sigma) density truncated to
/// the range, by dense midpoint quadrature.
double gaussian_weighted_rmse(const ScalarFn& target, const Polynomial& p, const ApproxRange& range,
                              int points = 20000);

/// One row of an activation-fit report.
struct FitReport {
  std::string method;
  int degree = 0;
  ApproxRange range;
  FitErrors errors;
};
std::string fit_report_csv_header();
std::string fit_report_csv_row(const FitReport& r);

/// Per-dataset activation presets (range and degree).
struct ActivationPreset {
  std::string_view name;
  double lo;
  double hi;
  int degree;
};
std::span<const ActivationPreset> activation_presets();
const ActivationPreset& activation_preset(std::string_view name);

/// Composition of odd polynomials approximating sign on [-1,-delta] U [delta,1].
class CompositeSign {
 public:
  CompositeSign(std::vector<Polynomial> stages, int alpha, double target_eps);

  /// Builds the stages with fit_odd_sign, each stage fitted on the image of
  /// the previous one. Throws kRemezNonConvergence if the composed error on a
  /// dense grid exceeds target_eps.
  static CompositeSign build(int alpha = 7, double target_eps = 0x1p-10,
                             std::vector<int> degrees = {15, 15, 15});

  const std::vector<Polynomial>& stages() const { return stages_; }
  int alpha() const { return alpha_; }
  double delta() const;
  double target_eps() const { return target_eps_; }
  /// Input scale folded into the first stage (1 unless scaled()).
  double input_scale() const { return input_scale_; }

  /// Same map applied to s * y, with s folded into the first stage's coefficients.
  CompositeSign scaled(double s) const;

  /// Stage list for the step function: the last stage becomes 0.5 * p + 0.5.
  const std::vector<Polynomial>& step_stages() const { return step_stages_; }

  /// Scalar evaluation in the homomorphic schedule.
  double sign(double y) const;
  double step(double y) const;

  /// Total levels used by step evaluation.
  int depth() const;

 private:
  void rebuild_step_stages();

  std::vector<Polynomial> stages_;
  std::vector<Polynomial> step_stages_;
  int alpha_;
  double target_eps_;
  double input_scale_ = 1.0;
};

/// Shared instance with the default parameters (built once, thread-safe).
const CompositeSign& default_composite_sign();

/// HE polynomial evaluation with the power-tree schedule. The constant term is
/// added only on the first `active_slots` slots (all slots when 0), so zero
/// padding stays zero.
he::CipherText eval_poly_he(he::Evaluator& ev, const he::CipherText& a, const Polynomial& p,
                            std::size_t active_slots = 0);

/// Slot-wise approximate step(a - b): ~1 if a > b, ~0 if a < b, 1/2 if equal.
he::CipherText poly_comp(he::Evaluator& ev, const he::CipherText& a, const he::CipherText& b,
                         const CompositeSign& cs);
he::CipherText poly_comp(he::Evaluator& ev, const he::CipherText& a, const he::PlainVector& b,
                         const CompositeSign& cs);
/// step(diff) for an already formed difference.
he::CipherText composite_step(he::Evaluator& ev, const he::CipherText& diff, const CompositeSign& cs);

}  // namespace hekan::approx
