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

#include "hekan/poly_approx.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "hekan/error.hpp"

namespace hekan::approx {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is not finite");
}

// T_0..T_{n-1} at t.
void chebyshev_row(double t, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() > 1) out[1] = t;
  for (std::size_t j = 2; j < out.size(); ++j) out[j] = 2.0 * t * out[j - 1] - out[j - 2];
}

// Chebyshev-Lobatto points on [lo, hi], ascending.
std::vector<double> lobatto_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = mid - half * std::cos(std::numbers::pi * k / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace

ApproxRange range_from_moments(double mu, double sigma, double x_min, double x_max, double factor) {
  require_finite(mu, "mu");
  require_finite(sigma, "sigma");
  if (sigma < 0.0) throw Error(ErrorCode::kInvalidArgument, "sigma must be non-negative");
  if (!(x_min <= x_max)) throw Error(ErrorCode::kInvalidArgument, "x_min > x_max");
  if (!(factor > 0.0)) throw Error(ErrorCode::kInvalidArgument, "factor must be positive");
  ApproxRange r;
  r.mu = mu;
  r.sigma = sigma;
  if (sigma == 0.0) {
    const double tol = 1e-6 * std::max(1.0, std::abs(mu));
    r.lo = mu - tol;
    r.hi = mu + tol;
    r.degenerate = true;
    return r;
  }
  r.lo = std::max(mu - factor * sigma, x_min);
  r.hi = std::min(mu + factor * sigma, x_max);
  if (!(r.lo < r.hi)) {
    throw Error(ErrorCode::kInvalidArgument, "clamped approximation range is empty");
  }
  return r;
}

ApproxRange estimate_range(std::span<const double> samples, double x_min, double x_max, double factor) {
  if (samples.empty()) throw Error(ErrorCode::kEmptySamples, "no samples to estimate a range from");
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(samples.size());
  return range_from_moments(mean, std::sqrt(var), x_min, x_max, factor);
}

WeightScheme WeightScheme::around(const ApproxRange& range, double k_sigma) {
  return {range.mu - k_sigma * range.sigma, range.mu + k_sigma * range.sigma, 10.0, 1.0};
}

void WeightScheme::validate() const {
  if (!(outer_weight > 0.0) || !(inner_weight >= outer_weight)) {
    throw Error(ErrorCode::kInvalidArgument, "weights must satisfy inner >= outer > 0");
  }
}

std::vector<double> sample_grid(double lo, double hi, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "sample count must be positive");
  std::vector<double> xs(static_cast<std::size_t>(n));
  if (n == 1) {
    xs[0] = 0.5 * (lo + hi);
    return xs;
  }
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = lo + step * i;
  xs.back() = hi;
  return xs;
}

int default_sample_count(int degree) { return 200 * (degree + 1); }

Polynomial fit_weighted_ls(const ScalarFn& target, const ApproxRange& range, int degree,
                           const WeightScheme& weights, int n_samples) {
  if (degree < 0) throw Error(ErrorCode::kInvalidArgument, "degree must be non-negative");
  if (!(range.lo < range.hi)) throw Error(ErrorCode::kInvalidArgument, "empty fitting range");
  weights.validate();
  if (n_samples <= 0) n_samples = default_sample_count(degree);
  if (n_samples <= degree) {
    throw Error(ErrorCode::kInvalidArgument, "need more samples than the degree");
  }

  const auto xs = sample_grid(range.lo, range.hi, n_samples);
  const auto m = static_cast<Eigen::Index>(degree + 1);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(xs.size()), m);
  Eigen::VectorXd b(static_cast<Eigen::Index>(xs.size()));
  std::vector<double> row(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double t = (2.0 * xs[i] - range.lo - range.hi) / (range.hi - range.lo);
    const double sw = std::sqrt(weights.weight(xs[i]));
    const double y = target(xs[i]);
    require_finite(y, "target value");
    chebyshev_row(t, row);
    for (Eigen::Index j = 0; j < m; ++j) a(static_cast<Eigen::Index>(i), j) = sw * row[static_cast<std::size_t>(j)];
    b(static_cast<Eigen::Index>(i)) = sw * y;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  const auto& r = qr.matrixR();
  const double r_max = std::abs(r(0, 0));
  const double r_min = std::abs(r(m - 1, m - 1));
  if (qr.rank() < m || r_min <= 1e-12 * r_max) {
    throw Error(ErrorCode::kIllConditioned, "weighted least-squares system is numerically singular (degree " +
                                                std::to_string(degree) + ", " + std::to_string(n_samples) +
                                                " samples)");
  }
  const Eigen::VectorXd cheb = qr.solve(b);
  std::vector<double> c(cheb.data(), cheb.data() + cheb.size());
  return Polynomial::from_chebyshev(c, range.lo, range.hi);
}

Polynomial fit_ols(const ScalarFn& target, const ApproxRange& range, int degree, int n_samples) {
  return fit_weighted_ls(target, range, degree, WeightScheme::uniform(), n_samples);
}

RemezResult remez(std::span<const ScalarFn> basis, const ScalarFn& target, double lo, double hi,
                  const RemezOptions& options) {
  const auto m = basis.size();
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "empty basis");
  if (!(lo < hi)) throw Error(ErrorCode::kInvalidArgument, "empty Remez interval");
  const std::size_t n_ref = m + 1;
  const int n_grid = std::max(options.grid_points, static_cast<int>(50 * n_ref));

  const auto grid = lobatto_grid(lo, hi, n_grid);
  Eigen::MatrixXd phi(n_grid, static_cast<Eigen::Index>(m));
  Eigen::VectorXd f(n_grid);
  for (int k = 0; k < n_grid; ++k) {
    for (std::size_t j = 0; j < m; ++j) phi(k, static_cast<Eigen::Index>(j)) = basis[j](grid[static_cast<std::size_t>(k)]);
    f(k) = target(grid[static_cast<std::size_t>(k)]);
    require_finite(f(k), "Remez target");
  }

  // Initial reference: grid points near the Chebyshev extrema. Interior points
  // are nudged off-centre; a symmetric reference makes the levelled error
  // vanish for even/odd targets and the exchange stalls.
  std::vector<int> ref(n_ref);
  for (std::size_t i = 0; i < n_ref; ++i) {
    const double nudge = (i > 0 && i + 1 < n_ref) ? 0.25 : 0.0;
    ref[i] = static_cast<int>(
        std::lround((static_cast<double>(i) + nudge) * (n_grid - 1) / static_cast<double>(n_ref - 1)));
  }

  RemezResult result;
  Eigen::VectorXd coeffs(static_cast<Eigen::Index>(m));
  Eigen::VectorXd err(n_grid);
  const double f_scale = std::max(1.0, f.cwiseAbs().maxCoeff());

  for (int it = 1; it <= options.max_iterations; ++it) {
    result.iterations = it;
    Eigen::MatrixXd sys(static_cast<Eigen::Index>(n_ref), static_cast<Eigen::Index>(n_ref));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n_ref));
    for (std::size_t i = 0; i < n_ref; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      sys.row(ii).head(static_cast<Eigen::Index>(m)) = phi.row(ref[i]);
      sys(ii, static_cast<Eigen::Index>(m)) = (i % 2 == 0) ? 1.0 : -1.0;
      rhs(ii) = f(ref[i]);
    }
    const Eigen::VectorXd sol = sys.partialPivLu().solve(rhs);
    coeffs = sol.head(static_cast<Eigen::Index>(m));
    result.level_error = std::abs(sol(static_cast<Eigen::Index>(m)));
    err = f - phi * coeffs;
    result.max_error = err.cwiseAbs().maxCoeff();

    if (result.max_error <= 1e-13 * f_scale) {  // target lies in the span
      result.spread = 0.0;
      break;
    }

    // Alternating extrema: one per sign run.
    std::vector<int> ext;
    int start = 0;
    auto sgn = [&](int k) { return err(k) >= 0.0; };
    for (int k = 1; k <= n_grid; ++k) {
      if (k == n_grid || sgn(k) != sgn(start)) {
        int best = start;
        for (int q = start; q < k; ++q)
          if (std::abs(err(q)) > std::abs(err(best))) best = q;
        ext.push_back(best);
        start = k;
      }
    }
    if (ext.size() < n_ref) {
      throw Error(ErrorCode::kRemezNonConvergence,
                  "error has " + std::to_string(ext.size()) + " alternations, need " + std::to_string(n_ref));
    }

    // Window of n_ref consecutive extrema that contains the global maximum and
    // has the largest minimum |error|.
    std::size_t arg_max = 0;
    for (std::size_t q = 1; q < ext.size(); ++q)
      if (std::abs(err(ext[q])) > std::abs(err(ext[arg_max]))) arg_max = q;
    std::size_t best_start = 0;
    double best_min = -1.0;
    const std::size_t first = arg_max + 1 >= n_ref ? arg_max + 1 - n_ref : 0;
    const std::size_t last = std::min(arg_max, ext.size() - n_ref);
    for (std::size_t s = first; s <= last; ++s) {
      double mn = std::abs(err(ext[s]));
      for (std::size_t q = s; q < s + n_ref; ++q) mn = std::min(mn, std::abs(err(ext[q])));
      if (mn > best_min) {
        best_min = mn;
        best_start = s;
      }
    }
    ref.assign(ext.begin() + static_cast<std::ptrdiff_t>(best_start),
               ext.begin() + static_cast<std::ptrdiff_t>(best_start + n_ref));

    double mx = 0.0;
    double mn = std::abs(err(ref[0]));
    for (int q : ref) {
      mx = std::max(mx, std::abs(err(q)));
      mn = std::min(mn, std::abs(err(q)));
    }
    result.spread = (mx - mn) / mx;
    if (result.spread <= options.tolerance && mx >= result.max_error * (1.0 - options.tolerance)) break;
  }

  if (result.spread > options.accept_spread) {
    throw Error(ErrorCode::kRemezNonConvergence,
                "equioscillation spread " + std::to_string(result.spread) + " after " +
                    std::to_string(result.iterations) + " iterations");
  }
  result.coeffs.assign(coeffs.data(), coeffs.data() + coeffs.size());
  result.reference.clear();
  for (int q : ref) result.reference.push_back(grid[static_cast<std::size_t>(q)]);
  return result;
}

Polynomial fit_remez(const ScalarFn& target, const ApproxRange& range, int degree,
                     const RemezOptions& options) {
  if (degree < 0) throw Error(ErrorCode::kInvalidArgument, "degree must be non-negative");
  if (!(range.lo < range.hi)) throw Error(ErrorCode::kInvalidArgument, "empty fitting range");
  const double lo = range.lo;
  const double hi = range.hi;
  std::vector<ScalarFn> basis;
  for (int j = 0; j <= degree; ++j) {
    basis.emplace_back([j, lo, hi](double x) {
      const double t = std::clamp((2.0 * x - lo - hi) / (hi - lo), -1.0, 1.0);
      return std::cos(j * std::acos(t));
    });
  }
  const auto res = remez(basis, target, lo, hi, options);
  return Polynomial::from_chebyshev(res.coeffs, lo, hi);
}

Polynomial fit_odd_sign(double lo, double hi, int degree, const RemezOptions& options) {
  if (degree < 1 || degree % 2 == 0) throw Error(ErrorCode::kInvalidArgument, "odd degree required");
  if (!(lo > 0.0 && lo < hi)) throw Error(ErrorCode::kInvalidArgument, "need 0 < lo < hi");
  const int terms = (degree + 1) / 2;
  std::vector<ScalarFn> basis;
  for (int j = 0; j < terms; ++j) {
    const int n = 2 * j + 1;
    basis.emplace_back([n, hi](double x) { return std::cos(n * std::acos(std::clamp(x / hi, -1.0, 1.0))); });
  }
  const auto res = remez(basis, [](double) { return 1.0; }, lo, hi, options);
  std::vector<double> cheb(static_cast<std::size_t>(degree) + 1, 0.0);
  for (int j = 0; j < terms; ++j) cheb[static_cast<std::size_t>(2 * j + 1)] = res.coeffs[static_cast<std::size_t>(j)];
  return Polynomial::from_chebyshev(cheb, -hi, hi);
}

FitErrors measure_fit(const ScalarFn& target, const Polynomial& p, const ApproxRange& range,
                      const WeightScheme& weights, int n_samples) {
  if (n_samples <= 0) n_samples = default_sample_count(p.degree());
  const auto xs = sample_grid(range.lo, range.hi, n_samples);
  FitErrors e;
  double sum = 0.0, wsum = 0.0, wtot = 0.0, inner = 0.0;
  std::size_t n_inner = 0;
  for (double x : xs) {
    const double d = target(x) - p(x);
    const double w = weights.weight(x);
    sum += d * d;
    wsum += w * d * d;
    wtot += w;
    if (x >= weights.inner_lo && x <= weights.inner_hi) {
      inner += d * d;
      ++n_inner;
    }
    e.max_error = std::max(e.max_error, std::abs(d));
  }
  e.rmse_uniform = std::sqrt(sum / static_cast<double>(xs.size()));
  e.rmse_weighted = std::sqrt(wsum / wtot);
  e.rmse_inner = n_inner ? std::sqrt(inner / static_cast<double>(n_inner)) : 0.0;
  return e;
}

double gaussian_weighted_rmse(const ScalarFn& target, const Polynomial& p, const ApproxRange& range,
                              int points) {
  if (!(range.sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be positive");
  const double h = (range.hi - range.lo) / points;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = range.lo + (i + 0.5) * h;
    const double z = (x - range.mu) / range.sigma;
    const double rho = std::exp(-0.5 * z * z);
    const double d = target(x) - p(x);
    num += rho * d * d;
    den += rho;
  }
  return std::sqrt(num / den);
}

std::string fit_report_csv_header() {
  return "method,degree,range_lo,range_hi,rmse_uniform,rmse_weighted,rmse_inner,max_error";
}

std::string fit_report_csv_row(const FitReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.method << ',' << r.degree << ',' << r.range.lo << ',' << r.range.hi << ',' << r.errors.rmse_uniform
     << ',' << r.errors.rmse_weighted << ',' << r.errors.rmse_inner << ',' << r.errors.max_error;
  return os.str();
}

namespace {
constexpr std::array<ActivationPreset, 3> kPresets{{
    {"mnist", -12.4, 14.74, 10},
    {"fmnist", -9.77, 11.01, 10},
    {"cifar10", -11.90, 10.99, 15},
}};
}  // namespace

std::span<const ActivationPreset> activation_presets() { return kPresets; }

const ActivationPreset& activation_preset(std::string_view name) {
  for (const auto& p : kPresets)
    if (p.name == name) return p;
  throw Error(ErrorCode::kInvalidArgument, "unknown activation preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

CompositeSign::CompositeSign(std::vector<Polynomial> stages, int alpha, double target_eps)
    : stages_(std::move(stages)), alpha_(alpha), target_eps_(target_eps) {
  if (stages_.empty()) throw Error(ErrorCode::kInvalidArgument, "composite sign needs at least one stage");
  for (const auto& s : stages_)
    if (!s.is_odd()) throw Error(ErrorCode::kInvalidArgument, "composite sign stages must be odd");
  if (alpha_ < 1 || !(target_eps_ > 0.0)) throw Error(ErrorCode::kInvalidArgument, "bad precision parameters");
  rebuild_step_stages();
}

double CompositeSign::delta() const { return std::ldexp(1.0, -alpha_); }

CompositeSign CompositeSign::build(int alpha, double target_eps, std::vector<int> degrees) {
  if (degrees.empty()) throw Error(ErrorCode::kInvalidArgument, "no stage degrees");
  const double delta = std::ldexp(1.0, -alpha);
  double lo = delta;
  double hi = 1.0;
  std::vector<Polynomial> stages;
  for (int d : degrees) {
    Polynomial p = fit_odd_sign(lo, hi, d);
    double new_lo = p(lo), new_hi = p(lo);
    for (double x : lobatto_grid(lo, hi, 20001)) {
      const double y = p(x);
      new_lo = std::min(new_lo, y);
      new_hi = std::max(new_hi, y);
    }
    if (!(new_lo > 0.0)) {
      throw Error(ErrorCode::kRemezNonConvergence, "composite sign stage does not separate signs");
    }
    stages.push_back(std::move(p));
    lo = new_lo;
    hi = new_hi;
  }
  CompositeSign cs(std::move(stages), alpha, target_eps);
  double worst = 0.0;
  for (double x : sample_grid(delta, 1.0, 100001)) worst = std::max(worst, std::abs(cs.sign(x) - 1.0));
  if (worst > target_eps) {
    throw Error(ErrorCode::kRemezNonConvergence,
                "composite sign error " + std::to_string(worst) + " exceeds target");
  }
  return cs;
}

CompositeSign CompositeSign::scaled(double s) const {
  if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorCode::kInvalidArgument, "scale must be positive");
  CompositeSign out = *this;
  out.stages_.front() = stages_.front().compose_affine(s, 0.0);
  out.input_scale_ = input_scale_ * s;
  out.rebuild_step_stages();
  return out;
}

void CompositeSign::rebuild_step_stages() {
  step_stages_ = stages_;
  step_stages_.back() = stages_.back() * 0.5 + Polynomial({0.5});
}

double CompositeSign::sign(double y) const {
  for (const auto& s : stages_) y = evaluate_scheduled(s, y);
  return y;
}

double CompositeSign::step(double y) const {
  for (const auto& s : step_stages_) y = evaluate_scheduled(s, y);
  return y;
}

int CompositeSign::depth() const {
  int d = 0;
  for (const auto& s : step_stages()) d += power_tree_depth(s);
  return d;
}

const CompositeSign& default_composite_sign() {
  static const CompositeSign cs = CompositeSign::build();
  return cs;
}

// ---------------------------------------------------------------------------

namespace {

struct HeOps {
  using Value = he::CipherText;
  he::Evaluator& ev;
  std::size_t active;
  int level;

  he::PlainVector constant_vector(double c) const {
    std::vector<double> v(active, c);
    return he::PlainVector(v, ev.slot_count());
  }
  Value mul(const Value& a, const Value& b) { return ev.multiply(a, b); }
  // Scaling by a vector that is zero off the active slots keeps the result
  // clean there even when the input carries garbage.
  Value mul_scalar(const Value& a, double s) {
    return active == ev.slot_count() ? ev.multiply(a, s) : ev.multiply(a, constant_vector(s));
  }
  Value add(const Value& a, const Value& b) { return ev.add(a, b); }
  Value add_scalar(const Value& a, double s) { return ev.add(a, constant_vector(s)); }
  Value constant(double c) {
    std::vector<double> v(active, c);
    return ev.encrypt(v, level);
  }
};

}  // namespace

he::CipherText eval_poly_he(he::Evaluator& ev, const he::CipherText& a, const Polynomial& p,
                            std::size_t active_slots) {
  const std::size_t active = active_slots == 0 ? ev.slot_count() : std::min(active_slots, ev.slot_count());
  const int need = power_tree_depth(p);
  if (a.level() < need) {
    throw Error(ErrorCode::kDepthExhausted, "degree-" + std::to_string(p.degree()) + " polynomial needs " +
                                                std::to_string(need) + " levels, ciphertext has " +
                                                std::to_string(a.level()));
  }
  HeOps ops{ev, active, a.level()};
  return evaluate_power_tree(ops, a, p.coeffs());
}

he::CipherText composite_step(he::Evaluator& ev, const he::CipherText& diff, const CompositeSign& cs) {
  if (diff.level() < cs.depth()) {
    throw Error(ErrorCode::kDepthExhausted, "comparator needs " + std::to_string(cs.depth()) +
                                                " levels, ciphertext has " + std::to_string(diff.level()));
  }
  if (ev.backend().exact()) {
    for (double v : diff.slots()) {
      if (std::abs(v * cs.input_scale()) > 1.0 + 1e-12) {
        throw Error(ErrorCode::kInputOutOfRange, "comparator input " + std::to_string(v * cs.input_scale()) +
                                                     " outside [-1, 1]");
      }
    }
  }
  he::CipherText v = diff;
  for (const auto& stage : cs.step_stages()) v = eval_poly_he(ev, v, stage);
  return v;
}

he::CipherText poly_comp(he::Evaluator& ev, const he::CipherText& a, const he::CipherText& b,
                         const CompositeSign& cs) {
  return composite_step(ev, ev.sub(a, b), cs);
}

he::CipherText poly_comp(he::Evaluator& ev, const he::CipherText& a, const he::PlainVector& b,
                         const CompositeSign& cs) {
  return composite_step(ev, ev.sub(a, b), cs);
}

}  // namespace hekan::approx
