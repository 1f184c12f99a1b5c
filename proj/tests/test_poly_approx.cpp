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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hekan/error.hpp"
#include "hekan/poly_approx.hpp"

namespace hekan::approx {
namespace {

double silu(double x) { return x / (1.0 + std::exp(-x)); }

template <class Fn>
void expect_code(ErrorCode code, Fn&& fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

void expect_coeffs(const Polynomial& p, const std::vector<double>& want, double tol) {
  ASSERT_GE(p.coeffs().size(), want.size());
  for (std::size_t i = 0; i < p.coeffs().size(); ++i) {
    EXPECT_NEAR(p.coeffs()[i], i < want.size() ? want[i] : 0.0, tol) << "coefficient " << i;
  }
}

he::BackendConfig cfg(std::size_t slots = 8, int depth = 20) {
  he::BackendConfig c;
  c.slot_count = slots;
  c.depth_budget = depth;
  return c;
}

// ---- Polynomial ----

TEST(Polynomial, TrimsTrailingZerosAndKeepsZeroPolynomial) {
  EXPECT_EQ(Polynomial({1, 2, 0, 0}).degree(), 1);
  EXPECT_TRUE(Polynomial({0, 0}).is_zero());
  EXPECT_EQ(Polynomial({0, 0}).degree(), 0);
  EXPECT_EQ(Polynomial::monomial(3, 2.0).coeffs(), (std::vector<double>{0, 0, 0, 2}));
  expect_code(ErrorCode::kInvalidArgument, [] { Polynomial({1, NAN}); });
}

TEST(Polynomial, ArithmeticAndHorner) {
  const Polynomial p({1, -2, 3});  // 3x^2 - 2x + 1
  EXPECT_DOUBLE_EQ(p(2.0), 9.0);
  EXPECT_EQ((p + Polynomial({0, 2})).coeffs(), (std::vector<double>{1, 0, 3}));
  EXPECT_EQ((p * 2.0).coeffs(), (std::vector<double>{2, -4, 6}));
  EXPECT_EQ((Polynomial({1, 1}) * Polynomial({-1, 1})).coeffs(), (std::vector<double>{-1, 0, 1}));
  const auto q = p.compose_affine(2.0, 1.0);  // p(2x + 1)
  for (double x : {-1.0, 0.3, 2.5}) EXPECT_NEAR(q(x), p(2 * x + 1), 1e-12);
  EXPECT_TRUE(Polynomial({0, 1, 0, -3}).is_odd());
  EXPECT_FALSE(p.is_odd());
}

TEST(Polynomial, ChebyshevConversion) {
  // T0 + 2 T2 = 1 + 2(2x^2 - 1) on [-1, 1].
  const std::vector<double> c{1, 0, 2};
  expect_coeffs(Polynomial::from_chebyshev(c, -1, 1), {-1, 0, 4}, 1e-14);
  const auto shifted = Polynomial::from_chebyshev(c, 0, 4);
  for (double x : {0.0, 1.0, 3.7}) {
    const double t = (2 * x - 4) / 4;
    EXPECT_NEAR(shifted(x), 1 + 2 * (2 * t * t - 1), 1e-12);
  }
  EXPECT_EQ(chebyshev_monomials(3), (std::vector<double>{0, -3, 0, 4}));
}

TEST(Polynomial, JsonRoundTrip) {
  const Polynomial p({0.125, -1, 0, 3.5});
  EXPECT_EQ(Polynomial::from_json(p.to_json()), p);
  EXPECT_TRUE(p.to_json().is_array());
  expect_code(ErrorCode::kSchemaMismatch, [] { Polynomial::from_json(nlohmann::json::array()); });
  expect_code(ErrorCode::kSchemaMismatch, [] { Polynomial::from_json(nlohmann::json{1, "x"}); });
}

TEST(Polynomial, ScheduledEvaluationMatchesHorner) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int degree = 0; degree <= 31; ++degree) {
    std::vector<double> c(degree + 1);
    for (auto& v : c) v = u(rng);
    const Polynomial p(c);
    for (double x : {-0.9, -0.2, 0.0, 0.45, 1.0}) EXPECT_NEAR(evaluate_scheduled(p, x), p(x), 1e-12);
  }
}

TEST(Polynomial, PowerTreeDepthIsLogarithmic) {
  for (int degree = 1; degree <= 64; ++degree) {
    std::vector<double> c(degree + 1, 0.5);
    const int d = power_tree_depth(Polynomial(c));
    const int lg = static_cast<int>(std::ceil(std::log2(degree + 1)));
    EXPECT_GE(d, lg) << degree;
    EXPECT_LE(d, lg + 1) << degree;
  }
  EXPECT_EQ(power_tree_depth(Polynomial({4.0})), 0);
  EXPECT_LE(power_tree_depth(Polynomial(std::vector<double>(16, 1.0))), 5);
}

// ---- ranges and weights ----

TEST(ApproxRange, ClampOnRight) {
  const auto r = range_from_moments(0, 1, -10, 3);
  EXPECT_DOUBLE_EQ(r.lo, -5);
  EXPECT_DOUBLE_EQ(r.hi, 3);
}

TEST(ApproxRange, NoClamp) {
  const auto r = range_from_moments(1, 2, -100, 100);
  EXPECT_DOUBLE_EQ(r.lo, -9);
  EXPECT_DOUBLE_EQ(r.hi, 11);
}

TEST(ApproxRange, FromSamplesUsesPopulationMoments) {
  const std::vector<double> s{1, 3};  // mean 2, population std 1
  const auto r = estimate_range(s, -100, 100, 2.0);
  EXPECT_DOUBLE_EQ(r.mu, 2);
  EXPECT_DOUBLE_EQ(r.sigma, 1);
  EXPECT_DOUBLE_EQ(r.lo, 0);
  EXPECT_DOUBLE_EQ(r.hi, 4);
}

TEST(ApproxRange, Errors) {
  expect_code(ErrorCode::kEmptySamples, [] { estimate_range(std::vector<double>{}, 0, 1); });
  expect_code(ErrorCode::kInvalidArgument, [] { range_from_moments(0, 1, 2, 1); });
  expect_code(ErrorCode::kInvalidArgument, [] { range_from_moments(0, -1, -1, 1); });
  expect_code(ErrorCode::kInvalidArgument, [] { range_from_moments(0, 1, 20, 30); });
}

TEST(ApproxRange, DegenerateIsFlaggedAndNarrow) {
  const std::vector<double> s(10, 4.0);
  const auto r = estimate_range(s, -10, 10);
  EXPECT_TRUE(r.degenerate);
  EXPECT_LT(r.lo, 4.0);
  EXPECT_GT(r.hi, 4.0);
  EXPECT_LT(r.hi - r.lo, 1e-4);
}

TEST(ApproxRange, MnistPresetIsGolden) {
  const auto& p = activation_preset("mnist");
  EXPECT_DOUBLE_EQ(p.lo, -12.4);
  EXPECT_DOUBLE_EQ(p.hi, 14.74);
  EXPECT_EQ(p.degree, 10);
  EXPECT_EQ(activation_preset("cifar10").degree, 15);
  expect_code(ErrorCode::kInvalidArgument, [] { activation_preset("imagenet"); });
}

TEST(ApproxRangeProperty, LargerFactorNeverShrinks) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.7, 3.0);
  std::vector<double> s(300);
  for (auto& v : s) v = n(rng);
  ApproxRange prev = estimate_range(s, -12, 12, 0.25);
  for (double f = 0.5; f <= 8.0; f += 0.25) {
    const auto r = estimate_range(s, -12, 12, f);
    EXPECT_LE(r.lo, prev.lo);
    EXPECT_GE(r.hi, prev.hi);
    prev = r;
  }
}

TEST(WeightScheme, DefaultsAndValidation) {
  const auto w = WeightScheme::around(range_from_moments(1, 2, -50, 50));
  EXPECT_DOUBLE_EQ(w.inner_lo, -5);
  EXPECT_DOUBLE_EQ(w.inner_hi, 7);
  EXPECT_DOUBLE_EQ(w.weight(0), 10);
  EXPECT_DOUBLE_EQ(w.weight(8), 1);
  WeightScheme bad = w;
  bad.outer_weight = 20;
  expect_code(ErrorCode::kInvalidArgument, [&] { bad.validate(); });
  bad.outer_weight = 0;
  bad.inner_weight = 0;
  expect_code(ErrorCode::kInvalidArgument, [&] { bad.validate(); });
}

// ---- fitters ----

TEST(Fitters, IdentityIsExact) {
  const auto r = range_from_moments(0.3, 2, -100, 100);
  const auto p = fit_weighted_ls([](double x) { return x; }, r, 1, WeightScheme::around(r));
  expect_coeffs(p, {0, 1}, 1e-12);
  EXPECT_LT(measure_fit([](double x) { return x; }, p, r, WeightScheme::around(r)).max_error, 1e-12);
}

TEST(Fitters, SquareIsExact) {
  ApproxRange r;
  const auto p = fit_weighted_ls([](double x) { return x * x; }, r, 2, WeightScheme::uniform());
  expect_coeffs(p, {0, 0, 1}, 1e-12);
}

TEST(Fitters, OlsCubeIsExact) {
  ApproxRange r;
  expect_coeffs(fit_ols([](double x) { return x * x * x; }, r, 3), {0, 0, 0, 1}, 1e-12);
}

TEST(Fitters, DefaultSampleCount) {
  EXPECT_EQ(default_sample_count(10), 2200);
  const auto g = sample_grid(-1, 1, 5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.front(), -1);
  EXPECT_DOUBLE_EQ(g.back(), 1);
}

TEST(Fitters, RejectsBadInput) {
  ApproxRange r;
  const auto f = [](double x) { return x; };
  expect_code(ErrorCode::kInvalidArgument, [&] { fit_weighted_ls(f, r, -1, WeightScheme::uniform()); });
  expect_code(ErrorCode::kInvalidArgument, [&] { fit_weighted_ls(f, r, 5, WeightScheme::uniform(), 5); });
  ApproxRange empty{1, 1, 1, 0, false};
  expect_code(ErrorCode::kInvalidArgument, [&] { fit_ols(f, empty, 2); });
}

TEST(Fitters, InterpolatingHighDegreeIsIllConditioned) {
  // Equispaced interpolation at degree 150 has an exponentially large condition number.
  ApproxRange r;
  expect_code(ErrorCode::kIllConditioned, [&] { fit_ols([](double x) { return x; }, r, 150, 151); });
}

TEST(Fitters, WeightedBeatsOlsOnInnerIntervalForSilu) {
  const auto& preset = activation_preset("mnist");
  const auto r = range_from_moments(0.5 * (preset.lo + preset.hi), (preset.hi - preset.lo) / 10, preset.lo,
                                    preset.hi);
  const auto w = WeightScheme::around(r);
  const auto wls = fit_weighted_ls(silu, r, 10, w);
  const auto ols = fit_ols(silu, r, 10);
  EXPECT_LT(measure_fit(silu, wls, r, w).rmse_inner, measure_fit(silu, ols, r, w).rmse_inner);
}

TEST(FittersProperty, WeightedLsIsLocalMinimum) {
  const ApproxRange r = range_from_moments(0, 2, -10, 10);
  const auto w = WeightScheme::around(r);
  const auto p = fit_weighted_ls(silu, r, 6, w);
  const int n = default_sample_count(6);
  const auto objective = [&](const Polynomial& q) {
    double s = 0;
    for (double x : sample_grid(r.lo, r.hi, n)) s += w.weight(x) * std::pow(silu(x) - q(x), 2);
    return s;
  };
  const double base = objective(p);
  for (std::size_t i = 0; i < p.coeffs().size(); ++i) {
    for (double d : {-1e-3, 1e-3}) {
      auto c = p.coeffs();
      c[i] += d;
      EXPECT_GE(objective(Polynomial(c)), base) << "coefficient " << i << " delta " << d;
    }
  }
}

TEST(Remez, AbsoluteValueDegreeTwo) {
  // Minimax quadratic for |x| on [-1, 1] is x^2 + 1/8, error 1/8.
  ApproxRange r;
  const auto p = fit_remez([](double x) { return std::abs(x); }, r, 2);
  expect_coeffs(p, {0.125, 0, 1}, 1e-4);
  double worst = 0;
  for (int i = 0; i <= 20000; ++i) {
    const double x = -1 + i * 1e-4;
    worst = std::max(worst, std::abs(std::abs(x) - p(x)));
  }
  EXPECT_NEAR(worst, 0.125, 1e-4);
}

TEST(Remez, EquioscillatesWithAlternatingSigns) {
  const std::vector<ScalarFn> basis{[](double) { return 1.0; }, [](double x) { return x; },
                                    [](double x) { return x * x; }, [](double x) { return x * x * x; }};
  const ScalarFn target = [](double x) { return std::exp(x); };
  const auto res = remez(basis, target, -1, 1);
  ASSERT_EQ(res.reference.size(), basis.size() + 1);
  EXPECT_LE(res.spread, 0.1);
  double prev = 0;
  for (double x : res.reference) {
    double fx = 0;
    for (std::size_t j = 0; j < basis.size(); ++j) fx += res.coeffs[j] * basis[j](x);
    const double e = target(x) - fx;
    EXPECT_NEAR(std::abs(e), res.max_error, 0.1 * res.max_error);
    if (prev != 0) EXPECT_LT(prev * e, 0);
    prev = e;
  }
}

TEST(Remez, NotWorseThanOlsInMaxErrorForSilu) {
  const auto r = range_from_moments(1.17, 2.714, -12.4, 14.74);
  const auto rem = fit_remez(silu, r, 10);
  const auto ols = fit_ols(silu, r, 10);
  const auto w = WeightScheme::uniform();
  EXPECT_LE(measure_fit(silu, rem, r, w).max_error, measure_fit(silu, ols, r, w).max_error);
}

TEST(Remez, NonConvergenceAfterCap) {
  RemezOptions o;
  o.max_iterations = 1;
  o.tolerance = 1e-15;
  o.accept_spread = 1e-12;
  ApproxRange r{-8, 8, 0, 1, false};
  expect_code(ErrorCode::kRemezNonConvergence, [&] { fit_remez(silu, r, 12, o); });
}

TEST(Reports, CsvShape) {
  FitReport rep{"wls", 10, range_from_moments(0, 1, -5, 5), {0.1, 0.2, 0.3, 0.4}};
  EXPECT_EQ(fit_report_csv_header(), "method,degree,range_lo,range_hi,rmse_uniform,rmse_weighted,rmse_inner,max_error");
  const auto row = fit_report_csv_row(rep);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 7);
  EXPECT_EQ(row.rfind("wls,10,", 0), 0u);
}

// ---- composite sign ----

TEST(CompositeSign, StagesAreOddAndDepthFitsBudget) {
  const auto& cs = default_composite_sign();
  EXPECT_EQ(cs.alpha(), 7);
  EXPECT_DOUBLE_EQ(cs.delta(), 0x1p-7);
  for (const auto& s : cs.stages()) EXPECT_TRUE(s.is_odd());
  EXPECT_LE(cs.depth(), 15);
  EXPECT_DOUBLE_EQ(cs.step(0.0), 0.5);
  expect_code(ErrorCode::kInvalidArgument, [] { CompositeSign({Polynomial({1, 1})}, 7, 1e-3); });
}

TEST(CompositeSignProperty, CertifiedOnDenseGrid) {
  const auto& cs = default_composite_sign();
  const double lo = cs.delta();
  double worst = 0;
  for (int i = 0; i <= 100000; ++i) {
    const double x = lo + (1 - lo) * i / 100000.0;
    worst = std::max({worst, std::abs(cs.sign(x) - 1), std::abs(cs.sign(-x) + 1)});
  }
  EXPECT_LE(worst, cs.target_eps());
}

TEST(CompositeSign, ScaledMatchesUnscaledOnScaledInput) {
  const auto& cs = default_composite_sign();
  const auto s = cs.scaled(0.25);
  EXPECT_DOUBLE_EQ(s.input_scale(), 0.25);
  for (double x : {-3.9, -0.5, 0.2, 3.0}) EXPECT_NEAR(s.step(x), cs.step(0.25 * x), 1e-9);
  expect_code(ErrorCode::kInvalidArgument, [&] { cs.scaled(0.0); });
}

// ---- homomorphic evaluation ----

TEST(EvalPolyHe, ConstantNeedsNoMultiplication) {
  he::CleartextBackend b(cfg(4));
  he::Evaluator ev(b);
  const auto r = eval_poly_he(ev, ev.encrypt(std::vector<double>{1, 2, 3, 4}), Polynomial({2.5}));
  EXPECT_EQ(ev.decrypt(r), std::vector<double>(4, 2.5));
  EXPECT_EQ(ev.counter().ct_mults, 0u);
  EXPECT_EQ(ev.counter().pt_mults, 0u);
}

TEST(EvalPolyHe, Square) {
  he::CleartextBackend b(cfg(4));
  he::Evaluator ev(b);
  const auto r = eval_poly_he(ev, ev.encrypt(std::vector<double>{1, 2, 3}), Polynomial({0, 0, 1}), 3);
  EXPECT_EQ(ev.decrypt(r), (std::vector<double>{1, 4, 9, 0}));
  EXPECT_EQ(r.level(), 20 - power_tree_depth(Polynomial({0, 0, 1})));
}

TEST(EvalPolyHe, DegreeFifteenWithinFiveLevels) {
  he::CleartextBackend b(cfg(8));
  he::Evaluator ev(b);
  std::vector<double> c(16);
  for (int i = 0; i < 16; ++i) c[i] = 1.0 / (i + 1);
  const auto r = eval_poly_he(ev, ev.encrypt(std::vector<double>{0.5}), Polynomial(c));
  EXPECT_LE(ev.counter().max_depth_consumed, 5);
  EXPECT_EQ(20 - r.level(), power_tree_depth(Polynomial(c)));
}

TEST(EvalPolyHe, DepthExhausted) {
  he::CleartextBackend b(cfg(8));
  he::Evaluator ev(b);
  const auto ct = ev.encrypt(std::vector<double>{0.5}, 3);
  expect_code(ErrorCode::kDepthExhausted, [&] { eval_poly_he(ev, ct, Polynomial(std::vector<double>(16, 1.0))); });
}

TEST(EvalPolyHe, ActiveSlotsStayClean) {
  he::CleartextBackend b(cfg(8));
  he::Evaluator ev(b);
  // Garbage in slots 2..7 must not leak through a masked evaluation.
  const auto ct = ev.encrypt(std::vector<double>{0.5, -1, 9, 9, 9, 9, 9, 9});
  const auto r = ev.decrypt(eval_poly_he(ev, ct, Polynomial({1, 2, 3}), 2));
  EXPECT_DOUBLE_EQ(r[0], 1 + 1 + 0.75);
  EXPECT_DOUBLE_EQ(r[1], 1 - 2 + 3);
  for (std::size_t i = 2; i < 8; ++i) EXPECT_EQ(r[i], 0.0) << i;
}

TEST(EvalPolyHeProperty, AgreesWithCleartextPolynomial) {
  he::CleartextBackend b(cfg(64));
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int degree : {1, 3, 7, 10, 15, 20}) {
    he::Evaluator ev(b);
    const auto r = range_from_moments(0, 2, -8, 8);
    const auto p = fit_weighted_ls(silu, r, degree, WeightScheme::around(r));
    std::vector<double> x(64);
    for (auto& v : x) v = r.lo + (r.hi - r.lo) * 0.5 * (u(rng) + 1);
    const auto y = ev.decrypt(eval_poly_he(ev, ev.encrypt(x), p));
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], p(x[i]), 1e-9) << degree;
  }
}

TEST(PolyComp, Ordering) {
  he::CleartextBackend b(cfg(4));
  he::Evaluator ev(b);
  const auto& cs = default_composite_sign();
  const auto a = ev.encrypt(std::vector<double>{0.5, 0.2, 0.3});
  const auto c = ev.encrypt(std::vector<double>{0.2, 0.5, 0.3});
  const auto r = ev.decrypt(poly_comp(ev, a, c, cs));
  EXPECT_NEAR(r[0], 1, cs.target_eps());
  EXPECT_NEAR(r[1], 0, cs.target_eps());
  EXPECT_EQ(r[2], 0.5);
  EXPECT_EQ(20 - ev.counter().max_depth_consumed, 20 - cs.depth());
}

TEST(PolyComp, PlainOperandAndErrors) {
  he::CleartextBackend b(cfg(4));
  he::Evaluator ev(b);
  const auto& cs = default_composite_sign();
  const auto a = ev.encrypt(std::vector<double>{0.9});
  EXPECT_NEAR(ev.decrypt(poly_comp(ev, a, ev.encode(std::vector<double>{0.1}), cs))[0], 1, cs.target_eps());
  expect_code(ErrorCode::kInputOutOfRange,
              [&] { poly_comp(ev, ev.encrypt(std::vector<double>{1.5}), ev.encode(std::vector<double>{-0.6}), cs); });
  expect_code(ErrorCode::kDepthExhausted,
              [&] { poly_comp(ev, ev.encrypt(std::vector<double>{0.1}, 4), ev.encode(std::vector<double>{0.0}), cs); });
}

TEST(PolyCompProperty, Antisymmetry) {
  he::CleartextBackend b(cfg(256));
  he::Evaluator ev(b);
  const auto& cs = default_composite_sign();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> x(256), y(256);
  for (auto& v : x) v = u(rng);
  for (auto& v : y) v = u(rng);
  const auto a = ev.encrypt(x), c = ev.encrypt(y);
  const auto s = ev.decrypt(ev.add(poly_comp(ev, a, c, cs), poly_comp(ev, c, a, cs)));
  for (double v : s) EXPECT_NEAR(v, 1.0, 2 * cs.target_eps());
}

}  // namespace
}  // namespace hekan::approx
