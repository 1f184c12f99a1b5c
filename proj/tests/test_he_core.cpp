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
#include <random>

#include "hekan/error.hpp"
#include "hekan/he_core.hpp"

namespace hekan::he {
namespace {

BackendConfig small(std::size_t slots = 8, int depth = 20, double noise = 0.0) {
  BackendConfig c;
  c.slot_count = slots;
  c.depth_budget = depth;
  c.noise_std = noise;
  return c;
}

std::vector<double> head(const std::vector<double>& v, std::size_t n) { return {v.begin(), v.begin() + n}; }

template <class Fn>
void expect_code(ErrorCode code, Fn&& fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(HeCore, AddIsSlotwise) {
  CleartextBackend b(small());
  Evaluator ev(b);
  const std::vector<double> x{1, 2}, y{3, 4};
  const auto r = ev.add(ev.encrypt(x), ev.encrypt(y));
  EXPECT_EQ(head(ev.decrypt(r), 2), (std::vector<double>{4, 6}));
  EXPECT_EQ(r.level(), 20);
  EXPECT_EQ(ev.counter().adds, 1u);
}

TEST(HeCore, PlainMultiplyByOnesKeepsSlotsAndDropsLevel) {
  CleartextBackend b(small());
  Evaluator ev(b);
  const std::vector<double> x{1.5, -2, 3};
  const auto r = ev.multiply(ev.encrypt(x), PlainVector::filled(1.0, 8));
  EXPECT_EQ(head(ev.decrypt(r), 3), x);
  EXPECT_EQ(r.level(), 19);
  EXPECT_EQ(ev.counter().pt_mults, 1u);
}

TEST(HeCore, CiphertextMultiplyAtFullBudget) {
  CleartextBackend b(small());
  Evaluator ev(b);
  const std::vector<double> x{2, 3}, y{5, 7};
  const auto r = ev.multiply(ev.encrypt(x), ev.encrypt(y));
  EXPECT_EQ(r.level(), 19);
  EXPECT_EQ(head(ev.decrypt(r), 2), (std::vector<double>{10, 21}));
  EXPECT_EQ(ev.counter().ct_mults, 1u);
}

TEST(HeCore, LevelIsMinimumOfOperands) {
  CleartextBackend b(small());
  Evaluator ev(b);
  const std::vector<double> x{1};
  const auto lo = ev.encrypt(x, 3);
  const auto hi = ev.encrypt(x, 9);
  EXPECT_EQ(ev.add(lo, hi).level(), 3);
  EXPECT_EQ(ev.sub(hi, lo).level(), 3);
  EXPECT_EQ(ev.multiply(hi, lo).level(), 2);
}

TEST(HeCore, SubtractionOrder) {
  CleartextBackend b(small());
  Evaluator ev(b);
  const std::vector<double> a{5, 1}, c{2, 4};
  EXPECT_EQ(head(ev.decrypt(ev.sub(ev.encrypt(a), ev.encode(c))), 2), (std::vector<double>{3, -3}));
  EXPECT_EQ(head(ev.decrypt(ev.sub(ev.encode(c), ev.encrypt(a))), 2), (std::vector<double>{-3, 3}));
  EXPECT_EQ(ev.counter().subs, 2u);
}

TEST(HeCore, SlotwiseDispatch) {
  CleartextBackend b(small());
  Evaluator ev(b);
  const std::vector<double> a{2, 3}, c{4, 5};
  const auto x = ev.encrypt(a), y = ev.encrypt(c);
  EXPECT_EQ(head(ev.decrypt(ev.slotwise(SlotOp::kAdd, x, y)), 2), (std::vector<double>{6, 8}));
  EXPECT_EQ(head(ev.decrypt(ev.slotwise(SlotOp::kSub, x, y)), 2), (std::vector<double>{-2, -2}));
  EXPECT_EQ(head(ev.decrypt(ev.slotwise(SlotOp::kMulCt, x, y)), 2), (std::vector<double>{8, 15}));
  EXPECT_EQ(head(ev.decrypt(ev.slotwise(SlotOp::kMulPt, x, ev.encode(c))), 2), (std::vector<double>{8, 15}));
}

TEST(HeCore, LengthMismatch) {
  CleartextBackend b(small(8));
  Evaluator ev(b);
  const std::vector<double> x{1};
  const auto ct = ev.encrypt(x);
  const PlainVector wrong(x, 16);
  expect_code(ErrorCode::kLengthMismatch, [&] { ev.multiply(ct, wrong); });
  expect_code(ErrorCode::kLengthMismatch, [&] { ev.add(ct, wrong); });
}

TEST(HeCore, MultiplyAtLevelZeroIsExhausted) {
  CleartextBackend b(small());
  Evaluator ev(b);
  const std::vector<double> x{1};
  const auto z = ev.encrypt(x, 0);
  const auto one = ev.encrypt(x, 1);
  expect_code(ErrorCode::kDepthExhausted, [&] { ev.multiply(z, one); });
  expect_code(ErrorCode::kDepthExhausted, [&] { ev.multiply(one, z); });
  expect_code(ErrorCode::kDepthExhausted, [&] { ev.multiply(z, 2.0); });
  EXPECT_EQ(ev.multiply(one, one).level(), 0);
  EXPECT_EQ(ev.add(z, z).level(), 0);
}

TEST(HeCore, RotateLeftAndRight) {
  CleartextBackend b(small(4));
  Evaluator ev(b);
  const std::vector<double> x{1, 2, 3, 4};
  const auto ct = ev.encrypt(x);
  EXPECT_EQ(ev.decrypt(ev.rotate(ct, 1)), (std::vector<double>{2, 3, 4, 1}));
  EXPECT_EQ(ev.decrypt(ev.rotate(ct, -1)), (std::vector<double>{4, 1, 2, 3}));
  EXPECT_EQ(ev.counter().rotations, 2u);
  EXPECT_EQ(ev.rotate(ct, 1).level(), ct.level());
}

TEST(HeCore, RotateByZeroIsFree) {
  CleartextBackend b(small(4));
  Evaluator ev(b);
  const std::vector<double> x{1, 2, 3};
  const auto ct = ev.encrypt(x);
  EXPECT_EQ(ev.decrypt(ev.rotate(ct, 0)), ev.decrypt(ct));
  EXPECT_EQ(ev.counter().rotations, 0u);
}

TEST(HeCore, RotateOutOfRange) {
  CleartextBackend b(small(4));
  Evaluator ev(b);
  const auto ct = ev.encrypt(std::vector<double>{1});
  expect_code(ErrorCode::kInvalidArgument, [&] { ev.rotate(ct, 4); });
  expect_code(ErrorCode::kInvalidArgument, [&] { ev.rotate(ct, -4); });
  EXPECT_NO_THROW(ev.rotate(ct, 3));
  EXPECT_NO_THROW(ev.rotate(ct, -3));
}

TEST(HeCore, EncryptRoundTripPads) {
  CleartextBackend b(small(8));
  Evaluator ev(b);
  const std::vector<double> x{1, 2};
  const auto ct = ev.encrypt(x, 20);
  EXPECT_EQ(ev.decrypt(ct), (std::vector<double>{1, 2, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(ct.level(), 20);
  EXPECT_EQ(ev.decrypt(ev.encrypt(std::vector<double>{})), std::vector<double>(8, 0.0));
}

TEST(HeCore, EncryptRejectsOversizeAndBadLevel) {
  CleartextBackend b(small(4, 5));
  Evaluator ev(b);
  expect_code(ErrorCode::kInputTooLong, [&] { ev.encrypt(std::vector<double>(5, 1.0)); });
  expect_code(ErrorCode::kInvalidArgument, [&] { ev.encrypt(std::vector<double>{1}, 6); });
  expect_code(ErrorCode::kInvalidArgument, [&] { ev.encrypt(std::vector<double>{1}, -1); });
  expect_code(ErrorCode::kInputTooLong, [&] { PlainVector(std::vector<double>(5, 1.0), 4); });
}

TEST(HeCore, NoisyRoundTripWithinBound) {
  // P(|N(0, 1e-8)| > 1e-6) is astronomically small; demand at least 99.9 %.
  NoisyBackend b(small(16, 20, 1e-8));
  Evaluator ev(b, 3);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  std::size_t ok = 0, total = 0;
  for (int t = 0; t < 625; ++t) {
    std::vector<double> x(16);
    for (auto& v : x) v = u(rng);
    const auto y = ev.decrypt(ev.encrypt(x));
    for (std::size_t i = 0; i < 16; ++i, ++total) ok += std::abs(y[i] - x[i]) <= 1e-6;
  }
  EXPECT_EQ(total, 10000u);
  EXPECT_GE(static_cast<double>(ok) / total, 0.999);
}

TEST(HeCore, NoisyStreamsAreDeterministic) {
  NoisyBackend b(small(8, 20, 1e-6));
  const std::vector<double> x{1, 2, 3};
  Evaluator a(b, 4), c(b, 4), d(b, 5);
  const auto ya = a.decrypt(a.encrypt(x));
  EXPECT_EQ(ya, c.decrypt(c.encrypt(x)));
  EXPECT_NE(ya, d.decrypt(d.encrypt(x)));
}

TEST(HeCore, ConfigValidationAndJson) {
  BackendConfig c = small(64, 7, 1e-9);
  c.rng_seed = 42;
  const auto back = BackendConfig::from_json(c.to_json());
  EXPECT_EQ(back.slot_count, 64u);
  EXPECT_EQ(back.depth_budget, 7);
  EXPECT_EQ(back.noise_std, 1e-9);
  EXPECT_EQ(back.rng_seed, 42u);
  expect_code(ErrorCode::kInvalidArgument, [] { small(12).validate(); });
  expect_code(ErrorCode::kInvalidArgument, [] { small(0).validate(); });
  expect_code(ErrorCode::kInvalidArgument, [] { small(8, -1).validate(); });
  expect_code(ErrorCode::kInvalidArgument, [] { small(8, 2, -1.0).validate(); });
  expect_code(ErrorCode::kSchemaMismatch, [] { BackendConfig::from_json(nlohmann::json::array()); });
  expect_code(ErrorCode::kSchemaMismatch, [] { BackendConfig::from_json({{"slot_count", "many"}}); });
  EXPECT_EQ(BackendConfig::from_json(nlohmann::json::object()).slot_count, 32768u);
}

TEST(HeCore, MakeBackendPicksByNoise) {
  EXPECT_TRUE(make_backend(small())->exact());
  EXPECT_FALSE(make_backend(small(8, 20, 1e-9))->exact());
  EXPECT_EQ(make_backend(small(8, 20, 1e-9))->name(), "noisy");
}

TEST(HeCore, RefreshRestoresLevel) {
  CleartextBackend b(small(8, 4));
  Evaluator ev(b);
  const std::vector<double> x{0.5, 2};
  auto ct = ev.encrypt(x);
  for (int i = 0; i < 4; ++i) ct = ev.multiply(ct, 1.0);
  EXPECT_EQ(ct.level(), 0);
  ct = ev.refresh(ct, 4);
  EXPECT_EQ(ct.level(), 4);
  EXPECT_EQ(head(ev.decrypt(ct), 2), x);
  EXPECT_EQ(ev.counter().refreshes, 1u);
  expect_code(ErrorCode::kInvalidArgument, [&] { ev.refresh(ct, 5); });
}

TEST(HeCore, MapSlotsConsumesLevelsWithoutCounting) {
  CleartextBackend b(small(4, 10));
  Evaluator ev(b);
  const auto ct = ev.encrypt(std::vector<double>{-1, 2});
  const auto r = ev.map_slots(ct, [](double v) { return v * v; }, 3);
  EXPECT_EQ(r.level(), 7);
  EXPECT_EQ(head(ev.decrypt(r), 2), (std::vector<double>{1, 4}));
  EXPECT_EQ(ev.counter().mults(), 0u);
  expect_code(ErrorCode::kDepthExhausted, [&] { ev.map_slots(ev.encrypt(std::vector<double>{1}, 2), [](double v) { return v; }, 3); });
}

TEST(HeCore, CounterArithmetic) {
  OpCounter a;
  a.adds = 3;
  a.rotations = 2;
  a.pt_mults = 1;
  a.ct_mults = 4;
  OpCounter b = a;
  b.adds = 5;
  b.max_depth_consumed = 6;
  const OpCounter sum = a + b;
  EXPECT_EQ(sum.adds, 8u);
  EXPECT_EQ(sum.mults(), 10u);
  EXPECT_EQ(sum.max_depth_consumed, 6);
  EXPECT_EQ((sum - a).adds, 5u);
  EXPECT_EQ(a.weighted_cost(), 7u);
  EXPECT_EQ(a.to_json().at("rotations"), 2);
}

// Properties over random programs.

TEST(HeCoreProperty, RotationGroupLaw) {
  CleartextBackend b(small(16));
  Evaluator ev(b);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<long> step(-15, 15);
  std::vector<double> x(16);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i) * 1.25 - 3;
  const auto ct = ev.encrypt(x);
  for (int t = 0; t < 200; ++t) {
    const long s = step(rng), u = step(rng);
    long sum = (s + u) % 16;
    if (sum > 15) sum -= 16;
    if (sum < -15) sum += 16;
    EXPECT_EQ(ev.decrypt(ev.rotate(ev.rotate(ct, s), u)), ev.decrypt(ev.rotate(ct, sum))) << s << " " << u;
  }
}

TEST(HeCoreProperty, CleartextMatchesRawVectors) {
  CleartextBackend b(small(8, 30));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2, 2);
  std::uniform_int_distribution<int> pick(0, 4);
  for (int trial = 0; trial < 50; ++trial) {
    Evaluator ev(b);
    std::vector<double> raw(8), other(8);
    for (auto& v : raw) v = u(rng);
    for (auto& v : other) v = u(rng);
    auto ct = ev.encrypt(raw);
    const auto ct_other = ev.encrypt(other);
    for (int step = 0; step < 12; ++step) {
      switch (pick(rng)) {
        case 0:
          ct = ev.add(ct, ct_other);
          for (std::size_t i = 0; i < 8; ++i) raw[i] = raw[i] + other[i];
          break;
        case 1:
          ct = ev.sub(ct, ev.encode(other));
          for (std::size_t i = 0; i < 8; ++i) raw[i] = raw[i] - other[i];
          break;
        case 2:
          ct = ev.multiply(ct, ct_other);
          for (std::size_t i = 0; i < 8; ++i) raw[i] = raw[i] * other[i];
          break;
        case 3:
          ct = ev.multiply(ct, 0.75);
          for (auto& v : raw) v = v * 0.75;
          break;
        default:
          ct = ev.rotate(ct, 3);
          std::rotate(raw.begin(), raw.begin() + 3, raw.end());
      }
    }
    EXPECT_EQ(ev.decrypt(ct), raw);
  }
}

TEST(HeCoreProperty, DepthLedgerFollowsLongestChain) {
  CleartextBackend b(small(8, 20));
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> coin(0, 2);
  for (int trial = 0; trial < 40; ++trial) {
    Evaluator ev(b);
    const auto fresh = ev.encrypt(std::vector<double>{1});
    auto ct = fresh;
    int chain = 0;
    for (int step = 0; step < 15; ++step) {
      switch (coin(rng)) {
        case 0:
          ct = ev.multiply(ct, fresh);
          ++chain;
          break;
        case 1:
          ct = ev.add(ct, ev.rotate(ct, 1));
          break;
        default:
          ct = ev.multiply(ct, ev.encode(std::vector<double>{2}));
          ++chain;
      }
    }
    EXPECT_EQ(ct.level(), 20 - chain);
    EXPECT_EQ(ev.counter().max_depth_consumed, chain);
  }
}

TEST(HeCoreProperty, CountersAreExact) {
  CleartextBackend b(small(32));
  Evaluator ev(b);
  auto ct = ev.encrypt(std::vector<double>{1, 2, 3});
  for (long k = 1; k <= 17; ++k) ct = ev.rotate(ct, k % 2 ? k : -k);
  EXPECT_EQ(ev.counter().rotations, 17u);
  ev.reset_counter();
  EXPECT_EQ(ev.counter(), OpCounter{});
}

}  // namespace
}  // namespace hekan::he
