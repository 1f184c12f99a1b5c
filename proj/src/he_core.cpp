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

#include "hekan/he_core.hpp"

#include <algorithm>
#include <bit>
#include <fstream>

#include "hekan/error.hpp"

namespace hekan::he {

void BackendConfig::validate() const {
  if (slot_count == 0 || !std::has_single_bit(slot_count)) {
    throw Error(ErrorCode::kInvalidArgument,
                "slot_count must be a power of two, got " + std::to_string(slot_count));
  }
  if (depth_budget < 0) {
    throw Error(ErrorCode::kInvalidArgument, "depth_budget must be non-negative");
  }
  if (!(noise_std >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise_std must be non-negative");
  }
}

BackendConfig BackendConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kSchemaMismatch, "backend config must be an object");
  BackendConfig c;
  try {
    c.slot_count = j.value("slot_count", c.slot_count);
    c.depth_budget = j.value("depth_budget", c.depth_budget);
    c.noise_std = j.value("noise_std", c.noise_std);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("backend config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json BackendConfig::to_json() const {
  return {{"slot_count", slot_count},
          {"depth_budget", depth_budget},
          {"noise_std", noise_std},
          {"rng_seed", rng_seed}};
}

BackendConfig BackendConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kCorruptFile, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, path + ": " + e.what());
  }
  return from_json(j);
}

PlainVector::PlainVector(std::span<const double> values, std::size_t slot_count)
    : slots_(slot_count, 0.0) {
  if (values.size() > slot_count) {
    throw Error(ErrorCode::kInputTooLong, std::to_string(values.size()) + " values for " +
                                              std::to_string(slot_count) + " slots");
  }
  std::copy(values.begin(), values.end(), slots_.begin());
}

PlainVector PlainVector::filled(double value, std::size_t slot_count) {
  std::vector<double> v(slot_count, value);
  return PlainVector(v, slot_count);
}

OpCounter& OpCounter::operator+=(const OpCounter& other) {
  adds += other.adds;
  subs += other.subs;
  ct_mults += other.ct_mults;
  pt_mults += other.pt_mults;
  rotations += other.rotations;
  refreshes += other.refreshes;
  max_depth_consumed = std::max(max_depth_consumed, other.max_depth_consumed);
  return *this;
}

OpCounter operator-(const OpCounter& later, const OpCounter& earlier) {
  OpCounter d;
  d.adds = later.adds - earlier.adds;
  d.subs = later.subs - earlier.subs;
  d.ct_mults = later.ct_mults - earlier.ct_mults;
  d.pt_mults = later.pt_mults - earlier.pt_mults;
  d.rotations = later.rotations - earlier.rotations;
  d.refreshes = later.refreshes - earlier.refreshes;
  d.max_depth_consumed = later.max_depth_consumed;
  return d;
}

nlohmann::json OpCounter::to_json() const {
  return {{"adds", adds},           {"subs", subs},         {"ct_mults", ct_mults},
          {"pt_mults", pt_mults},   {"rotations", rotations}, {"refreshes", refreshes},
          {"max_depth_consumed", max_depth_consumed}};
}

Backend::Backend(BackendConfig config) : config_(config) { config_.validate(); }

void NoisyBackend::perturb(std::span<double> slots, std::mt19937_64& rng) const {
  std::normal_distribution<double> noise(0.0, config().noise_std);
  for (double& s : slots) s += noise(rng);
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  if (config.noise_std > 0.0) return std::make_unique<NoisyBackend>(config);
  return std::make_unique<CleartextBackend>(config);
}

Evaluator::Evaluator(const Backend& backend, std::uint64_t stream)
    : backend_(&backend),
      rng_(backend.config().rng_seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1))) {}

CipherText Evaluator::make(std::vector<double> slots, int level) {
  backend_->perturb(slots, rng_);
  counter_.max_depth_consumed = std::max(counter_.max_depth_consumed, depth_budget() - level);
  return CipherText(std::move(slots), level, next_tag_++);
}

void Evaluator::require_length(std::size_t n) const {
  if (n != slot_count()) {
    throw Error(ErrorCode::kLengthMismatch, "operand has " + std::to_string(n) + " slots, expected " +
                                                std::to_string(slot_count()));
  }
}

void Evaluator::require_level(const CipherText& a, std::string_view what) const {
  if (a.level() < 1) {
    throw Error(ErrorCode::kDepthExhausted,
                std::string(what) + " on a ciphertext at level " + std::to_string(a.level()));
  }
}

CipherText Evaluator::encrypt(std::span<const double> values, int level) {
  if (level < 0 || level > depth_budget()) {
    throw Error(ErrorCode::kInvalidArgument, "encryption level " + std::to_string(level) +
                                                 " outside [0, " + std::to_string(depth_budget()) + "]");
  }
  if (values.size() > slot_count()) {
    throw Error(ErrorCode::kInputTooLong, std::to_string(values.size()) + " values for " +
                                              std::to_string(slot_count()) + " slots");
  }
  std::vector<double> slots(slot_count(), 0.0);
  std::copy(values.begin(), values.end(), slots.begin());
  return make(std::move(slots), level);
}

CipherText Evaluator::encrypt_constant(double value, int level) {
  std::vector<double> slots(slot_count(), value);
  return CipherText(std::move(slots), level, next_tag_++);
}

std::vector<double> Evaluator::decrypt(const CipherText& ct) const {
  return {ct.slots().begin(), ct.slots().end()};
}

namespace {

template <class Fn>
std::vector<double> zip(std::span<const double> a, std::span<const double> b, Fn fn) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i], b[i]);
  return out;
}

}  // namespace

CipherText Evaluator::add(const CipherText& a, const CipherText& b) {
  require_length(a.size());
  require_length(b.size());
  ++counter_.adds;
  return make(zip(a.slots(), b.slots(), std::plus<>{}), std::min(a.level(), b.level()));
}

CipherText Evaluator::add(const CipherText& a, const PlainVector& b) {
  require_length(a.size());
  require_length(b.size());
  ++counter_.adds;
  return make(zip(a.slots(), b.slots(), std::plus<>{}), a.level());
}

CipherText Evaluator::sub(const CipherText& a, const CipherText& b) {
  require_length(a.size());
  require_length(b.size());
  ++counter_.subs;
  return make(zip(a.slots(), b.slots(), std::minus<>{}), std::min(a.level(), b.level()));
}

CipherText Evaluator::sub(const CipherText& a, const PlainVector& b) {
  require_length(a.size());
  require_length(b.size());
  ++counter_.subs;
  return make(zip(a.slots(), b.slots(), std::minus<>{}), a.level());
}

CipherText Evaluator::sub(const PlainVector& b, const CipherText& a) {
  require_length(a.size());
  require_length(b.size());
  ++counter_.subs;
  return make(zip(b.slots(), a.slots(), std::minus<>{}), a.level());
}

CipherText Evaluator::multiply(const CipherText& a, const CipherText& b) {
  require_length(a.size());
  require_length(b.size());
  require_level(a, "ciphertext multiply");
  require_level(b, "ciphertext multiply");
  ++counter_.ct_mults;
  return make(zip(a.slots(), b.slots(), std::multiplies<>{}), std::min(a.level(), b.level()) - 1);
}

CipherText Evaluator::multiply(const CipherText& a, const PlainVector& b) {
  require_length(a.size());
  require_length(b.size());
  require_level(a, "plaintext multiply");
  ++counter_.pt_mults;
  return make(zip(a.slots(), b.slots(), std::multiplies<>{}), a.level() - 1);
}

CipherText Evaluator::multiply(const CipherText& a, double scalar) {
  require_length(a.size());
  require_level(a, "plaintext multiply");
  ++counter_.pt_mults;
  std::vector<double> out(a.slots().begin(), a.slots().end());
  for (double& s : out) s *= scalar;
  return make(std::move(out), a.level() - 1);
}

CipherText Evaluator::slotwise(SlotOp op, const CipherText& a, const CipherText& b) {
  switch (op) {
    case SlotOp::kAdd: return add(a, b);
    case SlotOp::kSub: return sub(a, b);
    case SlotOp::kMulCt: return multiply(a, b);
    case SlotOp::kMulPt: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "mul_pt needs a plaintext operand");
}

CipherText Evaluator::slotwise(SlotOp op, const CipherText& a, const PlainVector& b) {
  switch (op) {
    case SlotOp::kAdd: return add(a, b);
    case SlotOp::kSub: return sub(a, b);
    case SlotOp::kMulPt: return multiply(a, b);
    case SlotOp::kMulCt: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "mul_ct needs a ciphertext operand");
}

CipherText Evaluator::rotate(const CipherText& a, long t) {
  require_length(a.size());
  const long n = static_cast<long>(slot_count());
  if (t <= -n || t >= n) {
    throw Error(ErrorCode::kInvalidArgument,
                "rotation step " + std::to_string(t) + " out of range for " + std::to_string(n) + " slots");
  }
  if (t == 0) return a;
  ++counter_.rotations;
  const long shift = ((t % n) + n) % n;
  std::vector<double> out(a.slots().begin(), a.slots().end());
  std::rotate(out.begin(), out.begin() + shift, out.end());
  return make(std::move(out), a.level());
}

CipherText Evaluator::refresh(const CipherText& a, int level) {
  require_length(a.size());
  if (level < 0 || level > depth_budget()) {
    throw Error(ErrorCode::kInvalidArgument, "refresh level " + std::to_string(level) + " outside budget");
  }
  ++counter_.refreshes;
  return make({a.slots().begin(), a.slots().end()}, level);
}

CipherText Evaluator::map_slots(const CipherText& a, const std::function<double(double)>& fn,
                                int levels) {
  require_length(a.size());
  if (a.level() < levels) {
    throw Error(ErrorCode::kDepthExhausted, "slot map needs " + std::to_string(levels) +
                                                " levels, ciphertext has " + std::to_string(a.level()));
  }
  std::vector<double> out(a.size());
  std::transform(a.slots().begin(), a.slots().end(), out.begin(), fn);
  return make(std::move(out), a.level() - levels);
}

}  // namespace hekan::he
