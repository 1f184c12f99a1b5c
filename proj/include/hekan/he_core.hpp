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

// Functional model of a leveled SIMD homomorphic scheme.
//
// A ciphertext is a real slot vector plus the number of multiplicative levels
// it has left. Every operation follows CKKS-style slot semantics and level
// rules; the Noisy backend adds a Gaussian perturbation to each result. No
// cryptography happens here: the point is to execute HE programs with exact
// operation counts and depth accounting.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hekan::he {

struct BackendConfig {
  std::size_t slot_count = 1u << 15;
  int depth_budget = 20;
  double noise_std = 0.0;
  std::uint64_t rng_seed = 0;

  /// Throws Error(kInvalidArgument) when an invariant is violated.
  void validate() const;

  static BackendConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static BackendConfig load(const std::string& path);
};

class PlainVector {
 public:
  PlainVector() = default;
  /// Zero-pads to slot_count; throws kInputTooLong if values do not fit.
  PlainVector(std::span<const double> values, std::size_t slot_count);
  /// Every slot set to value.
  static PlainVector filled(double value, std::size_t slot_count);

  std::span<const double> slots() const { return slots_; }
  std::size_t size() const { return slots_.size(); }
  double operator[](std::size_t i) const { return slots_[i]; }

 private:
  std::vector<double> slots_;
};

class CipherText {
 public:
  CipherText() = default;

  std::span<const double> slots() const { return slots_; }
  std::size_t size() const { return slots_.size(); }
  int level() const { return level_; }
  std::uint64_t tag() const { return tag_; }

 private:
  friend class Evaluator;
  CipherText(std::vector<double> slots, int level, std::uint64_t tag)
      : slots_(std::move(slots)), level_(level), tag_(tag) {}

  std::vector<double> slots_;
  int level_ = 0;
  std::uint64_t tag_ = 0;
};

struct OpCounter {
  std::uint64_t adds = 0;
  std::uint64_t subs = 0;
  std::uint64_t ct_mults = 0;
  std::uint64_t pt_mults = 0;
  std::uint64_t rotations = 0;
  std::uint64_t refreshes = 0;
  int max_depth_consumed = 0;

  std::uint64_t mults() const { return ct_mults + pt_mults; }
  /// Rotations plus multiplications: the cost proxy used for path comparisons.
  std::uint64_t weighted_cost() const { return rotations + mults(); }

  OpCounter& operator+=(const OpCounter& other);
  friend OpCounter operator+(OpCounter a, const OpCounter& b) { return a += b; }
  /// Counter delta between two snapshots of the same evaluation.
  friend OpCounter operator-(const OpCounter& later, const OpCounter& earlier);
  friend bool operator==(const OpCounter&, const OpCounter&) = default;

  nlohmann::json to_json() const;
};

/// Backend contract. Shipped implementations are CleartextBackend (exact) and
/// NoisyBackend; a real scheme would slot in behind the same Evaluator calls.
class Backend {
 public:
  explicit Backend(BackendConfig config);
  virtual ~Backend() = default;

  const BackendConfig& config() const { return config_; }
  virtual std::string_view name() const = 0;
  /// True when ciphertext slots are bit-exact images of the program's values.
  virtual bool exact() const = 0;
  virtual void perturb(std::span<double> slots, std::mt19937_64& rng) const = 0;

 private:
  BackendConfig config_;
};

class CleartextBackend final : public Backend {
 public:
  using Backend::Backend;
  std::string_view name() const override { return "cleartext"; }
  bool exact() const override { return true; }
  void perturb(std::span<double>, std::mt19937_64&) const override {}
};

class NoisyBackend final : public Backend {
 public:
  using Backend::Backend;
  std::string_view name() const override { return "noisy"; }
  bool exact() const override { return false; }
  void perturb(std::span<double> slots, std::mt19937_64& rng) const override;
};

/// Cleartext when noise_std == 0, Noisy otherwise.
std::unique_ptr<Backend> make_backend(const BackendConfig& config);

enum class SlotOp { kAdd, kSub, kMulCt, kMulPt };

/// One evaluation context: a backend reference, a private counter and a private
/// noise stream. Evaluators are not shared between threads; independent
/// evaluations each get their own and merge counters afterwards.
class Evaluator {
 public:
  explicit Evaluator(const Backend& backend, std::uint64_t stream = 0);

  const Backend& backend() const { return *backend_; }
  const BackendConfig& config() const { return backend_->config(); }
  std::size_t slot_count() const { return backend_->config().slot_count; }
  int depth_budget() const { return backend_->config().depth_budget; }

  /// Zero-pads to slot_count. level defaults to depth_budget.
  CipherText encrypt(std::span<const double> values, int level);
  CipherText encrypt(std::span<const double> values) { return encrypt(values, depth_budget()); }
  /// Every slot holds value; counts no operation (trivial encryption).
  CipherText encrypt_constant(double value, int level);
  std::vector<double> decrypt(const CipherText& ct) const;

  PlainVector encode(std::span<const double> values) const {
    return PlainVector(values, slot_count());
  }

  CipherText add(const CipherText& a, const CipherText& b);
  CipherText add(const CipherText& a, const PlainVector& b);
  CipherText sub(const CipherText& a, const CipherText& b);
  CipherText sub(const CipherText& a, const PlainVector& b);
  /// b - a for a plaintext minuend.
  CipherText sub(const PlainVector& b, const CipherText& a);
  CipherText multiply(const CipherText& a, const CipherText& b);
  CipherText multiply(const CipherText& a, const PlainVector& b);
  /// Plaintext product with a constant vector.
  CipherText multiply(const CipherText& a, double scalar);

  CipherText slotwise(SlotOp op, const CipherText& a, const CipherText& b);
  CipherText slotwise(SlotOp op, const CipherText& a, const PlainVector& b);

  /// t > 0 rotates left, t < 0 rotates right. |t| < slot_count.
  CipherText rotate(const CipherText& a, long t);

  /// Bootstrapping stand-in: same slots, level reset to `level`.
  CipherText refresh(const CipherText& a, int level);

  /// Simulator-only: applies fn to every slot and consumes `levels` levels
  /// without counting arithmetic. Used by the exact comparator mode.
  CipherText map_slots(const CipherText& a, const std::function<double(double)>& fn, int levels);

  const OpCounter& counter() const { return counter_; }
  void reset_counter() { counter_ = {}; }

 private:
  CipherText make(std::vector<double> slots, int level);
  void require_length(std::size_t n) const;
  void require_level(const CipherText& a, std::string_view what) const;

  const Backend* backend_;
  OpCounter counter_;
  std::mt19937_64 rng_;
  std::uint64_t next_tag_ = 1;
};

}  // namespace hekan::he
