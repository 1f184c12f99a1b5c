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

// Encrypted KAN inference on the slot simulator: input encoding, BSGS
// matrix-vector products, the lazy and naive layer pipelines, a static depth
// planner and count-based benchmarking.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hekan/bspline.hpp"
#include "hekan/he_core.hpp"
#include "hekan/kan_model.hpp"

namespace hekan::infer {

/// h x w x c tensor; element (y, x, ch) lives at (y * w + x) * c + ch.
struct Tensor3 {
  std::size_t h = 0, w = 0, c = 0;
  std::vector<double> data;

  static Tensor3 from_raster(std::size_t h, std::size_t w, std::size_t c, std::vector<double> data);
  double& at(std::size_t y, std::size_t x, std::size_t ch) { return data[(y * w + x) * c + ch]; }
  double at(std::size_t y, std::size_t x, std::size_t ch) const { return data[(y * w + x) * c + ch]; }
};

/// Raster order in the first h*w*c slots, zero elsewhere, at the full budget.
he::CipherText encrypt_input(he::Evaluator& ev, const Tensor3& tensor, const kan::KanModel& model);

struct BsgsSplit {
  std::size_t baby = 1;
  std::size_t giant = 1;
};
BsgsSplit default_split(std::size_t n);

/// Matrix given entry-wise so structured operands never materialize.
using EntryFn = std::function<double(std::size_t row, std::size_t col)>;

/// out[r] = sum_c W(r, c) v[c] for r < rows. v must be zero beyond its first
/// `cols` slots. One level.
///
/// Square and tall matrices use max(rows, cols) cyclic diagonals and leave
/// every slot from `rows` on at zero. Wide matrices fold bit_ceil(rows)
/// diagonals over a power-of-two multiple of it, which costs log2 of the ratio
/// in extra rotations and leaves partial sums above bit_ceil(rows).
he::CipherText bsgs_matvec(he::Evaluator& ev, const EntryFn& entry, std::size_t rows, std::size_t cols,
                           const he::CipherText& v, std::optional<BsgsSplit> split = std::nullopt);
he::CipherText bsgs_matvec(he::Evaluator& ev, const Eigen::MatrixXd& w, const he::CipherText& v,
                           std::optional<BsgsSplit> split = std::nullopt);

enum class Path { kLazy, kNaive };
std::string to_string(Path p);
Path path_from_string(const std::string& s);

struct PipelineConfig {
  bspline::ComparatorMode comparator_mode = bspline::ComparatorMode::kComposite;
  Path path = Path::kLazy;
  he::BackendConfig backend;
  std::optional<BsgsSplit> bsgs_split;

  bspline::Comparator comparator() const;
  void validate() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct StageDepth {
  std::string stage;
  int depth = 0;
};

struct LayerPlan {
  std::vector<StageDepth> spline_stages;
  std::vector<StageDepth> silu_stages;
  int spline_depth = 0;
  int silu_depth = 0;
  int depth = 0;  // max of the branches
  bool refresh_before = false;
  int level_in = 0;
  int level_out = 0;
};

struct ModelPlan {
  std::vector<LayerPlan> layers;
  int budget = 0;
  int total_depth = 0;
  int refreshes = 0;

  std::string describe() const;
  nlohmann::json to_json() const;
};

/// Per-stage depth of one layer; throws kDepthBudgetInfeasible if it cannot fit `budget`.
LayerPlan plan_layer(const kan::KanLayer& layer, const PipelineConfig& cfg, int budget);
/// Static schedule starting from `start_level` (the budget when negative).
ModelPlan plan_model(const kan::KanModel& model, const PipelineConfig& cfg, int start_level = -1);

struct LayerStats {
  he::OpCounter ops;
  int depth_consumed = 0;
  double wall_ms = 0.0;
  std::size_t near_knot = 0;

  nlohmann::json to_json() const;
};

struct InferenceStats {
  std::vector<LayerStats> layers;
  LayerStats total;

  nlohmann::json to_json() const;
};

/// One encrypted layer. Only the first n_i input slots are read (both branches
/// mask); only the first n_o output slots are meaningful.
he::CipherText layer_forward_he(he::Evaluator& ev, const kan::KanLayer& layer, const he::CipherText& ct_in,
                                const PipelineConfig& cfg, LayerStats* stats = nullptr);

struct HeResult {
  he::CipherText ct;
  InferenceStats stats;
  ModelPlan plan;
};

/// Plans first (kDepthBudgetInfeasible), then runs layer by layer, refreshing where planned.
HeResult model_forward_he(he::Evaluator& ev, const kan::KanModel& model, const he::CipherText& ct_in,
                          const PipelineConfig& cfg);

struct EncryptedRun {
  std::vector<std::vector<double>> outputs;
  std::vector<InferenceStats> stats;
  ModelPlan plan;
};

/// Encrypts, evaluates and decrypts each input on its own evaluator (stream = index),
/// fanning out across threads.
EncryptedRun run_encrypted(const kan::KanModel& model, const std::vector<std::vector<double>>& inputs,
                           const PipelineConfig& cfg, unsigned threads = 0);

struct BenchConfig {
  std::string name;
  PipelineConfig pipeline;
};

struct BenchRow {
  std::string config;
  Path path = Path::kLazy;
  he::OpCounter ops;
  int depth = 0;
  double wall_ms = 0.0;
  /// Naive weighted cost over this row's; empty when the config has no naive row.
  std::optional<double> speedup_vs_naive_counts;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  static std::string csv_header();
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Counters come from the first input (they do not depend on data); wall_ms is
/// the mean over inputs. Configs run concurrently.
BenchReport bench_compare(const kan::KanModel& model, const std::vector<std::vector<double>>& inputs,
                          const std::vector<BenchConfig>& cfgs);

}  // namespace hekan::infer
