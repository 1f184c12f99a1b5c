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

#include "hekan/he_inference.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <sstream>
#include <thread>

#include "hekan/error.hpp"
#include "hekan/poly_approx.hpp"

namespace hekan::infer {

using nlohmann::json;

Tensor3 Tensor3::from_raster(std::size_t h, std::size_t w, std::size_t c, std::vector<double> data) {
  if (data.size() != h * w * c) {
    throw Error(ErrorCode::kShapeMismatch, std::to_string(data.size()) + " values for a " + std::to_string(h) + "x" +
                                               std::to_string(w) + "x" + std::to_string(c) + " tensor");
  }
  return {h, w, c, std::move(data)};
}

he::CipherText encrypt_input(he::Evaluator& ev, const Tensor3& tensor, const kan::KanModel& model) {
  const auto& s = model.input_shape;
  if (tensor.h != s[0] || tensor.w != s[1] || tensor.c != s[2] || tensor.data.size() != tensor.h * tensor.w * tensor.c) {
    throw Error(ErrorCode::kShapeMismatch, "tensor is " + std::to_string(tensor.h) + "x" + std::to_string(tensor.w) +
                                               "x" + std::to_string(tensor.c) + ", model expects " +
                                               std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" +
                                               std::to_string(s[2]));
  }
  return ev.encrypt(tensor.data);
}

BsgsSplit default_split(std::size_t n) {
  const auto b = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))));
  return {b, std::max<std::size_t>(1, (n + b - 1) / b)};
}

he::CipherText bsgs_matvec(he::Evaluator& ev, const EntryFn& entry, std::size_t rows, std::size_t cols,
                           const he::CipherText& v, std::optional<BsgsSplit> split) {
  const std::size_t slots = ev.slot_count();
  if (rows == 0 || cols == 0) throw Error(ErrorCode::kDimensionMismatch, "empty matrix");
  if (std::max(rows, cols) > slots) {
    throw Error(ErrorCode::kDimensionMismatch, std::to_string(rows) + "x" + std::to_string(cols) +
                                                   " matrix does not fit " + std::to_string(slots) + " slots");
  }
  // Square layout: n = max(rows, cols) cyclic diagonals, diag_d[t] = W(t, (t + d) mod n).
  // Wide layout (hybrid): r = bit_ceil(rows) < n = r * 2^f >= cols, r diagonals
  // diag_d[t] = W(t mod r, (t + d) mod n), then f rotate-and-add folds.
  std::size_t n = std::max(rows, cols);
  std::size_t r = n;
  if (rows < cols) {
    const std::size_t rp = std::bit_ceil(rows);
    const std::size_t np = rp * std::bit_ceil((cols + rp - 1) / rp);
    if (np > rp && np <= slots) {
      n = np;
      r = rp;
    }
  }
  const BsgsSplit bs = split.value_or(default_split(r));
  if (bs.baby < 1 || bs.giant < 1 || bs.baby * bs.giant < r) {
    throw Error(ErrorCode::kInvalidArgument, "BSGS split " + std::to_string(bs.baby) + "x" +
                                                 std::to_string(bs.giant) + " does not cover " + std::to_string(r) +
                                                 " diagonals");
  }
  if (v.level() < 1) throw Error(ErrorCode::kDepthExhausted, "matrix-vector product on a level-0 ciphertext");

  auto diag_entry = [&](std::size_t d, std::size_t t) {
    const std::size_t row = t % r;
    const std::size_t c = (t + d) % n;
    return (row < rows && c < cols) ? entry(row, c) : 0.0;
  };
  std::vector<char> nonzero(r, 0);
  bool wraps = false;
  for (std::size_t d = 0; d < r; ++d) {
    for (std::size_t t = 0; t < n; ++t) {
      if (diag_entry(d, t) != 0.0) {
        nonzero[d] = 1;
        if (t + d >= n) wraps = true;
      }
    }
  }
  const int out_level = v.level() - 1;
  if (std::none_of(nonzero.begin(), nonzero.end(), [](char c) { return c != 0; })) {
    return ev.encrypt_constant(0.0, out_level);
  }

  he::CipherText base = v;
  if (wraps && n < slots) {
    if (2 * n > slots) {
      throw Error(ErrorCode::kDimensionMismatch, "wrapped diagonals need " + std::to_string(2 * n) + " slots");
    }
    base = ev.add(v, ev.rotate(v, -static_cast<long>(n)));
  }

  std::vector<std::optional<he::CipherText>> baby(bs.baby);
  auto baby_step = [&](std::size_t i) -> const he::CipherText& {
    if (!baby[i]) baby[i] = ev.rotate(base, static_cast<long>(i));
    return *baby[i];
  };

  std::optional<he::CipherText> out;
  std::vector<double> pt(slots);
  for (std::size_t j = 0; j < bs.giant; ++j) {
    const std::size_t shift = bs.baby * j;
    std::optional<he::CipherText> inner;
    for (std::size_t i = 0; i < bs.baby; ++i) {
      const std::size_t d = shift + i;
      if (d >= r || !nonzero[d]) continue;
      // Pre-rotate the diagonal right by `shift` so the giant-step rotation lines it up.
      std::fill(pt.begin(), pt.end(), 0.0);
      for (std::size_t t = 0; t < n; ++t) pt[(t + shift) % slots] = diag_entry(d, t);
      const he::CipherText term = ev.multiply(baby_step(i), ev.encode(pt));
      inner = inner ? ev.add(*inner, term) : term;
    }
    if (!inner) continue;
    const he::CipherText moved = ev.rotate(*inner, static_cast<long>(shift));
    out = out ? ev.add(*out, moved) : moved;
  }
  for (std::size_t s = n / 2; s >= r && r < n; s /= 2) *out = ev.add(*out, ev.rotate(*out, static_cast<long>(s)));
  return *out;
}

he::CipherText bsgs_matvec(he::Evaluator& ev, const Eigen::MatrixXd& w, const he::CipherText& v,
                           std::optional<BsgsSplit> split) {
  return bsgs_matvec(
      ev, [&w](std::size_t r, std::size_t c) { return w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)); },
      static_cast<std::size_t>(w.rows()), static_cast<std::size_t>(w.cols()), v, split);
}

std::string to_string(Path p) { return p == Path::kLazy ? "lazy" : "naive"; }

Path path_from_string(const std::string& s) {
  if (s == "lazy") return Path::kLazy;
  if (s == "naive") return Path::kNaive;
  throw Error(ErrorCode::kInvalidArgument, "unknown path '" + s + "'");
}

bspline::Comparator PipelineConfig::comparator() const {
  return comparator_mode == bspline::ComparatorMode::kExact ? bspline::Comparator::exact()
                                                            : bspline::Comparator::composite();
}

void PipelineConfig::validate() const {
  backend.validate();
  if (bsgs_split && (bsgs_split->baby < 1 || bsgs_split->giant < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "BSGS split entries must be positive");
  }
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig cfg;
  try {
    if (j.contains("comparator")) {
      const auto m = j.at("comparator").get<std::string>();
      if (m == "exact") {
        cfg.comparator_mode = bspline::ComparatorMode::kExact;
      } else if (m == "composite") {
        cfg.comparator_mode = bspline::ComparatorMode::kComposite;
      } else {
        throw Error(ErrorCode::kInvalidArgument, "unknown comparator '" + m + "'");
      }
    }
    if (j.contains("path")) cfg.path = path_from_string(j.at("path").get<std::string>());
    if (j.contains("backend")) cfg.backend = he::BackendConfig::from_json(j.at("backend"));
    if (j.contains("bsgs_split")) {
      const auto s = j.at("bsgs_split").get<std::vector<std::size_t>>();
      if (s.size() != 2) throw Error(ErrorCode::kInvalidArgument, "bsgs_split needs [baby, giant]");
      cfg.bsgs_split = BsgsSplit{s[0], s[1]};
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, e.what());
  }
  cfg.validate();
  return cfg;
}

json PipelineConfig::to_json() const {
  json j{{"comparator", comparator_mode == bspline::ComparatorMode::kExact ? "exact" : "composite"},
         {"path", to_string(path)},
         {"backend", backend.to_json()}};
  if (bsgs_split) j["bsgs_split"] = {bsgs_split->baby, bsgs_split->giant};
  return j;
}

namespace {

int sum_depth(const std::vector<StageDepth>& stages) {
  int d = 0;
  for (const auto& s : stages) d += s.depth;
  return d;
}

std::string breakdown(const LayerPlan& p) {
  std::ostringstream os;
  os << "spline branch " << p.spline_depth << " (";
  for (std::size_t i = 0; i < p.spline_stages.size(); ++i)
    os << (i ? ", " : "") << p.spline_stages[i].stage << " " << p.spline_stages[i].depth;
  os << "), silu branch " << p.silu_depth << " (";
  for (std::size_t i = 0; i < p.silu_stages.size(); ++i)
    os << (i ? ", " : "") << p.silu_stages[i].stage << " " << p.silu_stages[i].depth;
  os << ")";
  return os.str();
}

}  // namespace

LayerPlan plan_layer(const kan::KanLayer& layer, const PipelineConfig& cfg, int budget) {
  bspline::check_packing(layer.n_i(), layer.g(), layer.k(), cfg.backend.slot_count);
  const auto comparator = cfg.comparator();
  LayerPlan p;
  p.spline_stages = {{"repeat-pack", 1}, {"comparator", comparator.depth()}};
  p.spline_stages.push_back(layer.k() > 0 ? StageDepth{"recursion", layer.k()} : StageDepth{"order0-mask", 1});
  if (cfg.path == Path::kNaive) p.spline_stages.push_back({"permute", 1});
  p.spline_stages.push_back({"spline-matvec", 1});
  p.silu_stages = {{"silu-poly", approx::power_tree_depth(layer.silu_poly)}, {"base-matvec", 1}};
  p.spline_depth = sum_depth(p.spline_stages);
  p.silu_depth = sum_depth(p.silu_stages);
  p.depth = std::max(p.spline_depth, p.silu_depth);
  if (p.depth > budget) {
    throw Error(ErrorCode::kDepthBudgetInfeasible, "layer needs depth " + std::to_string(p.depth) + " > budget " +
                                                       std::to_string(budget) + ": " + breakdown(p));
  }
  return p;
}

ModelPlan plan_model(const kan::KanModel& model, const PipelineConfig& cfg, int start_level) {
  model.validate();
  ModelPlan plan;
  plan.budget = cfg.backend.depth_budget;
  int level = start_level < 0 ? plan.budget : start_level;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    LayerPlan p;
    try {
      p = plan_layer(model.layers[l], cfg, plan.budget);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDepthBudgetInfeasible) throw;
      throw Error(ErrorCode::kDepthBudgetInfeasible, "layer " + std::to_string(l) + ": " + e.what());
    }
    if (level < p.depth) {
      p.refresh_before = true;
      level = plan.budget;
      ++plan.refreshes;
    }
    p.level_in = level;
    level -= p.depth;
    p.level_out = level;
    plan.total_depth += p.depth;
    plan.layers.push_back(std::move(p));
  }
  return plan;
}

std::string ModelPlan::describe() const {
  std::ostringstream os;
  os << "depth plan (budget " << budget << "): total " << total_depth << ", refreshes " << refreshes << '\n';
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& p = layers[l];
    os << "  layer " << l << ": depth " << p.depth << ", level " << p.level_in << " -> " << p.level_out
       << (p.refresh_before ? " after refresh" : "") << "; " << breakdown(p) << '\n';
  }
  return os.str();
}

json ModelPlan::to_json() const {
  json layers_j = json::array();
  for (const auto& p : layers) {
    auto stages = [](const std::vector<StageDepth>& s) {
      json a = json::array();
      for (const auto& st : s) a.push_back({{"stage", st.stage}, {"depth", st.depth}});
      return a;
    };
    layers_j.push_back({{"spline_stages", stages(p.spline_stages)},
                        {"silu_stages", stages(p.silu_stages)},
                        {"spline_depth", p.spline_depth},
                        {"silu_depth", p.silu_depth},
                        {"depth", p.depth},
                        {"refresh_before", p.refresh_before},
                        {"level_in", p.level_in},
                        {"level_out", p.level_out}});
  }
  return {{"budget", budget}, {"total_depth", total_depth}, {"refreshes", refreshes}, {"layers", layers_j}};
}

json LayerStats::to_json() const {
  json j = ops.to_json();
  j["depth_consumed"] = depth_consumed;
  j["wall_ms"] = wall_ms;
  j["near_knot"] = near_knot;
  return j;
}

json InferenceStats::to_json() const {
  json layers_j = json::array();
  for (const auto& l : layers) layers_j.push_back(l.to_json());
  return {{"layers", layers_j}, {"total", total.to_json()}};
}

namespace {

template <class Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDepthExhausted) throw;
    throw Error(ErrorCode::kDepthExhausted, std::string("stage ") + name + ": " + e.what());
  }
}

}  // namespace

he::CipherText layer_forward_he(he::Evaluator& ev, const kan::KanLayer& layer, const he::CipherText& ct_in,
                                const PipelineConfig& cfg, LayerStats* stats) {
  layer.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const he::OpCounter before = ev.counter();
  const auto comparator = cfg.comparator();
  const std::size_t n_i = layer.n_i();
  const auto basis_count = static_cast<std::size_t>(layer.grid.basis_count());
  const auto split = cfg.bsgs_split;

  bspline::BasisDiagnostics diag;
  const auto packed = stage("repeat-pack", [&] { return bspline::repeat_pack(ev, ct_in, layer.g(), layer.k(), n_i, bspline::comparator_scale(layer.grid)); });
  const auto basis = stage("bspline-basis", [&] { return bspline::bspline_basis_he(ev, packed, layer.grid, comparator, &diag); });
  const auto perm = bspline::gen_permutation(n_i, basis_count);
  he::CipherText spline;
  if (cfg.path == Path::kLazy) {
    const Eigen::MatrixXd w_f = bspline::fuse_weights(layer.w_prime, perm);
    spline = stage("spline-matvec", [&] { return bsgs_matvec(ev, w_f, basis.ct, split); });
  } else {
    const std::size_t n = perm.size();
    const auto permuted = stage("permute", [&] {
      return bsgs_matvec(
          ev, [&perm](std::size_t t, std::size_t s) { return perm.source(t) == s ? 1.0 : 0.0; }, n, n, basis.ct,
          split);
    });
    spline = stage("spline-matvec", [&] { return bsgs_matvec(ev, layer.w_prime, permuted, split); });
  }

  const auto act = stage("silu-poly", [&] { return approx::eval_poly_he(ev, ct_in, layer.silu_poly, n_i); });
  const auto base = stage("base-matvec", [&] { return bsgs_matvec(ev, layer.w_b, act, split); });
  he::CipherText out = ev.add(spline, base);

  if (stats != nullptr) {
    stats->ops = ev.counter() - before;
    stats->depth_consumed = ct_in.level() - out.level();
    stats->near_knot = diag.near_knot;
    stats->wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return out;
}

HeResult model_forward_he(he::Evaluator& ev, const kan::KanModel& model, const he::CipherText& ct_in,
                          const PipelineConfig& cfg) {
  PipelineConfig run_cfg = cfg;
  run_cfg.backend = ev.config();
  HeResult result{ct_in, {}, plan_model(model, run_cfg, ct_in.level())};
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto t0 = std::chrono::steady_clock::now();
    const he::OpCounter before = ev.counter();
    const LayerPlan& p = result.plan.layers[l];
    if (p.refresh_before) result.ct = ev.refresh(result.ct, ev.depth_budget());
    const int level_in = result.ct.level();
    LayerStats ls;
    result.ct = layer_forward_he(ev, model.layers[l], result.ct, run_cfg, &ls);
    ls.ops = ev.counter() - before;
    ls.depth_consumed = level_in - result.ct.level();
    ls.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.stats.total.ops += ls.ops;
    result.stats.total.depth_consumed += ls.depth_consumed;
    result.stats.total.wall_ms += ls.wall_ms;
    result.stats.total.near_knot += ls.near_knot;
    result.stats.layers.push_back(ls);
  }
  return result;
}

EncryptedRun run_encrypted(const kan::KanModel& model, const std::vector<std::vector<double>>& inputs,
                           const PipelineConfig& cfg, unsigned threads) {
  cfg.validate();
  model.validate();
  EncryptedRun run;
  run.plan = plan_model(model, cfg);
  for (const auto& x : inputs) {
    if (x.size() != model.input_dim()) {
      throw Error(ErrorCode::kShapeMismatch, "input has " + std::to_string(x.size()) + " values, model takes " +
                                                 std::to_string(model.input_dim()));
    }
  }
  const auto backend = he::make_backend(cfg.backend);
  run.outputs.resize(inputs.size());
  run.stats.resize(inputs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, inputs.size())));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t s = next++; s < inputs.size(); s = next++) {
      he::Evaluator ev(*backend, s);
      const auto res = model_forward_he(ev, model, ev.encrypt(inputs[s]), cfg);
      const auto slots = ev.decrypt(res.ct);
      run.outputs[s].assign(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(model.output_dim()));
      run.stats[s] = res.stats;
    }
  };
  std::vector<std::future<void>> jobs;
  for (unsigned t = 0; t < threads; ++t) jobs.push_back(std::async(std::launch::async, worker));
  for (auto& j : jobs) j.get();
  return run;
}

std::string BenchReport::csv_header() {
  return "config,path,rotations,ct_mults,pt_mults,depth,wall_ms,speedup_vs_naive_counts";
}

std::string BenchReport::to_csv() const {
  std::ostringstream os;
  os << csv_header() << '\n';
  for (const auto& r : rows) {
    os << r.config << ',' << to_string(r.path) << ',' << r.ops.rotations << ',' << r.ops.ct_mults << ','
       << r.ops.pt_mults << ',' << r.depth << ',' << r.wall_ms << ',';
    if (r.speedup_vs_naive_counts) os << *r.speedup_vs_naive_counts;
    os << '\n';
  }
  return os.str();
}

json BenchReport::to_json() const {
  json a = json::array();
  for (const auto& r : rows) {
    json j{{"config", r.config}, {"path", to_string(r.path)}, {"ops", r.ops.to_json()},
           {"depth", r.depth},   {"wall_ms", r.wall_ms}};
    j["speedup_vs_naive_counts"] = r.speedup_vs_naive_counts ? json(*r.speedup_vs_naive_counts) : json(nullptr);
    a.push_back(std::move(j));
  }
  return {{"rows", a}};
}

BenchReport bench_compare(const kan::KanModel& model, const std::vector<std::vector<double>>& inputs,
                          const std::vector<BenchConfig>& cfgs) {
  if (inputs.empty()) throw Error(ErrorCode::kEmptySamples, "bench needs at least one input");
  std::vector<std::future<BenchRow>> jobs;
  for (const auto& cfg : cfgs) {
    jobs.push_back(std::async(std::launch::async, [&model, &inputs, &cfg] {
      const auto run = run_encrypted(model, inputs, cfg.pipeline, 1);
      BenchRow row;
      row.config = cfg.name;
      row.path = cfg.pipeline.path;
      row.ops = run.stats.front().total.ops;
      row.depth = run.stats.front().total.depth_consumed;
      for (const auto& s : run.stats) row.wall_ms += s.total.wall_ms;
      row.wall_ms /= static_cast<double>(run.stats.size());
      return row;
    }));
  }
  BenchReport report;
  for (auto& j : jobs) report.rows.push_back(j.get());
  for (auto& r : report.rows) {
    for (const auto& other : report.rows) {
      if (other.config == r.config && other.path == Path::kNaive) {
        r.speedup_vs_naive_counts =
            static_cast<double>(other.ops.weighted_cost()) / static_cast<double>(std::max<std::uint64_t>(1, r.ops.weighted_cost()));
      }
    }
  }
  return report;
}

}  // namespace hekan::infer
