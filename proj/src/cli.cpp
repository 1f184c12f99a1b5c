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

#include "hekan/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "hekan/error.hpp"
#include "hekan/he_inference.hpp"
#include "hekan/kan_model.hpp"
#include "hekan/poly_approx.hpp"

namespace hekan::cli {

using nlohmann::json;

namespace {

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::kIllConditioned:
    case ErrorCode::kRemezNonConvergence:
    case ErrorCode::kSingularSystem:
      return 3;
    case ErrorCode::kDepthBudgetInfeasible:
    case ErrorCode::kDepthExhausted:
      return 4;
    default:
      return 2;
  }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("HEKAN_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "HEKAN_SEED is not an unsigned integer");
    }
  }
  return 0;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  f << text;
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kCorruptFile, "cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kCorruptFile, path + ": " + e.what());
  }
}

std::vector<double> read_samples(const std::string& path) {
  const auto data = kan::load_dataset_csv(path, 1);
  std::vector<double> xs;
  for (const auto& row : data.inputs) xs.push_back(row[0]);
  return xs;
}

struct ActivationArgs {
  std::string samples;
  std::optional<double> mu, sigma;
  std::optional<double> x_min, x_max;
  std::string preset;
  std::optional<int> degree;
};

void add_activation_flags(CLI::App* app, ActivationArgs& a) {
  app->add_option("--samples", a.samples, "CSV of activation inputs (first column)");
  app->add_option("--mu", a.mu, "input mean");
  app->add_option("--sigma", a.sigma, "input standard deviation");
  app->add_option("--x-min", a.x_min, "lower clamp of the approximation range");
  app->add_option("--x-max", a.x_max, "upper clamp of the approximation range");
  app->add_option("--preset", a.preset, "dataset preset (mnist, fmnist, cifar10): clamp range and degree");
  app->add_option("--degree", a.degree, "polynomial degree")->check(CLI::Range(0, 63));
}

// Range and degree from the flags; exactly one of --samples and (--mu, --sigma).
std::pair<approx::ApproxRange, int> resolve_activation(const ActivationArgs& a) {
  const bool have_samples = !a.samples.empty();
  const bool have_moments = a.mu.has_value() || a.sigma.has_value();
  if (have_samples == have_moments) {
    throw Error(ErrorCode::kInvalidArgument, "give exactly one of --samples or --mu/--sigma");
  }
  if (have_moments && !(a.mu && a.sigma)) throw Error(ErrorCode::kInvalidArgument, "--mu and --sigma go together");
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  int degree = 10;
  if (!a.preset.empty()) {
    const auto& p = approx::activation_preset(a.preset);
    lo = p.lo;
    hi = p.hi;
    degree = p.degree;
  }
  if (a.x_min) lo = *a.x_min;
  if (a.x_max) hi = *a.x_max;
  if (a.degree) degree = *a.degree;
  const auto range = have_samples ? approx::estimate_range(read_samples(a.samples), lo, hi)
                                  : approx::range_from_moments(*a.mu, *a.sigma, lo, hi);
  return {range, degree};
}

approx::Polynomial fit_by_method(const std::string& method, const approx::ApproxRange& range, int degree) {
  const auto f = [](double x) { return kan::silu(x); };
  if (method == "wls") return approx::fit_weighted_ls(f, range, degree, approx::WeightScheme::around(range));
  if (method == "ols") return approx::fit_ols(f, range, degree);
  if (method == "remez") return approx::fit_remez(f, range, degree);
  throw Error(ErrorCode::kInvalidArgument, "unknown method '" + method + "'");
}

approx::FitReport report_for(const std::string& method, const approx::Polynomial& p,
                             const approx::ApproxRange& range, int degree) {
  const auto f = [](double x) { return kan::silu(x); };
  return {method, degree, range, approx::measure_fit(f, p, range, approx::WeightScheme::around(range))};
}

std::string stem(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  return (dot != std::string::npos && (slash == std::string::npos || dot > slash)) ? path.substr(0, dot) : path;
}

std::vector<std::vector<double>> read_inputs(const std::string& path, std::size_t n) {
  return kan::load_dataset_csv(path, n).inputs;
}

std::array<std::size_t, 3> parse_shape(const std::string& s) {
  std::array<std::size_t, 3> shape{};
  std::stringstream ss(s);
  std::string part;
  std::size_t i = 0;
  while (std::getline(ss, part, ',')) {
    if (i == 3) throw Error(ErrorCode::kInvalidArgument, "input shape needs h,w,c");
    try {
      shape[i++] = std::stoul(part);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad input shape '" + s + "'");
    }
  }
  if (i != 3) throw Error(ErrorCode::kInvalidArgument, "input shape needs h,w,c");
  return shape;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"hekan: KAN inference on a leveled SIMD homomorphic-encryption simulator"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed_flag;
  app.add_option("--seed", seed_flag, "RNG seed (falls back to HEKAN_SEED, then 0)");

  // fit-activation
  auto* fa = app.add_subcommand("fit-activation", "fit a SiLU polynomial for an input distribution");
  ActivationArgs fa_args;
  std::string fa_method = "wls", fa_out, fa_report;
  add_activation_flags(fa, fa_args);
  fa->add_option("--method", fa_method, "wls, ols or remez")->check(CLI::IsMember({"wls", "ols", "remez"}));
  fa->add_option("--out", fa_out, "polynomial JSON");
  fa->add_option("--report", fa_report, "error report CSV (default: <out>.csv)");

  // compare
  auto* cmp = app.add_subcommand("compare", "compare wls, ols and remez SiLU fits on one range");
  ActivationArgs cmp_args;
  std::string cmp_out;
  add_activation_flags(cmp, cmp_args);
  cmp->add_option("--out", cmp_out, "report CSV");

  // fit-layer
  auto* fl = app.add_subcommand("fit-layer", "least-squares fit of a one-layer KAN to a CSV dataset");
  std::string fl_data, fl_out, fl_wb = "fitted", fl_shape;
  std::size_t fl_ni = 1, fl_no = 1;
  int fl_g = 5, fl_k = 3, fl_deg = 10;
  double fl_lo = -1.0, fl_hi = 1.0, fl_ridge = 1e-8;
  fl->add_option("--data", fl_data, "CSV: inputs then targets")->required();
  fl->add_option("--n-inputs", fl_ni, "input columns")->required()->check(CLI::PositiveNumber);
  fl->add_option("--n-outputs", fl_no, "target columns")->check(CLI::PositiveNumber);
  fl->add_option("--g", fl_g, "grid intervals")->check(CLI::Range(1, 1024));
  fl->add_option("--k", fl_k, "spline degree")->check(CLI::Range(0, 16));
  fl->add_option("--lo", fl_lo, "grid lower end");
  fl->add_option("--hi", fl_hi, "grid upper end");
  fl->add_option("--w-b", fl_wb, "fixed or fitted")->check(CLI::IsMember({"fixed", "fitted"}));
  fl->add_option("--ridge", fl_ridge, "ridge on spline coefficients")->check(CLI::NonNegativeNumber);
  fl->add_option("--silu-degree", fl_deg, "degree of the layer's SiLU polynomial")->check(CLI::Range(1, 63));
  fl->add_option("--input-shape", fl_shape, "h,w,c (default 1,1,n_inputs)");
  fl->add_option("--out", fl_out, "model JSON")->required();

  // infer
  auto* inf = app.add_subcommand("infer", "run a model in the clear or encrypted");
  std::string inf_model, inf_input, inf_mode = "he", inf_backend, inf_out, inf_comp = "composite", inf_path = "lazy";
  unsigned inf_threads = 0;
  inf->add_option("--model", inf_model, "model JSON")->required();
  inf->add_option("--input", inf_input, "CSV, one input per row")->required();
  inf->add_option("--mode", inf_mode, "plain-exact, plain-mirrored or he")
      ->check(CLI::IsMember({"plain-exact", "plain-mirrored", "he"}));
  inf->add_option("--backend", inf_backend, "backend JSON");
  inf->add_option("--comparator", inf_comp, "exact or composite")->check(CLI::IsMember({"exact", "composite"}));
  inf->add_option("--path", inf_path, "lazy or naive")->check(CLI::IsMember({"lazy", "naive"}));
  inf->add_option("--threads", inf_threads, "worker threads (0: all cores)");
  inf->add_option("--out", inf_out, "result JSON");

  // bench
  auto* bn = app.add_subcommand("bench", "count-based comparison of pipeline configs");
  std::string bn_model, bn_configs, bn_inputs, bn_out;
  std::size_t bn_count = 1;
  bn->add_option("--model", bn_model, "model JSON")->required();
  bn->add_option("--configs", bn_configs, "JSON list of configs")->required();
  bn->add_option("--inputs", bn_inputs, "CSV inputs (default: random points in the first grid)");
  bn->add_option("--samples", bn_count, "random inputs when --inputs is absent")->check(CLI::PositiveNumber);
  bn->add_option("--out", bn_out, "report: .json for JSON, anything else for CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    const std::uint64_t seed = resolve_seed(seed_flag);
    out << std::setprecision(6);

    if (fa->parsed()) {
      const auto [range, degree] = resolve_activation(fa_args);
      const auto p = fit_by_method(fa_method, range, degree);
      const auto rep = report_for(fa_method, p, range, degree);
      out << "range [" << range.lo << ", " << range.hi << "] (mu " << range.mu << ", sigma " << range.sigma
          << (range.degenerate ? ", degenerate" : "") << ")\n"
          << fa_method << " degree " << degree << ": rmse " << rep.errors.rmse_uniform << ", inner rmse "
          << rep.errors.rmse_inner << ", max error " << rep.errors.max_error << '\n';
      if (!fa_out.empty()) {
        write_text(fa_out, p.to_json().dump() + "\n");
        const std::string report = fa_report.empty() ? stem(fa_out) + ".csv" : fa_report;
        write_text(report, approx::fit_report_csv_header() + "\n" + approx::fit_report_csv_row(rep) + "\n");
      }
      return 0;
    }

    if (cmp->parsed()) {
      const auto [range, degree] = resolve_activation(cmp_args);
      std::ostringstream csv;
      csv << approx::fit_report_csv_header() << ",gaussian_rmse\n";
      for (const std::string method : {"wls", "ols", "remez"}) {
        const auto p = fit_by_method(method, range, degree);
        const auto rep = report_for(method, p, range, degree);
        const double g = approx::gaussian_weighted_rmse([](double x) { return kan::silu(x); }, p, range);
        csv << approx::fit_report_csv_row(rep) << ',' << std::setprecision(17) << g << '\n';
        out << method << ": rmse " << rep.errors.rmse_uniform << ", inner rmse " << rep.errors.rmse_inner
            << ", gaussian rmse " << g << '\n';
      }
      if (!cmp_out.empty()) write_text(cmp_out, csv.str());
      return 0;
    }

    if (fl->parsed()) {
      const auto data = kan::load_dataset_csv(fl_data, fl_ni);
      const auto grid = bspline::GridMatrix::uniform(fl_ni, fl_lo, fl_hi, fl_g, fl_k);
      kan::FitOptions opts;
      opts.w_b_mode = fl_wb == "fixed" ? kan::BaseWeightMode::kFixed : kan::BaseWeightMode::kFitted;
      opts.ridge = fl_ridge;
      opts.silu_degree = fl_deg;
      auto fit = kan::fit_layer_ls(data, fl_no, grid, opts);
      kan::KanModel model;
      model.input_shape = fl_shape.empty() ? std::array<std::size_t, 3>{1, 1, fl_ni} : parse_shape(fl_shape);
      model.layers.push_back(std::move(fit.layer));
      kan::save_model(model, fl_out);
      out << "fitted " << fl_ni << " -> " << fl_no << " layer (g " << fl_g << ", k " << fl_k << ") on "
          << data.size() << " samples: train rmse " << fit.train_rmse << '\n';
      return 0;
    }

    if (inf->parsed()) {
      const auto model = kan::load_model(inf_model);
      const auto inputs = read_inputs(inf_input, model.input_dim());
      infer::PipelineConfig cfg;
      if (!inf_backend.empty()) cfg.backend = he::BackendConfig::from_json(read_json(inf_backend));
      if (seed_flag || std::getenv("HEKAN_SEED")) cfg.backend.rng_seed = seed;
      cfg.comparator_mode =
          inf_comp == "exact" ? bspline::ComparatorMode::kExact : bspline::ComparatorMode::kComposite;
      cfg.path = infer::path_from_string(inf_path);
      cfg.validate();

      json result{{"mode", inf_mode}};
      std::vector<std::vector<double>> outputs;
      if (inf_mode == "he") {
        const auto plan = infer::plan_model(model, cfg);
        out << plan.describe();
        const auto run = infer::run_encrypted(model, inputs, cfg, inf_threads);
        outputs = run.outputs;
        json stats = json::array();
        for (const auto& s : run.stats) stats.push_back(s.to_json());
        result["plan"] = run.plan.to_json();
        result["stats"] = std::move(stats);
        result["pipeline"] = cfg.to_json();
        if (!run.stats.empty()) {
          const auto& t = run.stats.front().total;
          out << "per input: " << t.ops.rotations << " rotations, " << t.ops.ct_mults << " ct mults, "
              << t.ops.pt_mults << " pt mults, depth " << t.depth_consumed << '\n';
        }
      } else {
        const auto mode = inf_mode == "plain-exact" ? kan::ForwardMode::kExact : kan::ForwardMode::kMirrored;
        for (const auto& x : inputs) outputs.push_back(kan::model_forward_plain(model, x, mode, cfg.comparator()));
      }
      result["outputs"] = outputs;
      out << std::setprecision(10);
      for (const auto& o : outputs) {
        for (std::size_t j = 0; j < o.size(); ++j) out << (j ? "," : "") << o[j];
        out << '\n';
      }
      if (!inf_out.empty()) write_text(inf_out, result.dump(1) + "\n");
      return 0;
    }

    if (bn->parsed()) {
      const auto model = kan::load_model(bn_model);
      const json cj = read_json(bn_configs);
      if (!cj.is_array() || cj.empty()) throw Error(ErrorCode::kInvalidArgument, "configs must be a non-empty list");
      std::vector<infer::BenchConfig> cfgs;
      for (std::size_t i = 0; i < cj.size(); ++i) {
        const json& c = cj[i];
        const std::string name = c.value("name", "config" + std::to_string(i));
        std::vector<std::string> paths{"lazy", "naive"};
        if (c.contains("path")) paths = {c.at("path").get<std::string>()};
        for (const auto& p : paths) {
          json one = c;
          one["path"] = p;
          one.erase("name");
          auto pc = infer::PipelineConfig::from_json(one);
          if (!c.contains("backend") || !c.at("backend").contains("rng_seed")) pc.backend.rng_seed = seed;
          cfgs.push_back({name, pc});
        }
      }
      std::vector<std::vector<double>> inputs;
      if (!bn_inputs.empty()) {
        inputs = read_inputs(bn_inputs, model.input_dim());
      } else {
        std::mt19937_64 rng(seed);
        const auto& knots = model.layers.front().grid.knots();
        const int k = model.layers.front().k();
        std::uniform_real_distribution<double> u(knots.col(k).maxCoeff(), knots.col(knots.cols() - 1 - k).minCoeff());
        inputs.assign(bn_count, std::vector<double>(model.input_dim()));
        for (auto& x : inputs)
          for (auto& v : x) v = u(rng);
      }
      const auto report = infer::bench_compare(model, inputs, cfgs);
      const std::string csv = report.to_csv();
      out << csv;
      if (!bn_out.empty()) {
        const bool as_json = bn_out.size() >= 5 && bn_out.substr(bn_out.size() - 5) == ".json";
        write_text(bn_out, as_json ? report.to_json().dump(1) + "\n" : csv);
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace hekan::cli
