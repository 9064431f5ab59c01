#include "pods/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pods/config.hpp"
#include "pods/curve_io.hpp"
#include "pods/rng.hpp"
#include "pods/simd/kernels.hpp"
#include "pods/trainer.hpp"

#ifndef PODS_VERSION
#define PODS_VERSION "dev"
#endif

namespace pods {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonOptions {
  std::vector<std::string> configs;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool config_required) {
  auto* c = cmd->add_option("--config", o.configs, "Config JSON (or a run manifest)");
  if (config_required) c->required();
  cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Override the master seed");
  cmd->add_option("--set", o.overrides, "key=value override (repeatable)");
}

std::vector<json> resolve_documents(const CommonOptions& o) {
  std::vector<json> docs;
  for (const std::string& path : o.configs)
    for (json& d : load_config_documents(path)) docs.push_back(std::move(d));
  for (json& d : docs) {
    apply_overrides(d, o.overrides);
    if (o.seed) d["seed"] = *o.seed;
  }
  return docs;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void write_json(const fs::path& path, const json& j) { open_output(path) << j.dump(2) << '\n'; }

json manifest(const std::string& command, std::uint64_t seed, const std::vector<std::string>& outputs) {
  return {{"command", command},
          {"version", PODS_VERSION},
          {"seed", seed},
          {"simd", std::string(simd::to_string(simd::active_level()))},
          {"outputs", outputs}};
}

int cmd_train(const CommonOptions& o, std::ostream& out) {
  const auto docs = resolve_documents(o);
  if (docs.size() != 1) throw ConfigError("--config", "train takes exactly one config");
  const TrainConfig cfg = train_config_from_json(docs.front());
  const TrainResult result = train_with_policy(cfg);

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "curve.csv");
    write_curve_csv(f, result.curve);
  }
  write_json(dir / "curve.json", {{"name", cfg.name}, {"curve", to_json(result.curve)}});
  write_json(dir / "policy.json", result.policy.to_json());
  json m = manifest("train", cfg.seed, {"curve.csv", "curve.json", "policy.json"});
  m["resolved_config"] = to_json(cfg);
  write_json(dir / "manifest.json", m);

  out << cfg.name << ": " << result.curve.size() << " curve points, peak accuracy "
      << format_real(peak_accuracy(result.curve)) << ", wrote " << dir.string() << '\n';
  return exit_ok;
}

int cmd_compare(const CommonOptions& o, double fraction, std::ostream& out) {
  const auto docs = resolve_documents(o);
  if (docs.size() < 2) throw ConfigError("--config", "compare needs a baseline and at least one candidate");
  std::vector<TrainConfig> configs;
  for (const json& d : docs) configs.push_back(train_config_from_json(d));
  const std::vector<TrainingCurve> curves = run_comparison(configs);

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "curves.csv");
    f << "name,sim_seconds,accuracy,mean_len,mean_reward,iter\n";
    for (std::size_t i = 0; i < curves.size(); ++i)
      for (const CurvePoint& p : curves[i])
        f << configs[i].name << ',' << format_real(p.sim_seconds) << ',' << format_real(p.accuracy) << ','
          << format_real(p.mean_len) << ',' << format_real(p.mean_reward) << ',' << p.iter << '\n';
  }
  const double target = fraction * peak_accuracy(curves.front());
  {
    auto f = open_output(dir / "speedup.csv");
    f << "name,peak_acc,t_to_target,ratio\n";
    for (std::size_t i = 0; i < curves.size(); ++i) {
      const auto t = time_to_reach(curves[i], target);
      const auto ratio = speedup_ratio(curves.front(), curves[i], fraction);
      f << configs[i].name << ',' << format_real(peak_accuracy(curves[i])) << ','
        << (t ? format_real(*t) : "unreachable") << ',' << (ratio ? format_real(*ratio) : "unreachable") << '\n';
      out << configs[i].name << ": peak " << format_real(peak_accuracy(curves[i])) << ", speedup "
          << (ratio ? format_real(*ratio) : "unreachable") << '\n';
    }
  }
  json all = json::array();
  for (const TrainConfig& c : configs) {
    TrainConfig shared = c;
    shared.seed = configs.front().seed;
    all.push_back(to_json(shared));
  }
  json m = manifest("compare", configs.front().seed, {"curves.csv", "speedup.csv"});
  m["fraction"] = fraction;
  m["resolved_configs"] = all;
  write_json(dir / "manifest.json", m);
  return exit_ok;
}

int cmd_sweep(const CommonOptions& o, const std::vector<std::size_t>& n_grid, const std::vector<std::size_t>& m_grid,
              std::ostream& out) {
  const auto docs = resolve_documents(o);
  if (docs.size() != 1) throw ConfigError("--config", "sweep takes exactly one base config");
  const TrainConfig base = train_config_from_json(docs.front());
  for (std::size_t n : n_grid)
    for (std::size_t m : m_grid)
      if (m == 0 || m > n || (!base.rule && m != n))
        throw ConfigError("--m-grid", "pair n=" + std::to_string(n) + ", m=" + std::to_string(m) + " is invalid");
  const std::vector<SweepCell> cells = sweep(base, n_grid, m_grid);

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "sweep.csv");
    f << "n,m,sim_seconds,accuracy,mean_len,mean_reward,iter\n";
    for (const SweepCell& c : cells)
      for (const CurvePoint& p : c.curve)
        f << c.n << ',' << c.m << ',' << format_real(p.sim_seconds) << ',' << format_real(p.accuracy) << ','
          << format_real(p.mean_len) << ',' << format_real(p.mean_reward) << ',' << p.iter << '\n';
  }
  json m = manifest("sweep", base.seed, {"sweep.csv"});
  m["resolved_config"] = to_json(base);
  m["n_grid"] = n_grid;
  m["m_grid"] = m_grid;
  write_json(dir / "manifest.json", m);
  for (const SweepCell& c : cells)
    out << "n=" << c.n << " m=" << c.m << ": peak " << format_real(peak_accuracy(c.curve)) << '\n';
  return exit_ok;
}

int cmd_bench(const std::vector<std::size_t>& sizes, std::size_t reps, const std::string& out_dir, std::uint64_t seed,
              std::ostream& out) {
  if (sizes.size() < 2) throw ConfigError("--sizes", "need at least two sizes");
  const std::vector<BenchRow> rows = bench_select(sizes, reps, seed);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "bench.csv");
    f << "n,median_ns\n";
    for (const BenchRow& r : rows) f << r.n << ',' << format_real(r.median_ns) << '\n';
  }
  const ComplexityCheck check = check_nlogn(rows);
  out << (check.pass ? "PASS" : "FAIL") << " n log n growth: time ratio " << format_real(check.time_ratio)
      << " <= bound " << format_real(check.bound) << '\n';
  return exit_ok;
}

int cmd_simulate_cost(const CommonOptions& o, const std::vector<std::size_t>& batches, double avg_tokens,
                      std::ostream& out) {
  json doc = json::object();
  if (!o.configs.empty()) {
    const auto docs = resolve_documents(o);
    doc = docs.front();
  } else {
    apply_overrides(doc, o.overrides);
  }
  const CostModelParams p = cost_params_from_json(doc.contains("cost") ? doc.at("cost") : json());
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "cost.csv");
    f << "batch,per_token_time,inference_time,update_time,iteration_time\n";
    for (std::size_t b : batches)
      f << b << ',' << format_real(per_token_time(b, p)) << ',' << format_real(inference_time(b, avg_tokens, p))
        << ',' << format_real(update_time(b, p)) << ',' << format_real(iteration_time(b, b, avg_tokens, p)) << '\n';
  }
  json m = manifest("simulate-cost", 0, {"cost.csv"});
  m["cost"] = to_json(p);
  m["avg_tokens"] = avg_tokens;
  m["batches"] = batches;
  write_json(dir / "manifest.json", m);
  out << "per-token time ratio batch " << batches.back() << " / batch 1: "
      << format_real(per_token_time(batches.back(), p) / per_token_time(1, p)) << '\n';
  return exit_ok;
}

volatile double bench_sink = 0.0;

}  // namespace

std::vector<BenchRow> bench_select(std::span<const std::size_t> sizes, std::size_t reps, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  std::vector<BenchRow> rows;
  for (std::size_t n : sizes) {
    if (n < 4) throw std::invalid_argument("bench_select: sizes must be >= 4");
    const std::size_t m = n / 4;
    // Batch small sizes so each sample spans well above timer resolution.
    // Every call gets its own input: re-sorting one vector lets the branch
    // predictor learn it and flatters small sizes.
    const std::size_t inner = std::max<std::size_t>(1, 200000 / n);
    std::vector<double> samples;
    double sink = 0.0;
    for (std::size_t r = 0; r < std::max<std::size_t>(reps, 1); ++r) {
      std::vector<RewardVector> inputs;
      inputs.reserve(inner);
      for (std::size_t i = 0; i < inner; ++i) {
        Engine rng(derive_seed(seed, {n, r, i}));
        std::vector<double> values(n);
        for (double& v : values) v = uniform01(rng);
        inputs.emplace_back(std::move(values));
      }
      const auto t0 = clock::now();
      for (const RewardVector& rewards : inputs) sink += max_variance_select(rewards, m).variance;
      const auto t1 = clock::now();
      samples.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(inner));
    }
    bench_sink = sink;
    std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2), samples.end());
    rows.push_back(BenchRow{n, samples[samples.size() / 2]});
  }
  return rows;
}

ComplexityCheck check_nlogn(const std::vector<BenchRow>& rows, double slack) {
  const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(),
                                            [](const BenchRow& a, const BenchRow& b) { return a.n < b.n; });
  ComplexityCheck c;
  const double n_ratio = static_cast<double>(hi->n) / static_cast<double>(lo->n);
  c.bound = slack * n_ratio * std::log(static_cast<double>(hi->n)) / std::log(static_cast<double>(lo->n));
  c.time_ratio = hi->median_ns / lo->median_ns;
  c.pass = c.time_ratio <= c.bound;
  return c;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rollout down-sampling for group-relative policy optimization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PODS_VERSION);

  CommonOptions train_opts, compare_opts, sweep_opts, cost_opts;
  auto* train_cmd = app.add_subcommand("train", "Train one configuration and write its curve");
  add_common(train_cmd, train_opts, true);

  double fraction = 0.99;
  auto* compare_cmd = app.add_subcommand("compare", "Train configs on shared streams; speedups vs the first");
  add_common(compare_cmd, compare_opts, true);
  compare_cmd->add_option("--fraction", fraction, "Fraction of baseline peak accuracy")->capture_default_str();

  std::vector<std::size_t> n_grid, m_grid;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid over rollout size n and update size m");
  add_common(sweep_cmd, sweep_opts, true);
  sweep_cmd->add_option("--n-grid", n_grid, "Comma-separated n values")->delimiter(',')->required();
  sweep_cmd->add_option("--m-grid", m_grid, "Comma-separated m values")->delimiter(',')->required();

  std::vector<std::size_t> sizes{1000, 10000, 100000, 1000000};
  std::size_t reps = 15;
  std::string bench_out = "out";
  std::uint64_t bench_seed = 0;
  auto* bench_cmd = app.add_subcommand("bench-select", "Time max-variance selection across sizes");
  bench_cmd->add_option("--sizes", sizes, "Comma-separated sizes")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--reps", reps, "Repetitions per size")->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "Output directory")->capture_default_str();
  bench_cmd->add_option("--seed", bench_seed, "Seed for the random rewards");

  std::vector<std::size_t> batches{1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
  double avg_tokens = 128.0;
  auto* cost_cmd = app.add_subcommand("simulate-cost", "Tabulate the iteration cost model over batch sizes");
  add_common(cost_cmd, cost_opts, false);
  cost_cmd->add_option("--batches", batches, "Comma-separated batch sizes")->delimiter(',')->capture_default_str();
  cost_cmd->add_option("--avg-tokens", avg_tokens, "Mean completion length")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (*train_cmd) return cmd_train(train_opts, out);
    if (*compare_cmd) return cmd_compare(compare_opts, fraction, out);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, n_grid, m_grid, out);
    if (*bench_cmd) return cmd_bench(sizes, reps, bench_out, bench_seed, out);
    if (*cost_cmd) return cmd_simulate_cost(cost_opts, batches, avg_tokens, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::logic_error& e) {
    err << "invariant violation: " << e.what() << '\n';
    return exit_invariant;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_other;
  }
  return exit_other;
}

}  // namespace pods
