// SPDX-License-Identifier: Apache-2.0
//
// Single runs and parameter sweeps: optimize a policy, roll it out and write
// the episode trace, summaries and the resolved configuration.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <exception>
#include <mutex>
#include <set>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "frisim/config.hpp"
#include "frisim/env.hpp"
#include "frisim/errors.hpp"
#include "frisim/optim.hpp"
#include "frisim/policy.hpp"

namespace frisim {

class IoError : public Error {
 public:
  using Error::Error;
};

enum class OptimizerKind { greedy, random, cem };

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "greedy") return OptimizerKind::greedy;
  if (s == "random") return OptimizerKind::random;
  if (s == "cem") return OptimizerKind::cem;
  throw DomainError("unknown optimizer '" + s + "' (expected greedy, random or cem)");
}

inline const char* optimizer_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::greedy: return "greedy";
    case OptimizerKind::random: return "random";
    case OptimizerKind::cem: return "cem";
  }
  return "?";
}

struct RunOptions {
  OptimizerKind optimizer = OptimizerKind::greedy;
  std::size_t budget = 200;  // episodes
  optim::PolicyOptions policy;
};

// Population and iteration count splitting an episode budget.
inline optim::CemOptions cem_options_for_budget(std::size_t budget) {
  optim::CemOptions o;
  o.population = std::clamp<std::size_t>(budget / 20, 4, 50);
  o.iterations = std::max<std::size_t>(1, budget / o.population);
  return o;
}

struct RunResult {
  ScenarioConfig config;
  RunOptions options;
  std::vector<double> params;
  double best_objective = 0;
  std::size_t evaluations = 0;
  std::vector<optim::CemIteration> cem_history;
  std::vector<double> running_best;
  EpisodeSummary summary;
  std::vector<SlotRecord> trace;
};

inline std::uint64_t optimizer_seed(std::uint64_t seed) { return seed * 0x9E3779B97F4A7C15ULL + 0x5851F42D4C957F2DULL; }

// Optimizes the policy on the config's episode seed, then replays the best
// parameters on the same seed.
inline RunResult run_experiment(const ScenarioConfig& cfg, const RunOptions& opt) {
  if (opt.optimizer != OptimizerKind::greedy && opt.budget < 1) throw DomainError("budget must be >= 1");
  RunResult r;
  r.config = cfg;
  r.options = opt;
  const optim::Policy policy(cfg, opt.policy);
  const auto objective = optim::episode_objective(cfg, policy);
  switch (opt.optimizer) {
    case OptimizerKind::greedy:
      r.params = policy.neutral();
      r.best_objective = objective(r.params);
      r.evaluations = 1;
      break;
    case OptimizerKind::random: {
      auto s = optim::random_search(objective, policy.bounds(), opt.budget, optimizer_seed(cfg.seed));
      r.params = s.best.values;
      r.best_objective = s.best_objective;
      r.evaluations = opt.budget;
      r.running_best = std::move(s.running_best);
      break;
    }
    case OptimizerKind::cem: {
      const auto init = policy.neutral();
      auto s = optim::cem_optimize(objective, policy.bounds(), cem_options_for_budget(opt.budget),
                                   optimizer_seed(cfg.seed), init);
      r.params = s.best.values;
      r.best_objective = s.best_objective;
      r.evaluations = s.evaluations;
      r.cem_history = std::move(s.history);
      break;
    }
  }
  Environment env(cfg);
  auto ro = optim::rollout(env, policy, r.params);
  r.summary = ro.summary;
  r.trace = std::move(ro.trace);
  return r;
}

namespace io {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f.flush()) throw IoError("write failed for '" + path.string() + "'");
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

}  // namespace io

inline std::string episode_csv(const std::vector<SlotRecord>& trace) {
  std::string s = "slot,R_b,R_c,xi_star,c1_ok,reward\n";
  for (const auto& r : trace)
    s += std::to_string(r.slot) + ',' + io::fmt(r.rate_bob) + ',' + io::fmt(r.rate_carol) + ',' +
         io::fmt(r.covert.xi_star) + ',' + (r.covert.c1_ok ? "1" : "0") + ',' + io::fmt(r.reward) + '\n';
  return s;
}

inline nlohmann::ordered_json summary_json(const EpisodeSummary& s) {
  return {{"slots", s.slots},
          {"avg_R_b", s.avg_rate_bob},
          {"avg_R_c", s.avg_rate_carol},
          {"c1_fraction", s.c1_fraction},
          {"c1_violations", s.c1_violations},
          {"public_violations", s.public_violations},
          {"public_ok", s.public_ok},
          {"feasible", s.feasible()},
          {"total_reward", s.total_reward},
          {"mean_reward", s.mean_reward}};
}

inline std::string run_summary_json(const RunResult& r) {
  nlohmann::ordered_json j;
  j["config_digest"] = config_digest(r.config);
  j["seed"] = r.config.seed;
  j["optimizer"] = optimizer_name(r.options.optimizer);
  j["budget"] = r.options.optimizer == OptimizerKind::greedy ? 0 : r.options.budget;
  j["evaluations"] = r.evaluations;
  j["best_objective"] = r.best_objective;
  j["episode"] = summary_json(r.summary);
  j["params"] = r.params;
  return j.dump(2) + "\n";
}

inline std::string cem_history_csv(const std::vector<optim::CemIteration>& h) {
  std::string s = "iteration,elite_mean,best_so_far,mean_std\n";
  for (const auto& it : h)
    s += std::to_string(it.iteration) + ',' + io::fmt(it.elite_mean) + ',' + io::fmt(it.best_so_far) + ',' +
         io::fmt(it.mean_std) + '\n';
  return s;
}

// Writes episode.csv, summary.json, resolved_config.toml and, for CEM,
// history.csv into `out`.
inline void write_run(const RunResult& r, const std::filesystem::path& out,
                      const std::set<std::string>& explicit_keys = {}) {
  io::ensure_dir(out);
  io::write_file(out / "episode.csv", episode_csv(r.trace));
  io::write_file(out / "summary.json", run_summary_json(r));
  io::write_file(out / "resolved_config.toml", config_to_toml(r.config, true, explicit_keys));
  if (!r.cem_history.empty()) io::write_file(out / "history.csv", cem_history_csv(r.cem_history));
}

struct SweepSpec {
  std::string parameter;            // dotted path, e.g. "ris.elements"
  std::vector<std::string> values;  // TOML literals
  std::size_t seeds = 1;
  RunOptions run;
  std::size_t workers = 0;  // 0: hardware concurrency
};

struct SweepPoint {
  std::string value;
  std::uint64_t seed = 0;
  EpisodeSummary summary;
  double best_objective = 0;
};

struct SweepAggregate {
  std::string value;
  double mean_covert_rate = 0;
  double ci95 = 0;
  double public_rate = 0;
  double feasible_frac = 0;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepPoint> points;  // value-major, then seed
  std::vector<SweepAggregate> aggregate;
};

inline std::vector<SweepAggregate> aggregate_points(const std::vector<SweepPoint>& points,
                                                    const std::vector<std::string>& values) {
  std::vector<SweepAggregate> out;
  for (const auto& v : values) {
    std::vector<const SweepPoint*> pts;
    for (const auto& p : points)
      if (p.value == v) pts.push_back(&p);
    SweepAggregate a;
    a.value = v;
    const double n = static_cast<double>(pts.size());
    if (pts.empty()) {
      out.push_back(a);
      continue;
    }
    for (const auto* p : pts) {
      a.mean_covert_rate += p->summary.avg_rate_bob;
      a.public_rate += p->summary.avg_rate_carol;
      a.feasible_frac += p->summary.feasible() ? 1.0 : 0.0;
    }
    a.mean_covert_rate /= n;
    a.public_rate /= n;
    a.feasible_frac /= n;
    if (pts.size() > 1) {
      double ss = 0;
      for (const auto* p : pts) ss += (p->summary.avg_rate_bob - a.mean_covert_rate) * (p->summary.avg_rate_bob - a.mean_covert_rate);
      a.ci95 = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    out.push_back(a);
  }
  return out;
}

// Every (value, seed) point owns its environment; seed k of every value uses
// episode seed base + k, so values are compared on common random numbers.
inline SweepResult run_sweep(const toml::table& base, const SweepSpec& spec) {
  if (spec.values.empty()) throw DomainError("sweep needs at least one value");
  if (spec.seeds < 1) throw DomainError("sweep needs at least one seed");
  std::vector<ScenarioConfig> configs;
  const ScenarioConfig base_cfg = config_from_table(base);
  for (const auto& v : spec.values) {
    for (std::size_t k = 0; k < spec.seeds; ++k) {
      toml::table t = base;
      apply_override(t, spec.parameter + "=" + v);
      ScenarioConfig c = config_from_table(t);
      c.seed = base_cfg.seed + k;
      c.validate();
      configs.push_back(std::move(c));
    }
  }

  SweepResult res;
  res.spec = spec;
  res.points.resize(configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      try {
        auto r = run_experiment(configs[i], spec.run);
        res.points[i] = {spec.values[i / spec.seeds], configs[i].seed, r.summary, r.best_objective};
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::size_t n_workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min(n_workers, configs.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  res.aggregate = aggregate_points(res.points, spec.values);
  return res;
}

inline std::string sweep_points_csv(const SweepResult& r) {
  std::string s = "param,value,seed,avg_R_b,avg_R_c,c1_fraction,feasible,mean_reward,best_objective\n";
  for (const auto& p : r.points)
    s += r.spec.parameter + ',' + p.value + ',' + std::to_string(p.seed) + ',' + io::fmt(p.summary.avg_rate_bob) +
         ',' + io::fmt(p.summary.avg_rate_carol) + ',' + io::fmt(p.summary.c1_fraction) + ',' +
         (p.summary.feasible() ? "1" : "0") + ',' + io::fmt(p.summary.mean_reward) + ',' +
         io::fmt(p.best_objective) + '\n';
  return s;
}

inline std::string sweep_aggregate_csv(const SweepResult& r) {
  std::string s = "param,mean_covert_rate,ci95,public_rate,feasible_frac\n";
  for (const auto& a : r.aggregate)
    s += a.value + ',' + io::fmt(a.mean_covert_rate) + ',' + io::fmt(a.ci95) + ',' + io::fmt(a.public_rate) + ',' +
         io::fmt(a.feasible_frac) + '\n';
  return s;
}

inline void write_sweep(const SweepResult& r, const std::filesystem::path& out) {
  io::ensure_dir(out);
  io::write_file(out / "points.csv", sweep_points_csv(r));
  io::write_file(out / "aggregate.csv", sweep_aggregate_csv(r));
}

}  // namespace frisim
