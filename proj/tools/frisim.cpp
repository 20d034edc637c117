// SPDX-License-Identifier: Apache-2.0
//
// frisim: run, sweep, serve and inspect scenarios.
#include <signal.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "frisim/bridge.hpp"
#include "frisim/config.hpp"
#include "frisim/experiment.hpp"
#include "frisim/transport.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitTrend = 4;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "scenario TOML file (built-in defaults when omitted)");
  cmd->add_option("--set", c.overrides, "override a field, e.g. --set ris.elements=16")->take_all();
  cmd->add_option("--seed", c.seed, "master seed");
}

toml::table load_table(const Common& c) {
  toml::table t;
  if (!c.config.empty()) {
    if (!std::filesystem::exists(c.config)) throw frisim::ConfigError(c.config, "no such file");
    t = frisim::load_toml_file(c.config);
  }
  for (const auto& o : c.overrides) frisim::apply_override(t, o);
  if (c.seed) frisim::apply_override(t, "seed=" + std::to_string(*c.seed));
  return t;
}

void add_run_options(CLI::App* cmd, std::string& optimizer, frisim::RunOptions& ro, std::string& motion) {
  cmd->add_option("--optimizer", optimizer, "greedy, random or cem")
      ->check(CLI::IsMember({"greedy", "random", "cem"}));
  cmd->add_option("--budget", ro.budget, "episode budget of random search and CEM");
  cmd->add_option("--motion", motion, "policy motion model: schedule or linear")
      ->check(CLI::IsMember({"schedule", "linear"}));
  cmd->add_option("--knots", ro.policy.knots, "knots per control of the schedule policy");
}

void print_session(const frisim::bridge::SessionSummary& s, bool interrupted, std::uint64_t sessions = 1) {
  nlohmann::ordered_json j;
  j["sessions"] = sessions;
  j["requests"] = s.requests;
  j["errors"] = s.errors;
  j["resets"] = s.resets;
  j["steps"] = s.steps;
  j["interrupted"] = interrupted;
  std::cerr << "session summary " << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"F-RIS covert UAV simulator"};
  app.require_subcommand(1);

  Common common;
  std::string out = "out";
  std::string optimizer = "greedy", motion = "schedule";
  frisim::RunOptions ro;

  auto* run = app.add_subcommand("run", "optimize a policy and write one episode");
  add_common(run, common);
  add_run_options(run, optimizer, ro, motion);
  run->add_option("--out", out, "output directory");

  frisim::SweepSpec spec;
  std::string trend;
  auto* sweep = app.add_subcommand("sweep", "repeat runs over parameter values and seeds");
  add_common(sweep, common);
  add_run_options(sweep, optimizer, ro, motion);
  sweep->add_option("--out", out, "output directory");
  sweep->add_option("--param", spec.parameter, "dotted parameter path")->required();
  sweep->add_option("--values", spec.values, "comma-separated TOML values")->required()->delimiter(',');
  sweep->add_option("--seeds", spec.seeds, "seeds per value");
  sweep->add_option("--workers", spec.workers, "worker threads (0: one per core)");
  sweep->add_option("--assert-trend", trend, "fail unless mean covert rate is monotone")
      ->check(CLI::IsMember({"nondecreasing", "nonincreasing"}));

  bool use_stdio = false;
  std::optional<int> tcp_port;
  auto* serve = app.add_subcommand("serve", "serve the environment over the frisim/1 protocol");
  add_common(serve, common);
  auto* stdio_flag = serve->add_flag("--stdio", use_stdio, "standard input/output (default)");
  serve->add_option("--tcp", tcp_port, "listen on 127.0.0.1:PORT (0 picks a free port)")
      ->excludes(stdio_flag)
      ->check(CLI::Range(0, 65535));

  auto* validate = app.add_subcommand("validate-config", "check a config and print it fully resolved");
  add_common(validate, common);

  double theta_step = 1.0, iota_step = 1.0;
  std::string fit_out;
  auto* fit = app.add_subcommand("fit-table", "export the fitted amplitude over (theta, iota)");
  add_common(fit, common);
  fit->add_option("--theta-step", theta_step, "phase step in degrees");
  fit->add_option("--iota-step", iota_step, "incidence step in degrees");
  fit->add_option("--out", fit_out, "CSV file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    const toml::table table = load_table(common);
    const frisim::ScenarioConfig cfg = frisim::config_from_table(table);
    cfg.validate();
    ro.optimizer = frisim::parse_optimizer(optimizer);
    ro.policy.motion = frisim::optim::parse_motion(motion);

    if (*run) {
      auto r = frisim::run_experiment(cfg, ro);
      frisim::write_run(r, out, frisim::explicit_keys(table));
      std::printf("avg_R_b=%.6f avg_R_c=%.6f c1_fraction=%.4f feasible=%d -> %s\n", r.summary.avg_rate_bob,
                  r.summary.avg_rate_carol, r.summary.c1_fraction, r.summary.feasible() ? 1 : 0, out.c_str());
      return 0;
    }

    if (*sweep) {
      spec.run = ro;
      auto r = frisim::run_sweep(table, spec);
      frisim::write_sweep(r, out);
      std::fputs(frisim::sweep_aggregate_csv(r).c_str(), stdout);
      if (!trend.empty()) {
        const bool up = trend == "nondecreasing";
        for (std::size_t i = 1; i < r.aggregate.size(); ++i) {
          const double a = r.aggregate[i - 1].mean_covert_rate, b = r.aggregate[i].mean_covert_rate;
          if (up ? b < a : b > a) {
            std::fprintf(stderr, "trend violated between %s and %s\n", r.aggregate[i - 1].value.c_str(),
                         r.aggregate[i].value.c_str());
            return kExitTrend;
          }
        }
      }
      return 0;
    }

    if (*serve) {
      ::signal(SIGPIPE, SIG_IGN);
      if (tcp_port) {
        sigset_t set;
        sigemptyset(&set);
        sigaddset(&set, SIGINT);
        sigaddset(&set, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &set, nullptr);
        frisim::bridge::TcpServer server(cfg, static_cast<std::uint16_t>(*tcp_port));
        std::cerr << "listening on 127.0.0.1:" << server.port() << std::endl;
        std::thread waiter([&] {
          int sig = 0;
          sigwait(&set, &sig);
          server.stop();
        });
        auto s = server.run();
        waiter.join();
        print_session(s.totals, true, s.sessions);
        return 0;
      }
      struct sigaction sa {};
      sa.sa_handler = on_signal;
      sigemptyset(&sa.sa_mask);
      sa.sa_flags = 0;
      sigaction(SIGINT, &sa, nullptr);
      sigaction(SIGTERM, &sa, nullptr);
      frisim::bridge::FdStreamBuf in_buf(STDIN_FILENO, &g_stop), out_buf(STDOUT_FILENO);
      std::istream in(&in_buf);
      std::ostream os(&out_buf);
      frisim::bridge::Session session(cfg);
      auto s = frisim::bridge::serve(session, in, os);
      os.flush();
      print_session(s, g_stop.load());
      return 0;
    }

    if (*validate) {
      std::fputs(frisim::config_to_toml(cfg, true, frisim::explicit_keys(table)).c_str(), stdout);
      std::printf("# digest %s\n", frisim::config_digest(cfg).c_str());
      return 0;
    }

    if (*fit) {
      std::string csv = "theta_deg,iota_deg,delta,phase_deg\n";
      for (const auto& row : frisim::em::fit_table(cfg.fit_coefficients(), theta_step, iota_step))
        csv += frisim::io::fmt(row.theta_deg) + ',' + frisim::io::fmt(row.iota_deg) + ',' +
               frisim::io::fmt(row.delta) + ',' + frisim::io::fmt(row.phase_deg) + '\n';
      if (fit_out.empty())
        std::fputs(csv.c_str(), stdout);
      else
        frisim::io::write_file(fit_out, csv);
      return 0;
    }
  } catch (const frisim::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const frisim::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
