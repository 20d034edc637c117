// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "frisim/env.hpp"

namespace {

using namespace frisim;
constexpr double kPi = std::numbers::pi;

ScenarioConfig small_config(std::int64_t elements = 4, std::int64_t slots = 10) {
  ScenarioConfig cfg;
  cfg.elements = elements;
  cfg.slots = slots;
  return cfg;
}

std::vector<double> level_action(std::size_t m, double beta = 0.9) {
  EnvAction a;
  a.beta = beta;
  a.phases.assign(m, 0.0);
  a.bend_h.assign(m, 0.0);
  a.bend_v.assign(m, 0.0);
  return a.to_vector();
}

std::vector<double> random_action(std::size_t m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(EnvAction::dim(m));
  for (auto& x : v) x = 10.0 * u(rng);
  v[6] = 0.5 + 0.7 * u(rng);
  for (std::size_t k = 7 + m; k < v.size(); ++k) v[k] = 120.0 * u(rng);
  return v;
}

TEST(Env, ResetIsDeterministic) {
  Environment a(small_config()), b(small_config());
  EXPECT_EQ(a.reset(5).to_vector(), b.reset(5).to_vector());
  const auto s = a.reset(5).to_vector();
  EXPECT_NE(s, b.reset(6).to_vector());
  EXPECT_EQ(s.size(), a.state_dim());
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s[s.size() - 1], 0.0);
  EXPECT_EQ(s[s.size() - 2], 0.0);
}

TEST(Env, RepeatRunsGiveIdenticalTraces) {
  auto run = [] {
    Environment env(small_config(8, 20));
    env.reset(3);
    std::mt19937_64 rng(77);
    std::vector<double> rewards;
    while (!env.done()) rewards.push_back(env.step(random_action(8, rng)).reward);
    return rewards;
  };
  EXPECT_EQ(run(), run());
}

TEST(Env, Dimensions) {
  Environment env(small_config(16));
  EXPECT_EQ(env.action_dim(), 7u + 3 * 16);
  EXPECT_EQ(env.state_dim(), 23u + 8 * 16);
  env.reset();
  EXPECT_THROW(env.step(std::vector<double>(5, 0.0)), DimensionMismatch);
  auto bad = level_action(16);
  bad[3] = std::nan("");
  EXPECT_THROW(env.step(bad), DomainError);
  EXPECT_EQ(env.state().t, 0);
}

TEST(Env, BetaIsProjected) {
  Environment env(small_config());
  env.reset(1);
  auto out = env.step(level_action(4, 1.5));
  EXPECT_TRUE(out.info.flags.beta_clamped);
  EXPECT_EQ(out.info.record.beta, 1.0 - 1e-6);
  out = env.step(level_action(4, -0.2));
  EXPECT_TRUE(out.info.flags.beta_clamped);
  EXPECT_EQ(out.info.record.beta, 1e-6);
  out = env.step(level_action(4, 0.7));
  EXPECT_FALSE(out.info.flags.beta_clamped);
}

TEST(Env, EpisodeEnds) {
  Environment env(small_config(4, 3));
  EXPECT_THROW(env.step(level_action(4)), EpisodeFinished);
  env.reset();
  EXPECT_FALSE(env.step(level_action(4)).done);
  EXPECT_FALSE(env.step(level_action(4)).done);
  EXPECT_TRUE(env.step(level_action(4)).done);
  EXPECT_THROW(env.step(level_action(4)), EpisodeFinished);
  env.reset();
  EXPECT_FALSE(env.done());
}

TEST(Env, ZeroSurfaceLeavesDirectLinks) {
  auto cfg = small_config(8, 5);
  cfg.amplitude_override = 0.0;
  Environment env(cfg);
  env.reset(2);
  std::mt19937_64 rng(4);
  while (!env.done()) {
    const auto out = env.step(random_action(8, rng));
    const auto np = cfg.noma_params(out.info.record.beta);
    const auto& ch = out.state.channels;
    EXPECT_NEAR(out.info.record.rate_bob, noma::rate_bob(np, std::norm(ch.ab)), 1e-12);
    EXPECT_NEAR(out.info.record.rate_carol, noma::rate_carol(np, std::norm(ch.ac)), 1e-12);
    EXPECT_NEAR(out.info.record.covert.lambda1, covert::lambdas(np, std::norm(ch.aw)).h1, 1e-12);
  }
}

TEST(Env, StateCarriesTheChannelsUsed) {
  Environment env(small_config(4, 6));
  env.reset(8);
  std::mt19937_64 rng(1);
  while (!env.done()) {
    const auto out = env.step(random_action(4, rng));
    const auto np = env.config().noma_params(out.info.record.beta);
    const auto& ch = out.state.channels;
    ASSERT_EQ(out.info.record.rate_bob, noma::rate_bob(np, std::norm(ch.b)));
    ASSERT_EQ(out.info.record.rate_carol, noma::rate_carol(np, std::norm(ch.c)));
    ASSERT_EQ(out.info.record.covert.lambda0, covert::lambdas(np, std::norm(ch.w)).h0);
    auto copy = ch;
    copy.compose(env.theta(env.ris()));
    ASSERT_EQ(copy, ch);
  }
}

TEST(Env, RunningAveragesMatchTrace) {
  Environment env(small_config(4, 40));
  env.reset(9);
  std::mt19937_64 rng(2);
  double sb = 0, sc = 0;
  int n = 0;
  while (!env.done()) {
    const auto out = env.step(random_action(4, rng));
    sb += out.info.record.rate_bob;
    sc += out.info.record.rate_carol;
    ++n;
    ASSERT_NEAR(out.state.avg_rate_bob, sb / n, 1e-9);
    ASSERT_NEAR(out.state.avg_rate_carol, sc / n, 1e-9);
    ASSERT_EQ(out.state.t, n);
  }
  const auto sum = env.summary();
  EXPECT_NEAR(sum.avg_rate_bob, sb / n, 1e-12);
  EXPECT_NEAR(sum.avg_rate_carol, sc / n, 1e-12);
}

TEST(Reward, Examples) {
  ScenarioConfig cfg;
  EXPECT_EQ(reward(2.0, 3.5, true, cfg), 2.0);
  EXPECT_EQ(reward(2.0, 3.0, true, cfg), 1.0);
  EXPECT_EQ(reward(2.0, 3.0, false, cfg), 0.0);
  EXPECT_EQ(reward(2.0, 3.5, false, cfg), 1.0);
  cfg.reward_rate_source = "carol";
  EXPECT_EQ(reward(2.0, 3.5, true, cfg), 3.5);
}

TEST(Reward, EqualsRateWhenConstraintsHold) {
  Environment env(small_config(4, 30));
  env.reset(3);
  std::mt19937_64 rng(5);
  while (!env.done()) {
    const auto out = env.step(random_action(4, rng));
    if (out.info.record.public_ok && out.info.record.covert.c1_ok) {
      ASSERT_EQ(out.reward, out.state.avg_rate_bob);
    }
  }
}

TEST(EpisodeMetrics, Examples) {
  std::vector<SlotRecord> trace(7);
  for (auto& r : trace) {
    r.rate_bob = 2.5;
    r.rate_carol = 4.0;
    r.covert.c1_ok = true;
    r.public_ok = true;
  }
  auto s = episode_metrics(trace, 3.3);
  EXPECT_EQ(s.avg_rate_bob, 2.5);
  EXPECT_EQ(s.c1_fraction, 1.0);
  EXPECT_EQ(s.c1_violations, 0u);
  EXPECT_TRUE(s.feasible());
  trace[2].covert.c1_ok = false;
  s = episode_metrics(trace, 3.3);
  EXPECT_EQ(s.c1_violations, 1u);
  EXPECT_FALSE(s.feasible());
  EXPECT_EQ(episode_metrics({}, 3.3).slots, 0u);
}

TEST(Env, RandomEpisodesRespectConstraints) {
  const auto cfg = small_config(4, 20);
  Environment env(cfg);
  std::mt19937_64 rng(2024);
  for (int ep = 0; ep < 1000; ++ep) {
    env.reset(static_cast<std::uint64_t>(ep));
    while (!env.done()) {
      const auto out = env.step(random_action(4, rng));
      for (const auto* u : {&out.state.alice, &out.state.bob}) {
        ASSERT_GE(u->speed, 0.0);
        ASSERT_LE(u->speed, cfg.v_max);
        ASSERT_GE(u->position.z, cfg.z_min);
        ASSERT_LE(u->position.z, cfg.z_max);
        ASSERT_GE(u->heading, 0.0);
        ASSERT_LT(u->heading, 2 * kPi);
        ASSERT_GE(u->pitch, 0.0);
        ASSERT_LT(u->pitch, kPi);
      }
      ASSERT_GE(distance(out.state.alice.position, out.state.bob.position), cfg.d_min);
      ASSERT_GT(out.info.record.beta, 0.0);
      ASSERT_LT(out.info.record.beta, 1.0);
      for (double x : out.state.to_vector()) ASSERT_TRUE(std::isfinite(x));
    }
  }
}

}  // namespace
