// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <string>

#include "frisim/config.hpp"

namespace {

using namespace frisim;

toml::table parse(std::string_view s) { return parse_toml_text(s); }

std::string error_field(const toml::table& t) {
  try {
    (void)config_from_table(t);
  } catch (const ConfigError& e) {
    return e.field;
  }
  return "";
}

TEST(Config, DefaultsValidate) {
  const auto cfg = config_from_table({});
  EXPECT_EQ(cfg.elements, 64);
  EXPECT_EQ(cfg.epsilon, 0.1);
  EXPECT_EQ(cfg.epsilon_c, 3.3);
  EXPECT_NEAR(cfg.channel_params().gamma0, 0.1, 1e-15);
  EXPECT_NEAR(cfg.channel_params().kappa, 10.0, 1e-12);
  EXPECT_NEAR(cfg.channel_params().noise_power, 1e-8, 1e-22);
}

TEST(Config, ReadsSections) {
  const auto cfg = config_from_table(parse(R"(
seed = 9
[ris]
elements = 16
[kinematics]
d_min = 40.0
[nodes]
willie = [150, 0, 0]
)"));
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.elements, 16);
  EXPECT_EQ(cfg.d_min, 40.0);
  EXPECT_EQ(cfg.willie, (Vec3{150, 0, 0}));
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(error_field(parse("[ris]\nelements = 0\n")), "ris.elements");
  EXPECT_EQ(error_field(parse("[ris]\nelemnts = 4\n")), "ris.elemnts");
  EXPECT_EQ(error_field(parse("bogus = 1\n")), "bogus");
  EXPECT_EQ(error_field(parse("[covert]\nepsilon = 1.5\n")), "covert.epsilon");
  EXPECT_EQ(error_field(parse("[kinematics]\nz_max = 30.0\n")), "kinematics.z_max");
  EXPECT_EQ(error_field(parse("[bob]\nposition = [100, 50, 40]\n")), "bob.position");
  EXPECT_EQ(error_field(parse("[episode]\nreward_rate_source = \"willie\"\n")), "episode.reward_rate_source");
  EXPECT_EQ(error_field(parse("[ris]\nelements = \"many\"\n")), "ris.elements");
}

TEST(Config, Overrides) {
  toml::table t;
  apply_override(t, "ris.elements=16");
  apply_override(t, " channel.los_only = true ");
  apply_override(t, "nodes.willie=[150,0,0]");
  apply_override(t, "seed=7");
  const auto cfg = config_from_table(t);
  EXPECT_EQ(cfg.elements, 16);
  EXPECT_TRUE(cfg.los_only);
  EXPECT_TRUE(std::isinf(cfg.channel_params().kappa));
  EXPECT_EQ(cfg.willie, (Vec3{150, 0, 0}));
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_THROW(apply_override(t, "ris.elements"), ConfigError);
  EXPECT_THROW(apply_override(t, "seed.x=1"), ConfigError);
  EXPECT_THROW(apply_override(t, "ris.elements=[1,"), ConfigError);
}

TEST(Config, RoundTripThroughToml) {
  toml::table t;
  apply_override(t, "ris.elements=36");
  apply_override(t, "covert.epsilon=0.05");
  apply_override(t, "channel.carrier_hz=1.1e9");
  apply_override(t, "ris.amplitude_override=0.5");
  const auto cfg = config_from_table(t);
  const std::string text = config_to_toml(cfg, true, explicit_keys(t));
  const auto again = config_from_table(parse(text));
  EXPECT_EQ(config_to_toml(again, false), config_to_toml(cfg, false));
  EXPECT_EQ(config_digest(again), config_digest(cfg));
  EXPECT_NE(text.find("elements = 36  # [published] [set]"), std::string::npos);
  EXPECT_NE(text.find("[assumed]"), std::string::npos);
}

TEST(Config, DigestTracksContent) {
  const auto a = config_from_table({});
  toml::table t;
  apply_override(t, "ris.elements=16");
  const auto b = config_from_table(t);
  EXPECT_EQ(config_digest(a), config_digest(config_from_table({})));
  EXPECT_NE(config_digest(a), config_digest(b));
  EXPECT_EQ(config_digest(a).size(), 64u);
  // known SHA-256 vector
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, MissingFile) {
  try {
    (void)load_toml_file("/nonexistent/x.toml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/x.toml"), std::string::npos);
  }
}

}  // namespace
