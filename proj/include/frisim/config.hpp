// SPDX-License-Identifier: Apache-2.0
//
// ScenarioConfig and its TOML schema. Every field has a fixed dotted path, a
// default and a provenance tag: "published" for values taken from the
// reference scenario, "assumed" for defaults chosen for this simulator.
#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <toml.hpp>

#include "frisim/channel.hpp"
#include "frisim/em_core.hpp"
#include "frisim/errors.hpp"
#include "frisim/geometry.hpp"
#include "frisim/noma.hpp"
#include "frisim/uav_dynamics.hpp"

namespace frisim {

enum class RateSource { bob, carol };

struct ScenarioConfig {
  std::uint64_t seed = 1;

  // episode
  std::int64_t slots = 100;
  double dt = 1.0;
  std::string reward_rate_source = "bob";
  double nu1 = 1.0;
  double nu2 = 1.0;

  // covert
  double epsilon = 0.1;
  double epsilon_c = 3.3;

  // noma
  double transmit_power = 0.2;
  double beta_min = 1e-6;
  double beta_max = 1.0 - 1e-6;

  // channel
  double gamma0_db = -10.0;
  double kappa_db = 10.0;
  double alpha_los = 2.0;
  double alpha_nlos = 3.0;
  double noise_dbm = -50.0;
  double carrier_hz = 0.839e9;
  bool gamma0_in_rician = true;
  bool los_only = false;

  // ris
  std::int64_t elements = 64;
  std::int64_t phase_bits = 2;
  Vec3 ris_center{100.0, 0.0, 20.0};
  Vec3 ris_axis{1.0, 0.0, 0.0};
  Vec3 ris_normal{0.0, 1.0, 0.0};
  Vec3 ris_up{0.0, 0.0, 1.0};
  std::array<double, 7> fit{0.8816, 0.0473, -0.1010, 0.0004, -0.000019, 0.000055, 0.000321};
  std::string fit_angle_unit = "degrees";
  std::optional<double> amplitude_override;

  // circuit
  em::CircuitParams circuit;

  // kinematics
  double v_max = 5.0;
  double ac_max = 2.0;
  double z_min = 35.0;
  double z_max = 60.0;
  double d_min = 60.0;

  // nodes
  Vec3 carol{0.0, 0.0, 0.0};
  Vec3 willie{200.0, 0.0, 0.0};
  uav::UavState alice{{60.0, 50.0, 40.0}, 0.0, 0.0, std::numbers::pi / 2.0};
  uav::UavState bob{{160.0, 50.0, 40.0}, 0.0, 0.0, std::numbers::pi / 2.0};

  RateSource rate_source() const { return reward_rate_source == "carol" ? RateSource::carol : RateSource::bob; }

  channel::ChannelParams channel_params() const {
    channel::ChannelParams cp;
    cp.gamma0 = channel::db_to_linear(gamma0_db);
    cp.kappa = los_only ? std::numeric_limits<double>::infinity() : channel::db_to_linear(kappa_db);
    cp.alpha_los = alpha_los;
    cp.alpha_nlos = alpha_nlos;
    cp.noise_power = channel::dbm_to_watts(noise_dbm);
    cp.gamma0_in_rician = gamma0_in_rician;
    return cp;
  }

  uav::KinematicLimits limits() const { return {v_max, ac_max, z_min, z_max, d_min, dt}; }

  em::FitCoefficients fit_coefficients() const {
    return em::FitCoefficients(fit, fit_angle_unit == "radians" ? em::AngleUnit::radians : em::AngleUnit::degrees);
  }

  em::RisFrame ris_frame() const {
    return {ris_center, normalized(ris_axis), normalized(ris_normal), normalized(ris_up),
            0.5 * em::wavelength(carrier_hz)};
  }

  noma::NomaParams noma_params(double beta) const {
    return {beta, transmit_power, channel::dbm_to_watts(noise_dbm)};
  }

  void validate() const;
};

namespace config_detail {

using Ref = std::variant<double*, std::int64_t*, std::uint64_t*, bool*, std::string*, Vec3*,
                         std::array<double, 7>*, std::optional<double>*>;

struct Field {
  std::string_view section;  // empty for top-level keys
  std::string_view key;
  std::string_view provenance;
  std::function<Ref(ScenarioConfig&)> ref;

  std::string path() const {
    return section.empty() ? std::string(key) : std::string(section) + "." + std::string(key);
  }
};

#define FRISIM_FIELD(sec, key, prov, expr) \
  Field { sec, key, prov, [](ScenarioConfig& c) -> Ref { return &(expr); } }

inline const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      FRISIM_FIELD("", "seed", "assumed", c.seed),
      FRISIM_FIELD("episode", "slots", "assumed", c.slots),
      FRISIM_FIELD("episode", "dt_s", "assumed", c.dt),
      FRISIM_FIELD("episode", "reward_rate_source", "assumed", c.reward_rate_source),
      FRISIM_FIELD("episode", "nu1", "assumed", c.nu1),
      FRISIM_FIELD("episode", "nu2", "assumed", c.nu2),
      FRISIM_FIELD("covert", "epsilon", "published", c.epsilon),
      FRISIM_FIELD("covert", "epsilon_c", "published", c.epsilon_c),
      FRISIM_FIELD("noma", "transmit_power_w", "published", c.transmit_power),
      FRISIM_FIELD("noma", "beta_min", "assumed", c.beta_min),
      FRISIM_FIELD("noma", "beta_max", "assumed", c.beta_max),
      FRISIM_FIELD("channel", "gamma0_db", "published", c.gamma0_db),
      FRISIM_FIELD("channel", "kappa_db", "published", c.kappa_db),
      FRISIM_FIELD("channel", "alpha_los", "published", c.alpha_los),
      FRISIM_FIELD("channel", "alpha_nlos", "published", c.alpha_nlos),
      FRISIM_FIELD("channel", "noise_dbm", "published", c.noise_dbm),
      FRISIM_FIELD("channel", "carrier_hz", "assumed", c.carrier_hz),
      FRISIM_FIELD("channel", "gamma0_in_rician", "assumed", c.gamma0_in_rician),
      FRISIM_FIELD("channel", "los_only", "assumed", c.los_only),
      FRISIM_FIELD("ris", "elements", "published", c.elements),
      FRISIM_FIELD("ris", "phase_bits", "assumed", c.phase_bits),
      FRISIM_FIELD("ris", "center", "assumed", c.ris_center),
      FRISIM_FIELD("ris", "axis", "assumed", c.ris_axis),
      FRISIM_FIELD("ris", "normal", "assumed", c.ris_normal),
      FRISIM_FIELD("ris", "up", "assumed", c.ris_up),
      FRISIM_FIELD("ris", "fit", "published", c.fit),
      FRISIM_FIELD("ris", "fit_angle_unit", "assumed", c.fit_angle_unit),
      FRISIM_FIELD("ris", "amplitude_override", "assumed", c.amplitude_override),
      FRISIM_FIELD("circuit", "L_B_h", "published", c.circuit.normal.bottom_inductance),
      FRISIM_FIELD("circuit", "L_T_h", "published", c.circuit.normal.top_inductance),
      FRISIM_FIELD("circuit", "R_T_ohm", "published", c.circuit.normal.top_resistance),
      FRISIM_FIELD("circuit", "C_T_f", "published", c.circuit.normal.top_capacitance),
      FRISIM_FIELD("circuit", "C_min_f", "published", c.circuit.varactor_min),
      FRISIM_FIELD("circuit", "C_max_f", "published", c.circuit.varactor_max),
      FRISIM_FIELD("circuit", "frequency_hz", "assumed", c.circuit.frequency_hz),
      FRISIM_FIELD("circuit", "eps_r", "assumed", c.circuit.eps_r),
      FRISIM_FIELD("circuit", "substrate_m", "assumed", c.circuit.substrate_m),
      FRISIM_FIELD("kinematics", "v_max", "published", c.v_max),
      FRISIM_FIELD("kinematics", "ac_max", "published", c.ac_max),
      FRISIM_FIELD("kinematics", "z_min", "published", c.z_min),
      FRISIM_FIELD("kinematics", "z_max", "published", c.z_max),
      FRISIM_FIELD("kinematics", "d_min", "published", c.d_min),
      FRISIM_FIELD("nodes", "carol", "assumed", c.carol),
      FRISIM_FIELD("nodes", "willie", "assumed", c.willie),
      FRISIM_FIELD("alice", "position", "assumed", c.alice.position),
      FRISIM_FIELD("alice", "speed", "assumed", c.alice.speed),
      FRISIM_FIELD("alice", "heading", "assumed", c.alice.heading),
      FRISIM_FIELD("alice", "pitch", "assumed", c.alice.pitch),
      FRISIM_FIELD("bob", "position", "assumed", c.bob.position),
      FRISIM_FIELD("bob", "speed", "assumed", c.bob.speed),
      FRISIM_FIELD("bob", "heading", "assumed", c.bob.heading),
      FRISIM_FIELD("bob", "pitch", "assumed", c.bob.pitch),
  };
  return f;
}

#undef FRISIM_FIELD

inline const Field* find_field(std::string_view section, std::string_view key) {
  for (const auto& f : fields())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

inline double read_double(const toml::node& n, const std::string& path) {
  if (auto v = n.value<double>()) return *v;
  throw ConfigError(path, "expected a number");
}

inline void read_into(const toml::node& n, const Ref& ref, const std::string& path) {
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) {
          *p = read_double(n, path);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          if (auto v = n.as_integer()) *p = v->get();
          else throw ConfigError(path, "expected an integer");
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          auto v = n.as_integer();
          if (!v || v->get() < 0) throw ConfigError(path, "expected a non-negative integer");
          *p = static_cast<std::uint64_t>(v->get());
        } else if constexpr (std::is_same_v<T, bool>) {
          if (auto v = n.as_boolean()) *p = v->get();
          else throw ConfigError(path, "expected a boolean");
        } else if constexpr (std::is_same_v<T, std::string>) {
          if (auto v = n.as_string()) *p = v->get();
          else throw ConfigError(path, "expected a string");
        } else if constexpr (std::is_same_v<T, std::optional<double>>) {
          *p = read_double(n, path);
        } else {
          const auto* arr = n.as_array();
          constexpr std::size_t want = std::is_same_v<T, Vec3> ? 3 : 7;
          if (!arr || arr->size() != want)
            throw ConfigError(path, "expected an array of " + std::to_string(want) + " numbers");
          std::array<double, want> vals{};
          for (std::size_t i = 0; i < want; ++i) vals[i] = read_double((*arr)[i], path);
          if constexpr (std::is_same_v<T, Vec3>) *p = {vals[0], vals[1], vals[2]};
          else *p = vals;
        }
      },
      ref);
}

// Shortest representation that parses back to the same double, always
// spelled as a TOML float.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string format_value(const Ref& ref) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) return format_double(*p);
        else if constexpr (std::is_same_v<T, std::int64_t> || std::is_same_v<T, std::uint64_t>)
          return std::to_string(*p);
        else if constexpr (std::is_same_v<T, bool>) return *p ? "true" : "false";
        else if constexpr (std::is_same_v<T, std::string>) return "\"" + *p + "\"";
        else if constexpr (std::is_same_v<T, std::optional<double>>) return *p ? format_double(**p) : "";
        else if constexpr (std::is_same_v<T, Vec3>)
          return "[" + format_double(p->x) + ", " + format_double(p->y) + ", " + format_double(p->z) + "]";
        else {
          std::string s = "[";
          for (std::size_t i = 0; i < p->size(); ++i) s += (i ? ", " : "") + format_double((*p)[i]);
          return s + "]";
        }
      },
      ref);
}

inline void read_angle_table(const toml::node& n, em::CircuitParams& cp) {
  const std::string path = "circuit.angle_table";
  const auto* arr = n.as_array();
  if (!arr) throw ConfigError(path, "expected an array of tables");
  cp.angle_table.clear();
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const auto* t = (*arr)[i].as_table();
    if (!t) throw ConfigError(p, "expected a table");
    em::AngleSample s{};
    auto get = [&](std::string_view key, double& out) {
      const auto* v = t->get(key);
      if (!v) throw ConfigError(p + "." + std::string(key), "missing");
      out = read_double(*v, p + "." + std::string(key));
    };
    get("incidence_deg", s.incidence_deg);
    get("L_B_h", s.components.bottom_inductance);
    get("L_T_h", s.components.top_inductance);
    get("R_T_ohm", s.components.top_resistance);
    get("C_T_f", s.components.top_capacitance);
    for (auto&& [k, _] : *t) {
      const auto key = k.str();
      if (key != "incidence_deg" && key != "L_B_h" && key != "L_T_h" && key != "R_T_ohm" && key != "C_T_f")
        throw ConfigError(p + "." + std::string(key), "unknown key");
    }
    cp.angle_table.push_back(s);
  }
}

}  // namespace config_detail

inline void ScenarioConfig::validate() const {
  auto require = [](bool ok, const char* path, const char* what) {
    if (!ok) throw ConfigError(path, what);
  };
  require(slots >= 1, "episode.slots", "must be >= 1");
  require(dt > 0, "episode.dt_s", "must be positive");
  require(reward_rate_source == "bob" || reward_rate_source == "carol", "episode.reward_rate_source",
          "must be \"bob\" or \"carol\"");
  require(nu1 >= 0, "episode.nu1", "must be >= 0");
  require(nu2 >= 0, "episode.nu2", "must be >= 0");
  require(epsilon >= 0 && epsilon <= 1, "covert.epsilon", "must lie in [0, 1]");
  require(epsilon_c >= 0, "covert.epsilon_c", "must be >= 0");
  require(transmit_power > 0, "noma.transmit_power_w", "must be positive");
  require(beta_min > 0 && beta_min < 1, "noma.beta_min", "must lie in (0, 1)");
  require(beta_max > beta_min && beta_max < 1, "noma.beta_max", "must lie in (beta_min, 1)");
  require(alpha_los >= 1, "channel.alpha_los", "must be >= 1");
  require(alpha_nlos >= alpha_los, "channel.alpha_nlos", "must be >= alpha_los");
  require(kappa_db > -300, "channel.kappa_db", "out of range");
  require(carrier_hz > 0, "channel.carrier_hz", "must be positive");
  require(elements >= 1, "ris.elements", "must be >= 1");
  require(phase_bits >= 1 && phase_bits <= 3, "ris.phase_bits", "must be 1, 2 or 3");
  require(norm(ris_axis) > 0 && norm(ris_normal) > 0 && norm(ris_up) > 0, "ris.axis", "frame vectors must be non-zero");
  require(std::abs(dot(normalized(ris_axis), normalized(ris_normal))) < 1e-9, "ris.normal",
          "must be orthogonal to ris.axis");
  require(fit_angle_unit == "degrees" || fit_angle_unit == "radians", "ris.fit_angle_unit",
          "must be \"degrees\" or \"radians\"");
  require(!amplitude_override || (*amplitude_override >= 0 && *amplitude_override <= 1), "ris.amplitude_override",
          "must lie in [0, 1]");
  try {
    (void)fit_coefficients();
  } catch (const DomainError& e) {
    throw ConfigError("ris.fit", e.what());
  }
  try {
    circuit.validate();
  } catch (const DomainError& e) {
    throw ConfigError("circuit", e.what());
  }
  require(v_max > 0, "kinematics.v_max", "must be positive");
  require(ac_max > 0, "kinematics.ac_max", "must be positive");
  require(z_min > 0, "kinematics.z_min", "must be positive");
  require(z_max > z_min, "kinematics.z_max", "must exceed z_min");
  require(d_min >= 1, "kinematics.d_min", "must be >= 1 m");
  for (const auto* who : {"alice", "bob"}) {
    const auto& s = std::string_view(who) == "alice" ? alice : bob;
    const std::string base = who;
    if (!(s.position.z >= z_min && s.position.z <= z_max))
      throw ConfigError(base + ".position", "altitude outside [z_min, z_max]");
    if (!(s.speed >= 0 && s.speed <= v_max)) throw ConfigError(base + ".speed", "must lie in [0, v_max]");
    if (!(s.heading >= 0 && s.heading < 2 * std::numbers::pi))
      throw ConfigError(base + ".heading", "must lie in [0, 2pi)");
    if (!(s.pitch >= 0 && s.pitch < std::numbers::pi)) throw ConfigError(base + ".pitch", "must lie in [0, pi)");
  }
  require(distance(alice.position, bob.position) >= d_min, "bob.position", "closer than d_min to alice");
  const double d_ris = std::min({distance(carol, ris_center), distance(willie, ris_center)});
  require(d_ris >= 1, "nodes", "ground nodes must be >= 1 m from the surface");
  require(distance(alice.position, carol) >= 1 && distance(alice.position, willie) >= 1, "alice.position",
          "must be >= 1 m from carol and willie");
}

// Resolves a parsed TOML document against the schema. Unknown keys are errors.
inline ScenarioConfig config_from_table(const toml::table& root) {
  ScenarioConfig cfg;
  for (auto&& [k, node] : root) {
    const std::string section(k.str());
    if (auto* tbl = node.as_table()) {
      for (auto&& [k2, leaf] : *tbl) {
        const std::string key(k2.str());
        const std::string path = section + "." + key;
        if (section == "circuit" && key == "angle_table") {
          config_detail::read_angle_table(leaf, cfg.circuit);
          continue;
        }
        const auto* f = config_detail::find_field(section, key);
        if (!f) throw ConfigError(path, "unknown key");
        config_detail::read_into(leaf, f->ref(cfg), path);
      }
    } else {
      const auto* f = config_detail::find_field("", section);
      if (!f) throw ConfigError(section, "unknown key");
      config_detail::read_into(node, f->ref(cfg), section);
    }
  }
  cfg.validate();
  return cfg;
}

inline toml::table parse_toml_text(std::string_view text, std::string_view source = "config") {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(std::string(source), os.str());
  }
}

inline toml::table load_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_toml_text(ss.str(), path);
}

// Applies a `dotted.path=value` override; the value uses TOML syntax
// (`ris.elements=16`, `channel.los_only=true`, `nodes.willie=[150,0,0]`).
inline void apply_override(toml::table& root, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError(std::string(assignment), "override must be key=value");
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  const std::string path(trim(assignment.substr(0, eq)));
  const std::string value(trim(assignment.substr(eq + 1)));
  if (path.empty()) throw ConfigError(std::string(assignment), "empty key");

  toml::table parsed = parse_toml_text("v = " + value, path);
  toml::table* tbl = &root;
  std::string_view rest = path;
  for (auto dot = rest.find('.'); dot != std::string_view::npos; dot = rest.find('.')) {
    const std::string part(rest.substr(0, dot));
    rest.remove_prefix(dot + 1);
    auto* child = tbl->get(part);
    if (!child) {
      tbl->insert(part, toml::table{});
      child = tbl->get(part);
    }
    tbl = child->as_table();
    if (!tbl) throw ConfigError(path, "path crosses a non-table value");
  }
  tbl->insert_or_assign(std::string(rest), std::move(*parsed.get("v")));
}

inline ScenarioConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  toml::table root = load_toml_file(path);
  for (const auto& o : overrides) apply_override(root, o);
  return config_from_table(root);
}

// Resolved config as TOML. With annotate=true each line carries its
// provenance tag, and "set" marks keys present in `explicit_keys`.
inline std::string config_to_toml(ScenarioConfig cfg, bool annotate = true,
                                  const std::set<std::string>& explicit_keys = {}) {
  using namespace config_detail;
  std::ostringstream os;
  std::string_view current = "";
  bool first = true;
  for (const auto& f : fields()) {
    if (f.section != current || first) {
      if (!f.section.empty()) os << (first ? "" : "\n") << "[" << f.section << "]\n";
      current = f.section;
      first = false;
    }
    const Ref ref = f.ref(cfg);
    const std::string val = format_value(ref);
    if (val.empty()) {
      if (annotate) os << "# " << f.key << " unset\n";
      continue;
    }
    os << f.key << " = " << val;
    if (annotate) {
      os << "  # [" << f.provenance << "]";
      if (explicit_keys.count(f.path())) os << " [set]";
    }
    os << "\n";
  }
  for (const auto& s : cfg.circuit.angle_table) {
    os << "\n[[circuit.angle_table]]\n"
       << "incidence_deg = " << format_double(s.incidence_deg) << "\n"
       << "L_B_h = " << format_double(s.components.bottom_inductance) << "\n"
       << "L_T_h = " << format_double(s.components.top_inductance) << "\n"
       << "R_T_ohm = " << format_double(s.components.top_resistance) << "\n"
       << "C_T_f = " << format_double(s.components.top_capacitance) << "\n";
  }
  return os.str();
}

// Dotted paths of every leaf present in a TOML document.
inline std::set<std::string> explicit_keys(const toml::table& root) {
  std::set<std::string> keys;
  for (auto&& [k, node] : root) {
    if (auto* tbl = node.as_table())
      for (auto&& [k2, _] : *tbl) keys.insert(std::string(k.str()) + "." + std::string(k2.str()));
    else
      keys.insert(std::string(k.str()));
  }
  return keys;
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

// Stable identifier of the resolved configuration.
inline std::string config_digest(const ScenarioConfig& cfg) { return sha256_hex(config_to_toml(cfg, false)); }

}  // namespace frisim
