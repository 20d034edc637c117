// SPDX-License-Identifier: Apache-2.0
//
// Line-delimited JSON protocol "frisim/1" serving one Environment per
// session. See docs/protocol.md for the message reference.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "frisim/config.hpp"
#include "frisim/env.hpp"
#include "frisim/errors.hpp"

namespace frisim::bridge {

inline constexpr std::string_view kProtocolVersion = "frisim/1";

class EncodeError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  DecodeError(std::string code, std::size_t offset, const std::string& what)
      : Error(what), code_(std::move(code)), offset_(offset) {}
  const std::string& code() const { return code_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string code_;
  std::size_t offset_;
};

using InfoValue = std::variant<bool, double>;
using Info = std::map<std::string, InfoValue>;

struct Dims {
  std::uint64_t state = 0;
  std::uint64_t action = 0;
  friend bool operator==(const Dims&, const Dims&) = default;
};

struct ErrorBody {
  std::string code;
  std::string msg;
  std::optional<std::uint64_t> offset;
  friend bool operator==(const ErrorBody&, const ErrorBody&) = default;
};

struct SessionSummary {
  std::uint64_t requests = 0;
  std::uint64_t errors = 0;
  std::uint64_t resets = 0;
  std::uint64_t steps = 0;
  bool closed = false;  // ended by a close request rather than end of stream
  friend bool operator==(const SessionSummary&, const SessionSummary&) = default;
};

// One protocol message, request or response. Absent fields are not emitted.
// A response with `seq_null` set answers a request whose sequence number
// could not be read.
struct Message {
  std::optional<std::uint64_t> seq;
  bool seq_null = false;
  std::optional<std::string> cmd;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<double>> action;
  std::optional<std::string> version;
  std::optional<std::string> config_digest;
  std::optional<Dims> dims;
  std::optional<std::vector<double>> state;
  std::optional<double> reward;
  std::optional<bool> done;
  std::optional<Info> info;
  std::optional<SessionSummary> summary;
  std::optional<ErrorBody> error;

  friend bool operator==(const Message&, const Message&) = default;
};

namespace detail {

inline void put_double(std::string& out, double v, const char* field) {
  if (!std::isfinite(v)) throw EncodeError(std::string("cannot encode non-finite value in '") + field + "'");
  if (v == 0.0 && std::signbit(v)) {
    out += "-0.0";  // "-0" would read back as the integer 0
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

inline void put_uint(std::string& out, std::uint64_t v) { out += std::to_string(v); }

inline void put_string(std::string& out, std::string_view s) {
  out += nlohmann::json(std::string(s)).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline void put_array(std::string& out, const std::vector<double>& v, const char* field) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    put_double(out, v[i], field);
  }
  out += ']';
}

class ObjectWriter {
 public:
  explicit ObjectWriter(std::string& out) : out_(out) { out_ += '{'; }
  ~ObjectWriter() { out_ += '}'; }
  std::string& key(std::string_view k) {
    if (!first_) out_ += ',';
    first_ = false;
    put_string(out_, k);
    out_ += ':';
    return out_;
  }

 private:
  std::string& out_;
  bool first_ = true;
};

}  // namespace detail

// Single-line JSON with a fixed key order and 17 significant digits per float.
inline std::string encode(const Message& m) {
  using namespace detail;
  std::string out;
  {
    ObjectWriter w(out);
    if (m.seq_null)
      w.key("seq") += "null";
    else if (m.seq)
      put_uint(w.key("seq"), *m.seq);
    if (m.cmd) put_string(w.key("cmd"), *m.cmd);
    if (m.seed) put_uint(w.key("seed"), *m.seed);
    if (m.action) put_array(w.key("action"), *m.action, "action");
    if (m.version) put_string(w.key("version"), *m.version);
    if (m.config_digest) put_string(w.key("config_digest"), *m.config_digest);
    if (m.dims) {
      ObjectWriter d(w.key("dims"));
      put_uint(d.key("state"), m.dims->state);
      put_uint(d.key("action"), m.dims->action);
    }
    if (m.state) put_array(w.key("state"), *m.state, "state");
    if (m.reward) put_double(w.key("reward"), *m.reward, "reward");
    if (m.done) w.key("done") += *m.done ? "true" : "false";
    if (m.info) {
      ObjectWriter i(w.key("info"));
      for (const auto& [k, v] : *m.info) {
        std::string& o = i.key(k);
        if (const bool* b = std::get_if<bool>(&v))
          o += *b ? "true" : "false";
        else
          put_double(o, std::get<double>(v), k.c_str());
      }
    }
    if (m.summary) {
      ObjectWriter s(w.key("summary"));
      put_uint(s.key("requests"), m.summary->requests);
      put_uint(s.key("errors"), m.summary->errors);
      put_uint(s.key("resets"), m.summary->resets);
      put_uint(s.key("steps"), m.summary->steps);
      s.key("closed") += m.summary->closed ? "true" : "false";
    }
    if (m.error) {
      ObjectWriter e(w.key("error"));
      put_string(e.key("code"), m.error->code);
      put_string(e.key("msg"), m.error->msg);
      if (m.error->offset) put_uint(e.key("offset"), *m.error->offset);
    }
  }
  return out;
}

namespace detail {

using nlohmann::json;

[[noreturn]] inline void bad(const std::string& what) { throw DecodeError("request", 0, what); }

inline std::uint64_t get_uint(const json& j, const char* field) {
  if (!j.is_number_unsigned()) bad(std::string("'") + field + "' must be a non-negative integer");
  return j.get<std::uint64_t>();
}

inline double get_double(const json& j, const char* field) {
  if (!j.is_number()) bad(std::string("'") + field + "' must be a number");
  return j.get<double>();
}

inline bool get_bool(const json& j, const char* field) {
  if (!j.is_boolean()) bad(std::string("'") + field + "' must be a boolean");
  return j.get<bool>();
}

inline std::string get_string(const json& j, const char* field) {
  if (!j.is_string()) bad(std::string("'") + field + "' must be a string");
  return j.get<std::string>();
}

inline std::vector<double> get_array(const json& j, const char* field) {
  if (!j.is_array()) bad(std::string("'") + field + "' must be an array of numbers");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(get_double(x, field));
  return v;
}

inline const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

}  // namespace detail

// Parses one line. Unknown keys are ignored. Throws DecodeError with code
// "parse" (and the byte offset) for malformed JSON, "request" for JSON of the
// wrong shape.
inline Message decode(std::string_view line) {
  using namespace detail;
  json j;
  try {
    j = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based; report the 0-based index of the offending byte
    throw DecodeError("parse", e.byte > 0 ? e.byte - 1 : 0, e.what());
  } catch (const json::out_of_range& e) {
    // number literals too large for a double, e.g. 1e999
    throw DecodeError("value", 0, e.what());
  }
  if (!j.is_object()) bad("message must be a JSON object");
  Message m;
  if (const json* v = find(j, "seq")) {
    if (v->is_null())
      m.seq_null = true;
    else
      m.seq = get_uint(*v, "seq");
  }
  if (const json* v = find(j, "cmd")) m.cmd = get_string(*v, "cmd");
  if (const json* v = find(j, "seed")) m.seed = get_uint(*v, "seed");
  if (const json* v = find(j, "action")) m.action = get_array(*v, "action");
  if (const json* v = find(j, "version")) m.version = get_string(*v, "version");
  if (const json* v = find(j, "config_digest")) m.config_digest = get_string(*v, "config_digest");
  if (const json* v = find(j, "dims")) {
    if (!v->is_object()) bad("'dims' must be an object");
    Dims d;
    if (const json* s = find(*v, "state")) d.state = get_uint(*s, "dims.state");
    if (const json* a = find(*v, "action")) d.action = get_uint(*a, "dims.action");
    m.dims = d;
  }
  if (const json* v = find(j, "state")) m.state = get_array(*v, "state");
  if (const json* v = find(j, "reward")) m.reward = get_double(*v, "reward");
  if (const json* v = find(j, "done")) m.done = get_bool(*v, "done");
  if (const json* v = find(j, "info")) {
    if (!v->is_object()) bad("'info' must be an object");
    Info info;
    for (const auto& [k, x] : v->items()) {
      if (x.is_boolean())
        info[k] = x.get<bool>();
      else
        info[k] = get_double(x, "info");
    }
    m.info = std::move(info);
  }
  if (const json* v = find(j, "summary")) {
    if (!v->is_object()) bad("'summary' must be an object");
    SessionSummary s;
    if (const json* x = find(*v, "requests")) s.requests = get_uint(*x, "summary.requests");
    if (const json* x = find(*v, "errors")) s.errors = get_uint(*x, "summary.errors");
    if (const json* x = find(*v, "resets")) s.resets = get_uint(*x, "summary.resets");
    if (const json* x = find(*v, "steps")) s.steps = get_uint(*x, "summary.steps");
    if (const json* x = find(*v, "closed")) s.closed = get_bool(*x, "summary.closed");
    m.summary = s;
  }
  if (const json* v = find(j, "error")) {
    if (!v->is_object()) bad("'error' must be an object");
    ErrorBody e;
    if (const json* x = find(*v, "code")) e.code = get_string(*x, "error.code");
    if (const json* x = find(*v, "msg")) e.msg = get_string(*x, "error.msg");
    if (const json* x = find(*v, "offset")) e.offset = get_uint(*x, "error.offset");
    m.error = e;
  }
  return m;
}

inline Info step_info(const StepInfo& si) {
  const auto& r = si.record;
  const auto& c = r.covert;
  const auto& f = si.flags;
  Info info{
      {"slot", static_cast<double>(r.slot)},
      {"R_b", r.rate_bob},
      {"R_c", r.rate_carol},
      {"beta", r.beta},
      {"lambda0", c.lambda0},
      {"lambda1", c.lambda1},
      {"kl01", c.kl01},
      {"kl10", c.kl10},
      {"xi_star", c.xi_star},
      {"c1_ok", c.c1_ok},
      {"public_ok", r.public_ok},
      {"avg_R_b", si.avg_rate_bob},
      {"avg_R_c", si.avg_rate_carol},
      {"beta_clamped", f.beta_clamped},
      {"alice_clamped", f.alice.any()},
      {"bob_clamped", f.bob.any()},
      {"separation_projected", f.separation_projected},
      {"bends_clamped", static_cast<double>(f.bends_clamped)},
      {"out_of_model", static_cast<double>(f.out_of_model)},
  };
  if (std::isfinite(c.tau_star)) info["tau_star"] = c.tau_star;
  return info;
}

// One session: owns its environment and answers requests in order.
class Session {
 public:
  explicit Session(const ScenarioConfig& cfg) : env_(cfg), digest_(config_digest(cfg)) {}

  const Environment& env() const { return env_; }
  const SessionSummary& summary() const { return summary_; }
  bool closed() const { return summary_.closed; }

  // Returns the response line (without the trailing newline).
  std::string handle(std::string_view line) {
    ++summary_.requests;
    Message req;
    try {
      req = decode(line);
    } catch (const DecodeError& e) {
      Message resp;
      resp.seq_null = true;
      resp.error = ErrorBody{e.code(), e.what(), e.code() == "parse" ? std::optional<std::uint64_t>(e.offset()) : std::nullopt};
      return fail(resp);
    }
    Message resp;
    if (req.seq)
      resp.seq = req.seq;
    else
      resp.seq_null = true;
    try {
      if (!req.seq) return fail(resp, "request", "missing 'seq'");
      if (!req.cmd) return fail(resp, "request", "missing 'cmd'");
      const std::string& cmd = *req.cmd;
      if (cmd == "hello") {
        resp.version = std::string(kProtocolVersion);
        resp.config_digest = digest_;
        resp.dims = Dims{env_.state_dim(), env_.action_dim()};
      } else if (cmd == "reset") {
        const auto& st = env_.reset(req.seed);
        ++summary_.resets;
        resp.state = st.to_vector();
        resp.dims = Dims{env_.state_dim(), env_.action_dim()};
      } else if (cmd == "step") {
        if (!req.action) return fail(resp, "request", "step requires 'action'");
        if (req.action->size() != env_.action_dim())
          return fail(resp, "dim",
                      "action has length " + std::to_string(req.action->size()) + ", expected " +
                          std::to_string(env_.action_dim()));
        auto out = env_.step(std::span<const double>(*req.action));
        ++summary_.steps;
        resp.state = out.state.to_vector();
        resp.reward = out.reward;
        resp.done = out.done;
        resp.info = step_info(out.info);
      } else if (cmd == "close") {
        summary_.closed = true;
        resp.summary = summary_;
      } else {
        return fail(resp, "cmd", "unknown command '" + cmd + "'");
      }
      return encode(resp);
    } catch (const EpisodeFinished& e) {
      return fail(resp, "episode", e.what());
    } catch (const DimensionMismatch& e) {
      return fail(resp, "dim", e.what());
    } catch (const DomainError& e) {
      return fail(resp, "value", e.what());
    } catch (const EncodeError& e) {
      return fail(resp, "state", e.what());
    }
  }

 private:
  std::string fail(Message resp, const std::string& code, const std::string& msg) {
    resp.error = ErrorBody{code, msg, std::nullopt};
    return fail(resp);
  }
  std::string fail(const Message& resp) {
    ++summary_.errors;
    Message clean;
    clean.seq = resp.seq;
    clean.seq_null = resp.seq_null;
    clean.error = resp.error;
    return encode(clean);
  }

  Environment env_;
  std::string digest_;
  SessionSummary summary_;
};

// Reads newline-delimited requests until close or end of stream.
inline SessionSummary serve(Session& session, std::istream& in, std::ostream& out) {
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << session.handle(line) << '\n';
    out.flush();
  }
  return session.summary();
}

inline SessionSummary serve(const ScenarioConfig& cfg, std::istream& in, std::ostream& out) {
  Session s(cfg);
  return serve(s, in, out);
}

}  // namespace frisim::bridge
