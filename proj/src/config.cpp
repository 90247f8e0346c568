#include "dcftp/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dcftp/error.hpp"

namespace dcftp {

namespace {

using nlohmann::json;

std::string strip_code(const std::string& what) {
  const std::string p = std::string(to_string(ErrorCode::ConfigError)) + ": ";
  return what.rfind(p, 0) == 0 ? what.substr(p.size()) : what;
}

[[noreturn]] void fail(int line, const std::string& field, const std::string& msg) {
  std::string where = line > 0 ? "line " + std::to_string(line) + ", " : "";
  throw Error(ErrorCode::ConfigError, where + "field '" + field + "': " + msg);
}

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

// section -> key -> value
using Sections = std::map<std::string, std::map<std::string, Entry>>;

struct Field {
  std::string section, key;
  Entry e;
  std::string name() const { return section.empty() ? key : section + "." + key; }
};

double to_double(const Field& f) {
  const std::string& s = f.e.value;
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) fail(f.e.line, f.name(), "expected a number, got '" + s + "'");
  return v;
}

std::uint64_t to_u64(const Field& f) {
  const std::string& s = f.e.value;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail(f.e.line, f.name(), "expected a non-negative integer, got '" + s + "'");
  return v;
}

Distribution to_distribution(const Field& f) {
  try {
    return parse_distribution(f.e.value);
  } catch (const Error& e) {
    fail(f.e.line, f.name(), strip_code(e.what()));
  }
}

Eigen::MatrixXd to_matrix(const json& j, int d, int line, const std::string& field) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) fail(line, field, "expected " + std::to_string(d) + " rows");
  Eigen::MatrixXd Q(d, d);
  for (int r = 0; r < d; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != d)
      fail(line, field, "row " + std::to_string(r + 1) + " must have " + std::to_string(d) + " entries");
    for (int c = 0; c < d; ++c) {
      if (!j[r][c].is_number()) fail(line, field, "entries must be numbers");
      Q(r, c) = j[r][c].get<double>();
    }
  }
  return Q;
}

void apply_sampler(SamplerOptions& o, const Field& f) {
  const auto& k = f.key;
  auto in_unit = [&](double v) {
    if (!(v > 0 && v < 1)) fail(f.e.line, f.name(), "must lie in (0, 1)");
    return v;
  };
  auto positive = [&](double v) {
    if (!(v > 0)) fail(f.e.line, f.name(), "must be positive");
    return v;
  };
  if (k == "milestone_m")
    o.milestone_m = positive(to_double(f));
  else if (k == "delta_frac")
    o.aux.delta_frac = in_unit(to_double(f));
  else if (k == "deltabar_frac")
    o.aux.deltabar_frac = in_unit(to_double(f));
  else if (k == "ct_initial")
    o.ct_initial = positive(to_double(f));
  else if (k == "ct_growth") {
    o.ct_growth = to_double(f);
    if (!(o.ct_growth >= 1)) fail(f.e.line, f.name(), "must be >= 1");
  } else if (k == "max_rounds")
    o.max_rounds = to_u64(f);
  else if (k == "max_events")
    o.max_events = to_u64(f);
  else
    fail(f.e.line, f.name(), "unknown key");
}

void apply_batch(BatchConfig& b, const Field& f) {
  if (f.key == "n") {
    b.n = to_u64(f);
  } else if (f.key == "seed") {
    b.seed = to_u64(f);
    b.seed_given = true;
  } else if (f.key == "workers") {
    std::uint64_t w = to_u64(f);
    if (w > 1024) fail(f.e.line, f.name(), "at most 1024 workers");
    b.workers = static_cast<int>(w);
  } else {
    fail(f.e.line, f.name(), "unknown key");
  }
}

void finish_network(NetworkSpec& spec) {
  try {
    spec.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("network: ") + e.what());
  }
}

RunConfig from_sections(const Sections& secs) {
  RunConfig cfg;
  auto net = secs.find("network");
  if (net == secs.end()) fail(0, "network", "missing section [network]");
  auto get = [&](const std::string& sec, const std::string& key) -> std::optional<Field> {
    auto s = secs.find(sec);
    if (s == secs.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return Field{sec, key, k->second};
  };
  auto d_field = get("network", "d");
  if (!d_field) fail(0, "network.d", "missing");
  std::uint64_t d = to_u64(*d_field);
  if (d < 1 || d > 64) fail(d_field->e.line, "network.d", "must lie in [1, 64]");
  cfg.network.d = static_cast<int>(d);
  for (const auto& [key, e] : net->second)
    if (key != "d" && key != "Q") fail(e.line, "network." + key, "unknown key");

  auto q = get("network", "Q");
  if (!q) fail(0, "network.Q", "missing");
  json jq;
  try {
    jq = json::parse(q->e.value);
  } catch (const json::parse_error& e) {
    fail(q->e.line, "network.Q", std::string("bad array literal: ") + e.what());
  }
  cfg.network.Q = to_matrix(jq, cfg.network.d, q->e.line, "network.Q");

  for (int i = 0; i < cfg.network.d; ++i) {
    std::string sec = "network.station." + std::to_string(i + 1);
    if (!secs.count(sec)) fail(0, sec, "missing section [" + sec + "]");
    for (const auto& [key, e] : secs.at(sec))
      if (key != "arrival" && key != "service") fail(e.line, sec + "." + key, "unknown key");
    auto a = get(sec, "arrival");
    if (!a) fail(0, sec + ".arrival", "missing (use 'none' for no external arrivals)");
    if (a->e.value == "none")
      cfg.network.arrivals.push_back(std::nullopt);
    else
      cfg.network.arrivals.push_back(to_distribution(*a));
    auto s = get(sec, "service");
    if (!s) fail(0, sec + ".service", "missing");
    cfg.network.services.push_back(to_distribution(*s));
  }
  for (const auto& [sec, kv] : secs) {
    if (sec == "sampler") {
      for (const auto& [key, e] : kv) apply_sampler(cfg.sampler, {sec, key, e});
    } else if (sec == "batch") {
      for (const auto& [key, e] : kv) apply_batch(cfg.batch, {sec, key, e});
    } else if (sec != "network" && sec.rfind("network.station.", 0) != 0) {
      fail(kv.empty() ? 0 : kv.begin()->second.line, sec, "unknown section");
    } else if (sec.rfind("network.station.", 0) == 0) {
      const std::string idx = sec.substr(16);
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), v);
      if (ec != std::errc() || p != idx.data() + idx.size() || v < 1 || v > d)
        fail(kv.empty() ? 0 : kv.begin()->second.line, sec, "station index out of range");
    }
  }
  finish_network(cfg.network);
  return cfg;
}

RunConfig parse_ini(const std::string& text) {
  Sections secs;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    // comments start at '#' or ';' outside of brackets/parentheses
    int depth = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      char c = s[k];
      if (c == '[' || c == '(') ++depth;
      if (c == ']' || c == ')') --depth;
      if ((c == '#' || c == ';') && depth <= 0) {
        s.resize(k);
        break;
      }
    }
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[' && s.back() == ']' && s.find('=') == std::string::npos) {
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) fail(line, "[]", "empty section name");
      if (secs.count(section)) fail(line, section, "duplicate section");
      secs[section];
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, s, "expected 'key = value'");
    if (section.empty()) fail(line, trim(s.substr(0, eq)), "key outside of any section");
    std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
    if (key.empty()) fail(line, section, "empty key");
    if (secs[section].count(key)) fail(line, section + "." + key, "duplicate key");
    secs[section][key] = {value, line};
  }
  return from_sections(secs);
}

std::string scalar_text(const json& v, const std::string& field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number()) return v.dump();
  if (v.is_array()) return v.dump();
  if (v.is_null()) return "none";
  fail(0, field, "unsupported value " + v.dump());
}

RunConfig parse_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("JSON: ") + e.what());
  }
  if (!j.is_object()) fail(0, "<root>", "expected an object");
  Sections secs;
  for (const auto& [sec, body] : j.items()) {
    if (!body.is_object()) fail(0, sec, "expected an object");
    if (sec == "network") {
      for (const auto& [key, v] : body.items()) {
        if (key == "stations") {
          if (!v.is_array()) fail(0, "network.stations", "expected an array");
          for (std::size_t i = 0; i < v.size(); ++i) {
            std::string name = "network.station." + std::to_string(i + 1);
            secs[name];
            for (const auto& [k2, v2] : v[i].items()) secs[name][k2] = {scalar_text(v2, name + "." + k2), 0};
          }
        } else {
          secs["network"][key] = {scalar_text(v, "network." + key), 0};
        }
      }
    } else {
      secs[sec];
      for (const auto& [key, v] : body.items()) secs[sec][key] = {scalar_text(v, sec + "." + key), 0};
    }
  }
  return from_sections(secs);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  auto p = text.find_first_not_of(" \t\r\n");
  if (p != std::string::npos && text[p] == '{') return parse_json(text);
  return parse_ini(text);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace dcftp
