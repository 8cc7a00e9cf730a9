#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dtvr/agents/runner.hpp"
#include "dtvr/error.hpp"

namespace dtvr {

enum class Precision { Float, Double };

struct SimConfig {
  RunSpec run;
  Precision precision = Precision::Float;
  std::string gaze_dir;          // empty: synthetic gaze
  long long checkpoint_every = 0;  // rounds; 0 = only at the end
  // Resolved key=value pairs in load order, for echoing next to results.
  std::vector<std::pair<std::string, std::string>> resolved;
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline double to_double(const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == v.size() && !v.empty(), Errc::Config, "expected a number, got '" + v + "'");
  return x;
}

inline long long to_int(const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == v.size() && !v.empty(), Errc::Config, "expected an integer, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw Error(Errc::Config, "expected true/false, got '" + v + "'");
}

inline Interval to_interval(const std::string& v) {
  const auto parts = split(v, ',');
  require(parts.size() == 2, Errc::Config, "expected 'lo, hi', got '" + v + "'");
  return {to_double(parts[0]), to_double(parts[1])};
}

inline std::vector<double> to_list(const std::string& v) {
  std::vector<double> out;
  for (const auto& p : split(v, ',')) out.push_back(to_double(p));
  require(!out.empty(), Errc::Config, "expected a comma-separated list");
  return out;
}

inline std::vector<Position> to_positions(const std::string& v) {
  std::vector<Position> out;
  for (const auto& p : split(v, ';')) {
    if (p.empty()) continue;
    const auto xy = split(p, ',');
    require(xy.size() == 2, Errc::Config, "positions are 'x,y; x,y; ...', got '" + p + "'");
    out.push_back({to_double(xy[0]), to_double(xy[1])});
  }
  require(!out.empty(), Errc::Config, "no positions given");
  return out;
}

using Setter = std::function<void(SimConfig&, const std::string&)>;

struct Key {
  Setter set;
  bool required = false;
};

inline const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> table = [] {
    std::map<std::string, Key> k;
    auto req = [&](const char* name, Setter s) { k[name] = {std::move(s), true}; };
    auto opt = [&](const char* name, Setter s) { k[name] = {std::move(s), false}; };

    req("K", [](SimConfig& c, const std::string& v) { c.run.env.users = static_cast<int>(to_int(v)); });
    req("F", [](SimConfig& c, const std::string& v) { c.run.env.content.frames = static_cast<int>(to_int(v)); });
    req("I", [](SimConfig& c, const std::string& v) { c.run.env.content.cols = static_cast<int>(to_int(v)); });
    req("J", [](SimConfig& c, const std::string& v) { c.run.env.content.rows = static_cast<int>(to_int(v)); });
    req("T_th", [](SimConfig& c, const std::string& v) { c.run.env.latency_threshold = to_double(v); });
    req("delta_T", [](SimConfig& c, const std::string& v) { c.run.delta_t = static_cast<int>(to_int(v)); });
    req("P", [](SimConfig& c, const std::string& v) { c.run.env.power = to_double(v); });
    req("B_max", [](SimConfig& c, const std::string& v) { c.run.env.bandwidth_max = to_double(v); });
    req("f_max", [](SimConfig& c, const std::string& v) { c.run.env.frequency_max = to_double(v); });
    req("c1", [](SimConfig& c, const std::string& v) { c.run.env.content.cycles_per_bit[0] = to_double(v); });
    req("c2", [](SimConfig& c, const std::string& v) { c.run.env.content.cycles_per_bit[1] = to_double(v); });
    req("c3", [](SimConfig& c, const std::string& v) { c.run.env.content.cycles_per_bit[2] = to_double(v); });
    req("r1_range", [](SimConfig& c, const std::string& v) { c.run.env.content.res_range[0] = to_interval(v); });
    req("r2_range", [](SimConfig& c, const std::string& v) { c.run.env.content.res_range[1] = to_interval(v); });
    req("b_max", [](SimConfig& c, const std::string& v) { c.run.env.content.b_max = to_double(v); });
    req("b_th", [](SimConfig& c, const std::string& v) { c.run.env.content.b_th = to_double(v); });
    req("qoe_th", [](SimConfig& c, const std::string& v) { c.run.reward.qoe_threshold = to_double(v); });
    req("hfqoe_th", [](SimConfig& c, const std::string& v) { c.run.reward.hfqoe_threshold = to_double(v); });
    req("eps1", [](SimConfig& c, const std::string& v) { c.run.env.eps1 = to_double(v); });
    req("omega", [](SimConfig& c, const std::string& v) { c.run.env.compression = to_double(v); });
    req("w1", [](SimConfig& c, const std::string& v) { c.run.reward.w1 = to_double(v); });
    req("w2", [](SimConfig& c, const std::string& v) { c.run.reward.w2 = to_double(v); });
    req("positions", [](SimConfig& c, const std::string& v) { c.run.env.positions = to_positions(v); });
    req("alpha", [](SimConfig& c, const std::string& v) { c.run.env.alpha = to_double(v); });
    req("noise_dbm", [](SimConfig& c, const std::string& v) { c.run.env.noise_w = dbm_to_watt(to_double(v)); });
    req("gamma", [](SimConfig& c, const std::string& v) { c.run.agent.gamma = to_double(v); });
    req("lr_critic", [](SimConfig& c, const std::string& v) { c.run.agent.lr_critic = to_double(v); });
    req("lr_actor", [](SimConfig& c, const std::string& v) { c.run.agent.lr_actor = to_double(v); });
    req("batch", [](SimConfig& c, const std::string& v) { c.run.agent.batch = static_cast<std::size_t>(to_int(v)); });
    req("buffer_capacity",
        [](SimConfig& c, const std::string& v) { c.run.agent.buffer.capacity = static_cast<std::size_t>(to_int(v)); });
    req("tau", [](SimConfig& c, const std::string& v) { c.run.agent.tau = to_double(v); });
    req("beta1", [](SimConfig& c, const std::string& v) { c.run.agent.buffer.beta1 = to_double(v); });
    req("beta2", [](SimConfig& c, const std::string& v) { c.run.agent.buffer.beta2 = to_double(v); });
    req("mu", [](SimConfig& c, const std::string& v) { c.run.agent.buffer.mu = to_double(v); });
    req("eps2", [](SimConfig& c, const std::string& v) { c.run.agent.buffer.eps2 = to_double(v); });
    req("eps3", [](SimConfig& c, const std::string& v) { c.run.agent.buffer.eps3 = to_double(v); });

    opt("N", [](SimConfig& c, const std::string& v) {
      require(to_int(v) == c.run.env.content.tiles(), Errc::Config, "N must equal I*J (set I and J first)");
    });
    opt("r3", [](SimConfig& c, const std::string& v) { c.run.env.content.r_top = to_double(v); });
    opt("interference_w", [](SimConfig& c, const std::string& v) { c.run.env.interference_w = to_double(v); });
    opt("bias_rho", [](SimConfig& c, const std::string& v) { c.run.env.bias_rho = to_double(v); });
    opt("bias_frac", [](SimConfig& c, const std::string& v) { c.run.env.bias_frac = to_double(v); });
    opt("bias_noise", [](SimConfig& c, const std::string& v) { c.run.env.bias_noise = to_double(v); });
    opt("fading", [](SimConfig& c, const std::string& v) { c.run.env.fading = to_bool(v); });
    opt("prerender_compression",
        [](SimConfig& c, const std::string& v) { c.run.env.prerender_compression = to_bool(v); });
    opt("attention_inner", [](SimConfig& c, const std::string& v) { c.run.attention.inner_radius = static_cast<int>(to_int(v)); });
    opt("attention_mid", [](SimConfig& c, const std::string& v) { c.run.attention.mid_radius = static_cast<int>(to_int(v)); });
    opt("gaze_step_scales", [](SimConfig& c, const std::string& v) { c.run.gaze.step_scales = to_list(v); });
    opt("gaze_dir", [](SimConfig& c, const std::string& v) { c.gaze_dir = v; });
    opt("qoe_scale", [](SimConfig& c, const std::string& v) { c.run.qoe_scale = to_double(v); });
    opt("eps_share", [](SimConfig& c, const std::string& v) { c.run.eps_share = to_double(v); });
    opt("eps_cap", [](SimConfig& c, const std::string& v) { c.run.eps_cap = to_double(v); });
    opt("explore_initial", [](SimConfig& c, const std::string& v) { c.run.agent.exploration.initial = to_double(v); });
    opt("explore_decay", [](SimConfig& c, const std::string& v) { c.run.agent.exploration.decay = to_double(v); });
    opt("explore_floor", [](SimConfig& c, const std::string& v) { c.run.agent.exploration.floor = to_double(v); });
    opt("hidden_layers", [](SimConfig& c, const std::string& v) { c.run.agent.hidden_layers = static_cast<int>(to_int(v)); });
    opt("hidden_width", [](SimConfig& c, const std::string& v) { c.run.agent.hidden_width = static_cast<int>(to_int(v)); });
    opt("actor_final_scale", [](SimConfig& c, const std::string& v) { c.run.agent.actor_final_scale = to_double(v); });
    opt("reward_scale", [](SimConfig& c, const std::string& v) { c.run.agent.reward_scale = to_double(v); });
    opt("offline_rounds", [](SimConfig& c, const std::string& v) { c.run.offline_rounds = to_int(v); });
    opt("rounds", [](SimConfig& c, const std::string& v) { c.run.rounds = to_int(v); });
    opt("seed", [](SimConfig& c, const std::string& v) { c.run.seed = static_cast<std::uint64_t>(to_int(v)); });
    opt("checkpoint_every", [](SimConfig& c, const std::string& v) { c.checkpoint_every = to_int(v); });
    opt("precision", [](SimConfig& c, const std::string& v) {
      if (v == "float")
        c.precision = Precision::Float;
      else if (v == "double")
        c.precision = Precision::Double;
      else
        throw Error(Errc::Config, "precision must be float or double");
    });
    return k;
  }();
  return table;
}

}  // namespace config_detail

// Literal system constants and learning hyper-parameters of the reference setting.
inline constexpr std::string_view kPresetPaperTable1 = R"(# Reference system constants.
K = 4
F = 16
I = 4
J = 4
N = 16
T_th = 0.150
delta_T = 100
P = 1
B_max = 10e6
f_max = 15e9
c1 = 800
c2 = 900
c3 = 1000
r1_range = 0.125, 0.25
r2_range = 0.25, 0.5
r3 = 1
b_max = 12441600
b_th = 460800
qoe_th = 9.8645
hfqoe_th = 0.97
eps1 = 1
omega = 300
w1 = 2
w2 = 2
positions = 23,1; 20,0; 10,5; 15,5
alpha = 4
noise_dbm = -174
gamma = 0.99
lr_critic = 2e-4
lr_actor = 1e-7
batch = 64
buffer_capacity = 10000
tau = 0.01
beta1 = 0.9
beta2 = 0.8
mu = 0.95
eps2 = 0.001
eps3 = 0.001
hidden_layers = 3
hidden_width = 256
rounds = 5000
offline_rounds = 1000
)";

// Same system with rendering cost scaled so that a 150 ms budget is reachable,
// plus a horizon and actor step size that fit a desk run.
inline constexpr std::string_view kPresetDeskScale = R"(# Desk-scale training regime.
include = paper-table1
c1 = 0.16
c2 = 0.18
c3 = 0.2
lr_actor = 1e-4
rounds = 500
offline_rounds = 100
)";

inline std::string_view builtin_preset(std::string_view name) {
  if (name == "paper-table1") return kPresetPaperTable1;
  if (name == "desk-scale") return kPresetDeskScale;
  return {};
}

inline bool is_builtin_preset(std::string_view name) { return !builtin_preset(name).empty(); }

class ConfigParser {
 public:
  SimConfig parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), Errc::Io, "cannot open config " + path.string());
    std::stringstream text;
    text << in.rdbuf();
    return finish(parse_into(text.str(), path.string(), path.parent_path(), 0));
  }

  SimConfig parse_string(std::string_view text, const std::string& origin = "<string>",
                         const std::filesystem::path& base = {}) {
    return finish(parse_into(text, origin, base, 0));
  }

  SimConfig parse_preset(std::string_view name) {
    const auto text = builtin_preset(name);
    require(!text.empty(), Errc::Config, "unknown preset '" + std::string(name) + "'");
    return parse_string(text, "preset:" + std::string(name));
  }

 private:
  SimConfig& parse_into(std::string_view text, const std::string& origin, const std::filesystem::path& base,
                        int depth) {
    require(depth < 8, Errc::Config, origin + ": include nesting too deep");
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string body = config_detail::trim(line);
      if (body.empty()) continue;
      const auto where = origin + ":" + std::to_string(lineno);
      const auto eq = body.find('=');
      require(eq != std::string::npos, Errc::Config, where + ": expected 'key = value'");
      const std::string key = config_detail::trim(std::string_view(body).substr(0, eq));
      const std::string value = config_detail::trim(std::string_view(body).substr(eq + 1));
      require(!key.empty(), Errc::Config, where + ": empty key");
      if (key == "include") {
        if (is_builtin_preset(value)) {
          parse_into(builtin_preset(value), "preset:" + value, {}, depth + 1);
        } else {
          std::filesystem::path p = value;
          if (p.is_relative() && !base.empty()) p = base / p;
          std::ifstream inc(p);
          require(static_cast<bool>(inc), Errc::Config, where + ": cannot include '" + value + "'");
          std::stringstream t;
          t << inc.rdbuf();
          parse_into(t.str(), p.string(), p.parent_path(), depth + 1);
        }
        continue;
      }
      const auto& table = config_detail::keys();
      const auto it = table.find(key);
      require(it != table.end(), Errc::Config, where + ": unknown key '" + key + "'");
      try {
        it->second.set(cfg_, value);
      } catch (const Error& e) {
        throw Error(Errc::Config, where + ": " + key + ": " + e.what());
      }
      seen_.insert(key);
      cfg_.resolved.emplace_back(key, value);
    }
    return cfg_;
  }

  SimConfig finish(SimConfig& cfg) {
    for (const auto& [name, key] : config_detail::keys())
      require(!key.required || seen_.count(name) > 0, Errc::Config, "missing config key " + name);
    validate_config(cfg);
    return cfg;
  }

 public:
  static void validate_config(const SimConfig& cfg) {
    try {
      cfg.run.validate();
    } catch (const Error& e) {
      throw Error(Errc::Config, std::string("invalid configuration: ") + e.what());
    }
    require(cfg.checkpoint_every >= 0, Errc::Config, "checkpoint_every must be >= 0");
  }

 private:
  SimConfig cfg_;
  std::set<std::string> seen_;
};

inline SimConfig load_config(const std::filesystem::path& path) { return ConfigParser().parse_file(path); }
inline SimConfig load_preset(std::string_view name) { return ConfigParser().parse_preset(name); }

inline const std::vector<std::string>& sweepable_keys() {
  static const std::vector<std::string> k{"beta1", "beta2", "mu", "T_th", "hfqoe_th", "omega", "K", "f_max", "B_max"};
  return k;
}

// Applies one sweepable override and revalidates.
inline void set_parameter(SimConfig& cfg, const std::string& key, const std::string& value) {
  const auto& sw = sweepable_keys();
  require(std::find(sw.begin(), sw.end(), key) != sw.end(), Errc::UnknownParameter,
          "'" + key + "' is not sweepable (beta1, beta2, mu, T_th, hfqoe_th, omega, K, f_max, B_max)");
  try {
    config_detail::keys().at(key).set(cfg, value);
  } catch (const Error& e) {
    throw Error(Errc::Config, key + ": " + e.what());
  }
  cfg.resolved.emplace_back(key, value);
  ConfigParser::validate_config(cfg);
}

}  // namespace dtvr
