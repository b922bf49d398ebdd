#include "condyn/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "condyn/envs.hpp"
#include "condyn/errors.hpp"

namespace condyn::run {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return "";
  }
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct RawEntry {
  std::string value;
  int line;
};

double parse_double(const std::string& key, const RawEntry& e) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(e.value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != e.value.size() || e.value.empty()) {
    throw ConfigError("invalid value for '" + key + "' at line " +
                      std::to_string(e.line) + ": '" + e.value + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& key, const RawEntry& e) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(e.value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != e.value.size() || e.value.empty() || e.value[0] == '-') {
    throw ConfigError("invalid value for '" + key + "' at line " +
                      std::to_string(e.line) + ": '" + e.value + "'");
  }
  return static_cast<std::uint64_t>(v);
}

bool parse_switch(const std::string& key, const RawEntry& e) {
  if (e.value == "on" || e.value == "true" || e.value == "1") {
    return true;
  }
  if (e.value == "off" || e.value == "false" || e.value == "0") {
    return false;
  }
  throw ConfigError("invalid value for '" + key + "' at line " +
                    std::to_string(e.line) + ": '" + e.value +
                    "' (expected on/off)");
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "env",          "pathway",     "alpha",        "consistency",
      "k",            "horizon",     "gamma",        "seed",
      "updates",      "batch",       "lr_policy",    "lr_model",
      "lr_encoder",   "encoder_mode", "entropy_coef", "value_coef",
      "eval_every",   "out_dir",     "data_dir"};
  return keys;
}

}  // namespace

std::string RunConfig::run_dir() const {
  return out_dir + "/seed" + std::to_string(seed);
}

RunConfig parse_config_text(const std::string& text) {
  std::map<std::string, RawEntry> raw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    std::string t = trim(line);
    if (t.empty()) {
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("malformed config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("malformed config line " + std::to_string(lineno) +
                        ": empty key");
    }
    bool known = false;
    for (const std::string& k : known_keys()) {
      if (k == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown config key '" + key + "' at line " +
                        std::to_string(lineno));
    }
    raw[key] = RawEntry{value, lineno};
  }

  RunConfig cfg;
  auto get = [&raw](const std::string& key) -> const RawEntry* {
    auto it = raw.find(key);
    return it == raw.end() ? nullptr : &it->second;
  };

  if (const RawEntry* e = get("pathway")) {
    cfg.pathway = e->value;
    if (cfg.pathway != "obs" && cfg.pathway != "ssm") {
      throw ConfigError("invalid value for 'pathway' at line " +
                        std::to_string(e->line) + ": '" + e->value +
                        "' (expected obs or ssm)");
    }
  }
  // Pathway-dependent defaults, overridden below if the key was given.
  if (cfg.pathway == "ssm") {
    cfg.k = 10;
    cfg.horizon = 10;
    cfg.updates = 500;
  }

  if (const RawEntry* e = get("env")) {
    cfg.env = e->value;
  }
  env::EnvSpec espec = env::make_env(cfg.env);  // validates the name
  if (cfg.pathway == "obs") {
    cfg.horizon = espec.horizon;
  }

  if (const RawEntry* e = get("alpha")) {
    cfg.alpha = parse_double("alpha", *e);
    if (cfg.alpha < 0.0) {
      throw ConfigError("'alpha' must be >= 0, got " + e->value + " at line " +
                        std::to_string(e->line));
    }
  }
  if (const RawEntry* e = get("consistency")) {
    cfg.consistency = parse_switch("consistency", *e);
  }
  if (!cfg.consistency) {
    cfg.alpha = 0.0;
  }
  if (const RawEntry* e = get("k")) {
    cfg.k = static_cast<std::size_t>(parse_uint("k", *e));
    if (cfg.k == 0) {
      throw ConfigError("'k' must be >= 1 at line " + std::to_string(e->line));
    }
  }
  if (const RawEntry* e = get("horizon")) {
    cfg.horizon = static_cast<std::size_t>(parse_uint("horizon", *e));
    if (cfg.horizon == 0) {
      throw ConfigError("'horizon' must be >= 1 at line " +
                        std::to_string(e->line));
    }
  }
  if (const RawEntry* e = get("gamma")) {
    cfg.gamma = parse_double("gamma", *e);
    if (cfg.gamma < 0.0 || cfg.gamma >= 1.0) {
      throw ConfigError("'gamma' must lie in [0,1) at line " +
                        std::to_string(e->line));
    }
  }
  if (const RawEntry* e = get("seed")) {
    cfg.seed = parse_uint("seed", *e);
  }
  if (const RawEntry* e = get("updates")) {
    cfg.updates = static_cast<std::size_t>(parse_uint("updates", *e));
    if (cfg.updates == 0) {
      throw ConfigError("'updates' must be >= 1 at line " +
                        std::to_string(e->line));
    }
  }
  if (const RawEntry* e = get("batch")) {
    cfg.batch = static_cast<std::size_t>(parse_uint("batch", *e));
    if (cfg.batch == 0) {
      throw ConfigError("'batch' must be >= 1 at line " +
                        std::to_string(e->line));
    }
  }
  auto positive_rate = [](const std::string& key, const RawEntry& e) {
    double v = parse_double(key, e);
    if (v <= 0.0) {
      throw ConfigError("'" + key + "' must be > 0 at line " +
                        std::to_string(e.line));
    }
    return v;
  };
  if (const RawEntry* e = get("lr_policy")) {
    cfg.lr_policy = positive_rate("lr_policy", *e);
  }
  if (const RawEntry* e = get("lr_model")) {
    cfg.lr_model = positive_rate("lr_model", *e);
  }
  if (const RawEntry* e = get("lr_encoder")) {
    cfg.lr_encoder = positive_rate("lr_encoder", *e);
  }
  if (const RawEntry* e = get("encoder_mode")) {
    cfg.encoder_mode = e->value;
    if (cfg.encoder_mode != "train" && cfg.encoder_mode != "frozen") {
      throw ConfigError("invalid value for 'encoder_mode' at line " +
                        std::to_string(e->line) + ": '" + e->value +
                        "' (expected train or frozen)");
    }
  }
  if (const RawEntry* e = get("entropy_coef")) {
    cfg.entropy_coef = parse_double("entropy_coef", *e);
    if (cfg.entropy_coef < 0.0) {
      throw ConfigError("'entropy_coef' must be >= 0 at line " +
                        std::to_string(e->line));
    }
  }
  if (const RawEntry* e = get("value_coef")) {
    cfg.value_coef = parse_double("value_coef", *e);
    if (cfg.value_coef < 0.0) {
      throw ConfigError("'value_coef' must be >= 0 at line " +
                        std::to_string(e->line));
    }
  }
  if (const RawEntry* e = get("eval_every")) {
    cfg.eval_every = static_cast<std::size_t>(parse_uint("eval_every", *e));
    if (cfg.eval_every == 0) {
      throw ConfigError("'eval_every' must be >= 1 at line " +
                        std::to_string(e->line));
    }
  }
  if (const RawEntry* e = get("out_dir")) {
    if (e->value.empty()) {
      throw ConfigError("'out_dir' must not be empty at line " +
                        std::to_string(e->line));
    }
    cfg.out_dir = e->value;
  }
  if (const RawEntry* e = get("data_dir")) {
    if (e->value.empty()) {
      throw ConfigError("'data_dir' must not be empty at line " +
                        std::to_string(e->line));
    }
    cfg.data_dir = e->value;
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw IoError("cannot read config file: " + path);
  }
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace condyn::run
