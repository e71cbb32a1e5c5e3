#pragma once

// Flat key-value configuration with dotted keys, e.g.
//   train.lr_generator=0.0001
// '#' starts a comment; blank lines are ignored. CLI flags override file
// values by applying "key=value" pairs on top.

#include "zsbir/common.hpp"

#include <fstream>
#include <map>
#include <string>

namespace zsbir {

class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = trim(line);
      if (s.empty() || s[0] == '#') continue;
      std::size_t eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": expected key=value, got '" + s + "'");
      std::string key = trim(s.substr(0, eq));
      std::string val = trim(s.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": empty key");
      cfg.kv_[key] = val;
    }
    return cfg;
  }

  // "key=value" override, used for CLI --set flags
  void apply_override(const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must be key=value, got '" + assignment +
                        "'");
    kv_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
  }

  void set(const std::string& key, const std::string& val) { kv_[key] = val; }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
  }
  std::string require(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
  }

  double num(const std::string& key, double dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    double v;
    if (!parse_double(it->second, v))
      throw ConfigError("config key " + key + ": not a number: '" +
                        it->second + "'");
    return v;
  }

  long integer(const std::string& key, long dflt) const {
    double v = num(key, static_cast<double>(dflt));
    long r = static_cast<long>(v);
    if (static_cast<double>(r) != v)
      throw ConfigError("config key " + key + ": expected an integer");
    return r;
  }

  bool boolean(const std::string& key, bool dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    std::string v = lowercase(it->second);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key " + key + ": expected a boolean, got '" +
                      it->second + "'");
  }

  std::uint64_t seed(const std::string& key, std::uint64_t dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    char* end = nullptr;
    std::uint64_t v = std::strtoull(it->second.c_str(), &end, 10);
    if (end != it->second.c_str() + it->second.size())
      throw ConfigError("config key " + key + ": expected an unsigned integer");
    return v;
  }

  // Canonical text form: sorted keys, one per line. Stable across runs, so
  // its hash identifies the configuration that produced an artifact.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
      out += k;
      out += '=';
      out += v;
      out += '\n';
    }
    return out;
  }

  std::string hash_hex() const { return hex64(fnv1a64(canonical())); }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace zsbir
