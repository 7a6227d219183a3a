#include "casner/config.hpp"

#include <fstream>

#include "casner/errors.hpp"

namespace casner {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace

KVConfig KVConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string());
  KVConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected 'key = value'", lineno);
    const std::string key = trim(stripped.substr(0, eq));
    if (key.empty()) throw ParseError("empty config key", lineno);
    cfg.values_[key] = trim(stripped.substr(eq + 1));
  }
  return cfg;
}

void KVConfig::set(std::string key, std::string value) {
  values_[std::move(key)] = std::move(value);
}

bool KVConfig::has(const std::string& key) const { return values_.count(key); }

std::optional<std::string> KVConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KVConfig::get_or(const std::string& key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : std::move(fallback);
}

std::int64_t KVConfig::get_int_or(const std::string& key,
                                  std::int64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    return std::stoll(*v);
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "' is not an integer: " + *v);
  }
}

double KVConfig::get_double_or(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    return std::stod(*v);
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "' is not a number: " + *v);
  }
}

bool KVConfig::get_bool_or(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ParseError("config key '" + key + "' is not a boolean: " + *v);
}

}  // namespace casner
