#ifndef CASNER_CONFIG_HPP
#define CASNER_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace casner {

/// Flat key=value configuration file; `#` comments, UTF-8. Flags override
/// file values at the CLI layer.
class KVConfig {
public:
  KVConfig() = default;
  static KVConfig load(const std::filesystem::path& path);

  void set(std::string key, std::string value);
  bool has(const std::string& key) const;

  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, std::string fallback) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

private:
  std::map<std::string, std::string> values_;
};

}  // namespace casner

#endif  // CASNER_CONFIG_HPP
