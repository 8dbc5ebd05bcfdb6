#pragma once

#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace eccnn {

// Ordered key/value pairs of one [section].
class ConfigSection {
 public:
  explicit ConfigSection(std::string name = {}) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  std::optional<std::string> get(std::string_view key) const;
  bool has(std::string_view key) const { return get(key).has_value(); }
  void set(std::string_view key, std::string value);
  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

  std::string get_string(std::string_view key, std::string fallback) const;
  long long get_int(std::string_view key, long long fallback) const;
  double get_double(std::string_view key, double fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<int> get_int_list(std::string_view key, std::vector<int> fallback) const;
  std::vector<std::string> get_list(std::string_view key, std::vector<std::string> fallback) const;

  // Rejects keys outside `allowed`.
  void require_known(std::initializer_list<std::string_view> allowed) const;

 private:
  std::string name_;
  std::vector<std::pair<std::string, std::string>> items_;
};

// Plain-text configuration:
//
//   # comment
//   key = value            (top-level section "")
//   [section]
//   key = value
//
// Lists are comma separated.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text, std::string_view origin = "<string>");
  static ConfigFile load(const std::filesystem::path& path);

  const ConfigSection* find(std::string_view name) const;
  ConfigSection& section(std::string_view name);
  const std::vector<ConfigSection>& sections() const { return sections_; }

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<ConfigSection> sections_;
};

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string join_ints(const std::vector<int>& values, std::string_view sep = ",");

}  // namespace eccnn
