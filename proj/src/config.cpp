#include "eccnn/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "eccnn/errors.hpp"

namespace eccnn {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.size() - start : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string join_ints(const std::vector<int>& values, std::string_view sep) {
  std::vector<std::string> parts;
  for (int v : values) parts.push_back(std::to_string(v));
  return join(parts, sep);
}

std::optional<std::string> ConfigSection::get(std::string_view key) const {
  for (const auto& [k, v] : items_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void ConfigSection::set(std::string_view key, std::string value) {
  for (auto& [k, v] : items_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  items_.emplace_back(std::string(key), std::move(value));
}

std::string ConfigSection::get_string(std::string_view key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : fallback;
}

namespace {
std::string where(const ConfigSection& s, std::string_view key) {
  return s.name().empty() ? std::string(key) : "[" + s.name() + "] " + std::string(key);
}

template <typename T>
T parse_number(const std::string& text, const std::string& context) {
  T value{};
  const char* b = text.data();
  const char* e = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(b, e, value);
  if (ec != std::errc() || ptr != e) {
    throw ValidationError(context + ": cannot parse '" + text + "' as a number");
  }
  return value;
}
}  // namespace

long long ConfigSection::get_int(std::string_view key, long long fallback) const {
  auto v = get(key);
  return v ? parse_number<long long>(*v, where(*this, key)) : fallback;
}

double ConfigSection::get_double(std::string_view key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ValidationError(where(*this, key) + ": cannot parse '" + *v + "' as a real number");
  }
}

bool ConfigSection::get_bool(std::string_view key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ValidationError(where(*this, key) + ": expected true/false, got '" + *v + "'");
}

std::vector<int> ConfigSection::get_int_list(std::string_view key, std::vector<int> fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<int> out;
  if (trim(*v).empty()) return out;
  for (const auto& part : split(*v, ',')) out.push_back(parse_number<int>(part, where(*this, key)));
  return out;
}

std::vector<std::string> ConfigSection::get_list(std::string_view key,
                                                 std::vector<std::string> fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<std::string> out;
  if (trim(*v).empty() || *v == "none") return out;
  for (auto& part : split(*v, ',')) {
    if (!part.empty()) out.push_back(std::move(part));
  }
  return out;
}

void ConfigSection::require_known(std::initializer_list<std::string_view> allowed) const {
  for (const auto& [k, v] : items_) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ValidationError("unknown configuration key " + where(*this, k));
    }
  }
}

ConfigFile ConfigFile::parse(std::string_view text, std::string_view origin) {
  ConfigFile file;
  file.section("");
  ConfigSection* current = &file.section("");
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    // Inline comments start at a '#' or ';' preceded by whitespace.
    for (std::size_t i = 1; i < t.size(); ++i) {
      if ((t[i] == '#' || t[i] == ';') && std::isspace(static_cast<unsigned char>(t[i - 1]))) {
        t = trim(std::string_view(t).substr(0, i));
        break;
      }
    }
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ValidationError(std::string(origin) + ":" + std::to_string(lineno) +
                              ": malformed section header");
      }
      current = &file.section(trim(std::string_view(t).substr(1, t.size() - 2)));
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(std::string(origin) + ":" + std::to_string(lineno) +
                            ": expected 'key = value'");
    }
    current->set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
  return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError("config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

const ConfigSection* ConfigFile::find(std::string_view name) const {
  for (const auto& s : sections_) {
    if (s.name() == name) return &s;
  }
  return nullptr;
}

ConfigSection& ConfigFile::section(std::string_view name) {
  for (auto& s : sections_) {
    if (s.name() == name) return s;
  }
  sections_.emplace_back(std::string(name));
  return sections_.back();
}

std::string ConfigFile::str() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& s : sections_) {
    if (s.items().empty()) continue;
    if (!first) os << "\n";
    first = false;
    if (!s.name().empty()) os << "[" << s.name() << "]\n";
    for (const auto& [k, v] : s.items()) os << k << " = " << v << "\n";
  }
  return os.str();
}

void ConfigFile::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write config " + path.string());
  out << str();
}

}  // namespace eccnn
