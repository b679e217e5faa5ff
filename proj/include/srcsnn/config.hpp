#pragma once

// Plain `key = value` configuration files. '#' starts a comment, blank lines
// are ignored, list values are comma-separated. See README for the keys.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "srcsnn/error.hpp"
#include "srcsnn/io.hpp"

namespace srcsnn {

namespace detail {
inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace detail

class KeyValueFile {
 public:
  KeyValueFile() = default;

  static KeyValueFile parse(std::string_view text, std::string base_dir = ".") {
    KeyValueFile kv;
    kv.base_dir_ = std::move(base_dir);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw Error(Errc::config, "line " + std::to_string(line_no) + ": expected key = value");
      const std::string key(detail::trim(line.substr(0, eq)));
      const std::string value(detail::trim(line.substr(eq + 1)));
      if (key.empty()) throw Error(Errc::config, "line " + std::to_string(line_no) + ": empty key");
      if (!kv.values_.emplace(key, value).second)
        throw Error(Errc::config, "line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    return kv;
  }

  static KeyValueFile load(const std::string& path) {
    const auto bytes = io::read_file(path);
    auto dir = std::filesystem::path(path).parent_path().string();
    return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), dir.empty() ? "." : dir);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  const std::string& base_dir() const noexcept { return base_dir_; }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string get_or(const std::string& key, std::string fallback) const { return get(key).value_or(std::move(fallback)); }

  template <class T>
  T number_or(const std::string& key, T fallback) const {
    auto v = get(key);
    return v ? to_number<T>(key, *v) : fallback;
  }

  template <class T>
  std::vector<T> list_or(const std::string& key, std::vector<T> fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<T> out;
    for (const auto& item : split(*v)) out.push_back(to_number<T>(key, item));
    if (out.empty()) throw Error(Errc::config, key + ": empty list");
    return out;
  }

  std::vector<std::string> strings(const std::string& key) const {
    auto v = get(key);
    return v ? split(*v) : std::vector<std::string>{};
  }

  /// Relative paths resolve against the directory of the config file.
  std::string path(const std::string& p) const {
    std::filesystem::path fp(p);
    if (fp.is_absolute()) return p;
    return (std::filesystem::path(base_dir_) / fp).lexically_normal().string();
  }

  /// Keys not in `known` are configuration mistakes.
  void require_known(const std::vector<std::string_view>& known) const {
    for (const auto& [k, _] : values_) {
      bool ok = false;
      for (auto kn : known) ok = ok || k == kn;
      if (!ok) throw Error(Errc::config, "unknown key '" + k + "'");
    }
  }

  static std::vector<std::string> split(std::string_view s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      const auto c = s.find(',', pos);
      auto item = detail::trim(s.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
      if (!item.empty()) out.emplace_back(item);
      if (c == std::string_view::npos) break;
      pos = c + 1;
    }
    return out;
  }

  template <class T>
  static T to_number(const std::string& key, std::string_view text) {
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end)
      throw Error(Errc::config, key + ": cannot parse '" + std::string(text) + "' as a number");
    return value;
  }

 private:
  std::map<std::string, std::string> values_;
  std::string base_dir_ = ".";
};

}  // namespace srcsnn
