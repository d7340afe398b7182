#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace xicm {

enum class ConfigSource { kDefault, kFile, kEnv, kFlag };
std::string to_string(ConfigSource source);

/// Merged settings for every subcommand. Each key holds one value and the
/// layer it came from; later layers only overwrite when they set the key.
/// Precedence: flag > env > file > default.
class CliConfig {
 public:
  struct Entry {
    std::string value;
    ConfigSource source = ConfigSource::kDefault;
    std::string help;
  };

  CliConfig();

  /// Flat `key=value` lines; `#` starts a comment. Unknown keys throw
  /// ConfigError naming the line.
  void apply_file(const std::filesystem::path& path);
  void apply_text(std::string_view text, std::string_view origin = "<text>");
  /// XICM_<KEY> with dots as underscores (XICM_GATEWAY_TIMEOUT), plus
  /// XICM_LLM_ENDPOINT, XICM_LLM_MODEL and XICM_LLM_API_KEY.
  void apply_env(const std::function<std::optional<std::string>(const std::string&)>& getenv);
  void set(const std::string& key, std::string value, ConfigSource source);

  bool has(const std::string& key) const { return entries_.contains(key); }
  const Entry& entry(const std::string& key) const;
  const std::map<std::string, Entry>& entries() const { return entries_; }

  std::string str(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  double real(const std::string& key) const;
  std::vector<std::uint64_t> u64_list(const std::string& key) const;

  /// Parses every typed key and checks ranges. Throws ConfigError.
  void validate() const;

  /// `key = value  # source` per line, sorted by key; the API key is masked.
  std::string dump() const;

  /// Environment variable name for a key.
  static std::string env_name(const std::string& key);

 private:
  std::map<std::string, Entry> entries_;
};

/// Runs one command line. Returns 0 on success, 1 on a domain error and 2 on
/// a usage error; errors print one JSON line to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace xicm
