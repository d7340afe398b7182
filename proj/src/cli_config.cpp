#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "xicm/cli.hpp"
#include "xicm/dynamics.hpp"
#include "xicm/errors.hpp"
#include "xicm/llm_gateway.hpp"
#include "xicm/pipeline.hpp"
#include "xicm/toy_sim.hpp"

namespace xicm {

std::string to_string(ConfigSource source) {
  switch (source) {
    case ConfigSource::kDefault: return "default";
    case ConfigSource::kFile: return "file";
    case ConfigSource::kEnv: return "env";
    case ConfigSource::kFlag: return "flag";
  }
  return "default";
}

namespace {

struct KeyDef {
  const char* key;
  const char* value;
  const char* help;
};

constexpr KeyDef kKeys[] = {
    {"dataset", "data", "dataset root (manifest.json + <task>.jsonl)"},
    {"model", "", "dynamics model file; empty means <dataset>/dynamics.json"},
    {"features", "", "feature file; empty means <dataset>/features.bin"},
    {"seed", "7", "seed for simgen, rollout, predict and prompt scenes"},
    {"k", "18", "number of in-context demonstrations"},
    {"feature_mode", "vis_out+lang", "dynamics feature mode"},
    {"epsilon", "0.01", "joint-velocity threshold for keyframes"},
    {"simgen.tasks", "seen", "task group or comma list for simgen"},
    {"simgen.episodes", "20", "episodes per task for simgen"},
    {"dynamics.hidden", "64", "hidden width of the dynamics MLP"},
    {"dynamics.epochs", "300", "training epochs"},
    {"dynamics.lr", "0.05", "learning rate"},
    {"dynamics.batch", "16", "mini-batch size"},
    {"dynamics.seed", "7", "initialization and shuffling seed"},
    {"gateway.backend", "echo_nearest", "http, echo_nearest or scripted"},
    {"gateway.endpoint", "", "chat-completions URL"},
    {"gateway.model", "", "model name sent to the endpoint"},
    {"gateway.api_key", "", "bearer token"},
    {"gateway.temperature", "0", "sampling temperature"},
    {"gateway.max_tokens", "512", "max output tokens"},
    {"gateway.timeout", "60", "request timeout in seconds"},
    {"gateway.retries", "3", "retries for 429, 5xx and transport errors"},
    {"gateway.concurrency", "4", "max in-flight requests"},
    {"gateway.backoff", "1", "backoff base in seconds"},
    {"gateway.cache_dir", "", "response cache directory; empty disables"},
    {"bench.tasks", "suite", "task group or comma list for benchmarks"},
    {"bench.runs", "3", "runs per task"},
    {"bench.rollouts", "25", "rollouts per run"},
    {"bench.seeds", "1,2,3", "one seed per run"},
    {"bench.selection", "dynamics", "dynamics or random"},
    {"bench.workers", "4", "episode worker threads"},
    {"bench.out", "report", "output directory"},
    {"sweep.k_values", "1,2,4,8,12,18", "K values for sweep-k"},
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end || v.empty())
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return out;
}

}  // namespace

CliConfig::CliConfig() {
  for (const auto& k : kKeys) entries_[k.key] = {k.value, ConfigSource::kDefault, k.help};
}

const CliConfig::Entry& CliConfig::entry(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

void CliConfig::set(const std::string& key, std::string value, ConfigSource source) {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.value = std::move(value);
  it->second.source = source;
}

void CliConfig::apply_text(std::string_view text, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const std::string where = std::string(origin) + ":" + std::to_string(n);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key=value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (!has(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    set(key, trim(std::string_view(t).substr(eq + 1)), ConfigSource::kFile);
  }
}

void CliConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_text(ss.str(), path.string());
}

std::string CliConfig::env_name(const std::string& key) {
  std::string out = "XICM_";
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

void CliConfig::apply_env(const std::function<std::optional<std::string>(const std::string&)>& getenv) {
  static const std::pair<const char*, const char*> kAliases[] = {
      {"XICM_LLM_ENDPOINT", "gateway.endpoint"},
      {"XICM_LLM_MODEL", "gateway.model"},
      {"XICM_LLM_API_KEY", "gateway.api_key"},
  };
  for (const auto& [var, key] : kAliases)
    if (auto v = getenv(var)) set(key, *v, ConfigSource::kEnv);
  for (auto& [key, e] : entries_)
    if (auto v = getenv(env_name(key))) {
      e.value = *v;
      e.source = ConfigSource::kEnv;
    }
}

std::string CliConfig::str(const std::string& key) const { return entry(key).value; }

std::int64_t CliConfig::integer(const std::string& key) const {
  return parse_number<std::int64_t>(key, entry(key).value);
}

double CliConfig::real(const std::string& key) const {
  const double v = parse_number<double>(key, entry(key).value);
  if (!std::isfinite(v)) throw ConfigError("'" + key + "' must be finite");
  return v;
}

std::vector<std::uint64_t> CliConfig::u64_list(const std::string& key) const {
  std::vector<std::uint64_t> out;
  std::istringstream in(entry(key).value);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<std::uint64_t>(key, trim(item)));
  if (out.empty()) throw ConfigError("'" + key + "' needs at least one value");
  return out;
}

void CliConfig::validate() const {
  auto positive = [&](const char* key) {
    if (integer(key) < 1) throw ConfigError(std::string("'") + key + "' must be at least 1");
  };
  for (const char* key : {"k", "simgen.episodes", "dynamics.hidden", "dynamics.epochs", "dynamics.batch",
                          "gateway.max_tokens", "gateway.concurrency", "bench.runs", "bench.rollouts",
                          "bench.workers"})
    positive(key);
  (void)integer("seed");
  (void)integer("dynamics.seed");
  if (integer("gateway.retries") < 0) throw ConfigError("'gateway.retries' must be non-negative");
  if (!(real("epsilon") > 0.0)) throw ConfigError("'epsilon' must be positive");
  if (!(real("dynamics.lr") > 0.0)) throw ConfigError("'dynamics.lr' must be positive");
  if (!(real("gateway.timeout") > 0.0)) throw ConfigError("'gateway.timeout' must be positive");
  if (real("gateway.temperature") < 0.0) throw ConfigError("'gateway.temperature' must be non-negative");
  if (real("gateway.backoff") < 0.0) throw ConfigError("'gateway.backoff' must be non-negative");
  (void)parse_feature_mode(str("feature_mode"));
  (void)parse_backend(str("gateway.backend"));
  (void)parse_selection_mode(str("bench.selection"));
  (void)resolve_task_names(str("simgen.tasks"));
  (void)resolve_task_names(str("bench.tasks"));
  const auto seeds = u64_list("bench.seeds");
  if (seeds.size() != static_cast<std::size_t>(integer("bench.runs")))
    throw ConfigError("'bench.seeds' needs one seed per run");
  for (auto k : u64_list("sweep.k_values"))
    if (k < 1) throw ConfigError("'sweep.k_values' entries must be at least 1");
  if (str("dataset").empty()) throw ConfigError("'dataset' must not be empty");
}

std::string CliConfig::dump() const {
  std::string out;
  for (const auto& [key, e] : entries_) {
    std::string v = e.value;
    if (key == "gateway.api_key" && !v.empty()) v = "****";
    out += key + " = " + v + "  # " + to_string(e.source) + "\n";
  }
  return out;
}

}  // namespace xicm
