#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "xicm/pipeline.hpp"

namespace xicm {

struct BenchConfig {
  std::vector<std::string> tasks;
  int runs = 3;
  int rollouts_per_run = 25;
  std::vector<std::uint64_t> seeds{1, 2, 3};  // one per run
  std::size_t k = 18;
  FeatureMode feature_mode = FeatureMode::kVisOutLang;
  SelectionMode selection = SelectionMode::kDynamics;
  BackendKind backend = BackendKind::kEchoNearest;
  int workers = 1;

  /// Fail-fast checks before any episode runs. Throws ConfigError.
  void validate(std::size_t pool_size) const;
};

struct EpisodeLogEntry {
  int run = 0;
  int episode = 0;
  RolloutResult result;
};

struct GroupStats {
  std::string name;   // task name, level name or "all"
  std::string level;  // level of the task (same as name for level rows)
  std::vector<double> run_rates;
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) standard deviation over runs
};

struct BenchReport {
  BenchConfig config;
  std::size_t pool_size = 0;
  std::vector<GroupStats> tasks;
  std::vector<GroupStats> levels;
  GroupStats overall;
  std::vector<EpisodeLogEntry> episodes;  // ordered by task, run, episode
};

double mean_of(const std::vector<double>& v);
/// Sample standard deviation; 0 for fewer than two values.
double sample_std(const std::vector<double>& v);

/// Episode seed for (run seed, task, episode index). Independent of the
/// order in which episodes execute.
std::uint64_t bench_episode_seed(std::uint64_t run_seed, std::string_view task, int episode);

/// Statistics from a raw episode log. Task order follows config.tasks.
BenchReport aggregate(const BenchConfig& config, std::vector<EpisodeLogEntry> episodes, std::size_t pool_size = 0);

/// Runs runs x rollouts_per_run episodes per task on a bounded worker pool.
BenchReport run_benchmark(const Pipeline& pipeline, const LlmGateway& gateway, const BenchConfig& config,
                          const EpisodeResponder& responder = {});

nlohmann::json to_json(const BenchReport& report);
BenchReport report_from_json(const nlohmann::json& j);
std::string render_csv(const BenchReport& report);
std::string render_markdown(const BenchReport& report);
/// Writes report.json, report.csv and report.md into `dir`.
void write_report(const BenchReport& report, const std::filesystem::path& dir);

struct AblationReport {
  BenchReport dynamics;
  BenchReport random;
  std::vector<std::pair<std::string, double>> task_deltas;  // dynamics mean - random mean
  double overall_delta = 0.0;
};

/// The same episodes under dynamics-guided and random selection.
AblationReport ablate_selection(const Pipeline& pipeline, const LlmGateway& gateway, const BenchConfig& config,
                                const EpisodeResponder& responder = {});
nlohmann::json to_json(const AblationReport& report);
std::string render_markdown(const AblationReport& report);

struct SweepPoint {
  std::size_t k = 0;
  BenchReport report;
};

/// One benchmark per K, all on the same episode seeds. Throws ConfigError if
/// a K exceeds the pool.
std::vector<SweepPoint> sweep_k(const Pipeline& pipeline, const LlmGateway& gateway, const BenchConfig& config,
                                const std::vector<std::size_t>& k_values, const EpisodeResponder& responder = {});
/// `k,mean,std` with one row per K; mean and std are overall success fractions.
std::string sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace xicm
