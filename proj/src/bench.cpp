#include "xicm/bench.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "xicm/errors.hpp"

namespace xicm {

void BenchConfig::validate(std::size_t pool_size) const {
  if (tasks.empty()) throw ConfigError("benchmark needs at least one task");
  for (const auto& t : tasks) (void)find_task(t);
  if (std::set<std::string>(tasks.begin(), tasks.end()).size() != tasks.size())
    throw ConfigError("benchmark task list has duplicates");
  if (runs < 1) throw ConfigError("runs must be at least 1");
  if (rollouts_per_run < 1) throw ConfigError("rollouts_per_run must be at least 1");
  if (seeds.size() != static_cast<std::size_t>(runs))
    throw ConfigError("need exactly one seed per run (" + std::to_string(runs) + "), got " +
                      std::to_string(seeds.size()));
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("run seeds must be distinct");
  if (k < 1 || (pool_size > 0 && k > pool_size))
    throw ConfigError("K must lie in [1, " + std::to_string(pool_size) + "], got " + std::to_string(k));
  if (workers < 1) throw ConfigError("workers must be at least 1");
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::uint64_t bench_episode_seed(std::uint64_t run_seed, std::string_view task, int episode) {
  return derive_seed(run_seed, task, static_cast<std::uint64_t>(episode));
}

namespace {

GroupStats make_group(std::string name, std::string level, std::vector<double> rates) {
  GroupStats g;
  g.name = std::move(name);
  g.level = std::move(level);
  g.run_rates = std::move(rates);
  g.mean = mean_of(g.run_rates);
  g.std = sample_std(g.run_rates);
  return g;
}

GroupStats average_groups(std::string name, std::string level, const std::vector<const GroupStats*>& members,
                          int runs) {
  std::vector<double> rates(static_cast<std::size_t>(runs), 0.0);
  for (int r = 0; r < runs; ++r) {
    std::vector<double> per_task;
    for (const auto* m : members) per_task.push_back(m->run_rates[static_cast<std::size_t>(r)]);
    rates[static_cast<std::size_t>(r)] = mean_of(per_task);
  }
  return make_group(std::move(name), std::move(level), std::move(rates));
}

}  // namespace

BenchReport aggregate(const BenchConfig& config, std::vector<EpisodeLogEntry> episodes, std::size_t pool_size) {
  BenchReport rep;
  rep.config = config;
  rep.pool_size = pool_size;
  for (const auto& task : config.tasks) {
    std::vector<double> rates;
    for (int r = 0; r < config.runs; ++r) {
      int n = 0, ok = 0;
      for (const auto& e : episodes) {
        if (e.run != r || e.result.task != task) continue;
        ++n;
        ok += e.result.success ? 1 : 0;
      }
      rates.push_back(n ? static_cast<double>(ok) / n : 0.0);
    }
    rep.tasks.push_back(make_group(task, to_string(find_task(task).level), std::move(rates)));
  }
  for (auto level : {TaskLevel::kSeen, TaskLevel::kUnseenLevel1, TaskLevel::kUnseenLevel2}) {
    std::vector<const GroupStats*> members;
    for (const auto& t : rep.tasks)
      if (t.level == to_string(level)) members.push_back(&t);
    if (!members.empty()) rep.levels.push_back(average_groups(to_string(level), to_string(level), members, config.runs));
  }
  std::vector<const GroupStats*> all;
  for (const auto& t : rep.tasks) all.push_back(&t);
  rep.overall = average_groups("all", "all", all, config.runs);
  rep.episodes = std::move(episodes);
  return rep;
}

BenchReport run_benchmark(const Pipeline& pipeline, const LlmGateway& gateway, const BenchConfig& config,
                          const EpisodeResponder& responder) {
  config.validate(pipeline.pool().features.size());
  if (config.feature_mode != pipeline.mode())
    throw ConfigError("benchmark asks for feature mode " + to_string(config.feature_mode) + " but the pool holds " +
                      to_string(pipeline.mode()));
  if (config.backend != gateway.backend())
    throw ConfigError("benchmark asks for backend " + to_string(config.backend) + " but the gateway uses " +
                      to_string(gateway.backend()));

  struct Job {
    const TaskSpec* task;
    int run;
    int episode;
  };
  std::vector<Job> jobs;
  for (const auto& name : config.tasks)
    for (int r = 0; r < config.runs; ++r)
      for (int e = 0; e < config.rollouts_per_run; ++e) jobs.push_back({&find_task(name), r, e});

  const EpisodeOptions opts{config.k, config.selection};
  std::vector<EpisodeLogEntry> log(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      try {
        const auto seed = bench_episode_seed(config.seeds[static_cast<std::size_t>(job.run)], job.task->name,
                                             job.episode);
        auto trace = pipeline.run_episode(*job.task, seed, gateway, opts, responder);
        log[i] = {job.run, job.episode, std::move(trace.result)};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const int n_workers = std::min<int>(config.workers, static_cast<int>(jobs.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return aggregate(config, std::move(log), pipeline.pool().features.size());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json group_json(const GroupStats& g, const char* key) {
  return {{key, g.name}, {"level", g.level}, {"run_rates", g.run_rates}, {"mean", g.mean}, {"std", g.std}};
}

GroupStats group_from_json(const nlohmann::json& j, const char* key) {
  GroupStats g;
  g.name = j.at(key).get<std::string>();
  g.level = j.at("level").get<std::string>();
  g.run_rates = j.at("run_rates").get<std::vector<double>>();
  g.mean = j.at("mean").get<double>();
  g.std = j.at("std").get<double>();
  return g;
}

nlohmann::json config_json(const BenchConfig& c) {
  return {{"tasks", c.tasks},
          {"runs", c.runs},
          {"rollouts_per_run", c.rollouts_per_run},
          {"seeds", c.seeds},
          {"k", c.k},
          {"feature_mode", to_string(c.feature_mode)},
          {"selection", to_string(c.selection)},
          {"backend", to_string(c.backend)}};
}

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  return buf;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

nlohmann::json to_json(const BenchReport& report) {
  nlohmann::json tasks = nlohmann::json::array(), levels = nlohmann::json::array(), eps = nlohmann::json::array();
  for (const auto& t : report.tasks) tasks.push_back(group_json(t, "task"));
  for (const auto& l : report.levels) levels.push_back(group_json(l, "name"));
  for (const auto& e : report.episodes) {
    const auto& r = e.result;
    eps.push_back({{"task", r.task},
                   {"run", e.run},
                   {"episode", e.episode},
                   {"episode_seed", r.episode_seed},
                   {"success", r.success},
                   {"steps_executed", r.steps_executed},
                   {"failure_reason", r.failure_reason ? nlohmann::json(to_string(*r.failure_reason)) : nullptr}});
  }
  return {{"format", "xicm-bench-report-v1"},
          {"statistics", "mean and sample (n-1) standard deviation of run-level success rates"},
          {"config", config_json(report.config)},
          {"pool_size", report.pool_size},
          {"tasks", std::move(tasks)},
          {"levels", std::move(levels)},
          {"overall", group_json(report.overall, "name")},
          {"episodes", std::move(eps)}};
}

BenchReport report_from_json(const nlohmann::json& j) {
  try {
    BenchReport rep;
    const auto& c = j.at("config");
    rep.config.tasks = c.at("tasks").get<std::vector<std::string>>();
    rep.config.runs = c.at("runs").get<int>();
    rep.config.rollouts_per_run = c.at("rollouts_per_run").get<int>();
    rep.config.seeds = c.at("seeds").get<std::vector<std::uint64_t>>();
    rep.config.k = c.at("k").get<std::size_t>();
    rep.config.feature_mode = parse_feature_mode(c.at("feature_mode").get<std::string>());
    rep.config.selection = parse_selection_mode(c.at("selection").get<std::string>());
    rep.config.backend = parse_backend(c.at("backend").get<std::string>());
    rep.pool_size = j.at("pool_size").get<std::size_t>();
    for (const auto& t : j.at("tasks")) rep.tasks.push_back(group_from_json(t, "task"));
    for (const auto& l : j.at("levels")) rep.levels.push_back(group_from_json(l, "name"));
    rep.overall = group_from_json(j.at("overall"), "name");
    for (const auto& e : j.at("episodes")) {
      EpisodeLogEntry entry;
      entry.run = e.at("run").get<int>();
      entry.episode = e.at("episode").get<int>();
      entry.result.task = e.at("task").get<std::string>();
      entry.result.episode_seed = e.at("episode_seed").get<std::uint64_t>();
      entry.result.success = e.at("success").get<bool>();
      entry.result.steps_executed = e.at("steps_executed").get<int>();
      if (!e.at("failure_reason").is_null())
        entry.result.failure_reason = parse_failure_reason(e.at("failure_reason").get<std::string>());
      rep.episodes.push_back(std::move(entry));
    }
    return rep;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed benchmark report: ") + e.what());
  }
}

std::string render_csv(const BenchReport& report) {
  std::string out = "task,level";
  for (int r = 0; r < report.config.runs; ++r) out += ",run_" + std::to_string(r + 1);
  out += ",mean,std\n";
  auto row = [&](const GroupStats& g) {
    out += g.name + "," + g.level;
    for (double v : g.run_rates) out += "," + num(v);
    out += "," + num(g.mean) + "," + num(g.std) + "\n";
  };
  for (const auto& t : report.tasks) row(t);
  for (const auto& l : report.levels) row(l);
  row(report.overall);
  return out;
}

std::string render_markdown(const BenchReport& report) {
  const auto& c = report.config;
  std::string out = "# Benchmark report\n\n";
  out += "Success rates in percent. Mean (std) over " + std::to_string(c.runs) + " runs of " +
         std::to_string(c.rollouts_per_run) + " rollouts; std is the sample (n-1) standard deviation over runs.\n\n";
  out += "K = " + std::to_string(c.k) + ", features = " + to_string(c.feature_mode) +
         ", selection = " + to_string(c.selection) + ", backend = " + to_string(c.backend) +
         ", pool = " + std::to_string(report.pool_size) + " demonstrations.\n\n";
  out += "| Task | Level |";
  for (int r = 0; r < c.runs; ++r) out += " Run " + std::to_string(r + 1) + " |";
  out += " Mean (Std) |\n|---|---|";
  for (int r = 0; r < c.runs; ++r) out += "---|";
  out += "---|\n";
  auto row = [&](const std::string& label, const GroupStats& g) {
    out += "| " + label + " | " + g.level + " |";
    for (double v : g.run_rates) out += " " + pct(v) + " |";
    out += " " + pct(g.mean) + " (" + pct(g.std) + ") |\n";
  };
  for (const auto& t : report.tasks) row(t.name, t);
  for (const auto& l : report.levels) row("**" + l.name + " avg**", l);
  row("**all avg**", report.overall);
  return out;
}

void write_report(const BenchReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report directory " + dir.string() + ": " + ec.message());
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out) throw IoError("write failed for " + p.string());
  };
  write(dir / "report.json", to_json(report).dump(2) + "\n");
  write(dir / "report.csv", render_csv(report));
  write(dir / "report.md", render_markdown(report));
}

// ---------------------------------------------------------------------------
// Ablations

AblationReport ablate_selection(const Pipeline& pipeline, const LlmGateway& gateway, const BenchConfig& config,
                                const EpisodeResponder& responder) {
  AblationReport ab;
  BenchConfig c = config;
  c.selection = SelectionMode::kDynamics;
  ab.dynamics = run_benchmark(pipeline, gateway, c, responder);
  c.selection = SelectionMode::kRandom;
  ab.random = run_benchmark(pipeline, gateway, c, responder);
  for (std::size_t i = 0; i < ab.dynamics.tasks.size(); ++i)
    ab.task_deltas.emplace_back(ab.dynamics.tasks[i].name, ab.dynamics.tasks[i].mean - ab.random.tasks[i].mean);
  ab.overall_delta = ab.dynamics.overall.mean - ab.random.overall.mean;
  return ab;
}

nlohmann::json to_json(const AblationReport& report) {
  nlohmann::json deltas = nlohmann::json::array();
  for (const auto& [task, d] : report.task_deltas) deltas.push_back({{"task", task}, {"delta", d}});
  return {{"format", "xicm-ablation-v1"},
          {"dynamics", to_json(report.dynamics)},
          {"random", to_json(report.random)},
          {"task_deltas", std::move(deltas)},
          {"overall_delta", report.overall_delta}};
}

std::string render_markdown(const AblationReport& report) {
  std::string out = "# Selection ablation\n\n| Task | Dynamics | Random | Delta |\n|---|---|---|---|\n";
  for (std::size_t i = 0; i < report.task_deltas.size(); ++i) {
    const auto& d = report.dynamics.tasks[i];
    const auto& r = report.random.tasks[i];
    out += "| " + d.name + " | " + pct(d.mean) + " (" + pct(d.std) + ") | " + pct(r.mean) + " (" + pct(r.std) +
           ") | " + pct(report.task_deltas[i].second) + " |\n";
  }
  out += "| **all avg** | " + pct(report.dynamics.overall.mean) + " (" + pct(report.dynamics.overall.std) + ") | " +
         pct(report.random.overall.mean) + " (" + pct(report.random.overall.std) + ") | " +
         pct(report.overall_delta) + " |\n";
  return out;
}

std::vector<SweepPoint> sweep_k(const Pipeline& pipeline, const LlmGateway& gateway, const BenchConfig& config,
                                const std::vector<std::size_t>& k_values, const EpisodeResponder& responder) {
  if (k_values.empty()) throw ConfigError("sweep needs at least one K");
  const std::size_t n = pipeline.pool().features.size();
  for (auto k : k_values)
    if (k < 1 || k > n) throw ConfigError("K = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  std::vector<SweepPoint> out;
  for (auto k : k_values) {
    BenchConfig c = config;
    c.k = k;
    out.push_back({k, run_benchmark(pipeline, gateway, c, responder)});
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = "k,mean,std\n";
  for (const auto& p : points)
    out += std::to_string(p.k) + "," + num(p.report.overall.mean) + "," + num(p.report.overall.std) + "\n";
  return out;
}

}  // namespace xicm
