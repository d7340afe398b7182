#include "xicm/cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <deque>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "xicm/bench.hpp"
#include "xicm/demo_store.hpp"
#include "xicm/digest.hpp"
#include "xicm/errors.hpp"

namespace xicm {

namespace {

using nlohmann::json;

struct Context {
  CliConfig cfg;
  std::ostream& out;
};

// ---------------------------------------------------------------------------
// Shared plumbing

std::filesystem::path dataset_path(const CliConfig& c) { return c.str("dataset"); }

std::filesystem::path model_path(const CliConfig& c) {
  const auto m = c.str("model");
  return m.empty() ? dataset_path(c) / "dynamics.json" : std::filesystem::path(m);
}

std::filesystem::path features_path(const CliConfig& c) {
  const auto f = c.str("features");
  return f.empty() ? dataset_path(c) / "features.bin" : std::filesystem::path(f);
}

PredictorConfig predictor_config(const CliConfig& c) {
  PredictorConfig p;
  p.hidden = static_cast<int>(c.integer("dynamics.hidden"));
  p.epochs = static_cast<int>(c.integer("dynamics.epochs"));
  p.learning_rate = c.real("dynamics.lr");
  p.batch_size = static_cast<int>(c.integer("dynamics.batch"));
  p.seed = static_cast<std::uint64_t>(c.integer("dynamics.seed"));
  return p;
}

DynamicsPredictor load_or_train(const CliConfig& c, const Dataset& ds) {
  const auto path = model_path(c);
  if (std::filesystem::exists(path)) return DynamicsPredictor::load(path);
  spdlog::info("no dynamics model at {}; training one in memory", path.string());
  return train_dynamics_predictor(ds, predictor_config(c));
}

FeatureTable load_or_embed(const CliConfig& c, const Dataset& ds, const DynamicsPredictor& model) {
  const auto mode = parse_feature_mode(c.str("feature_mode"));
  const auto path = features_path(c);
  if (std::filesystem::exists(path)) {
    auto table = import_features(path);
    bool complete = table.mode == mode;
    for (const auto& d : ds.demos) complete = complete && table.find(d.id).has_value();
    if (complete) return table;
    spdlog::warn("feature file {} does not cover this dataset in mode {}; recomputing", path.string(),
                 to_string(mode));
  } else {
    spdlog::info("no feature file at {}; embedding in memory", path.string());
  }
  return embed_dataset(ds, model, mode);
}

Pipeline make_pipeline(const CliConfig& c) {
  Dataset ds = load_dataset(dataset_path(c));
  DynamicsPredictor model = load_or_train(c, ds);
  FeatureTable pool = load_or_embed(c, ds, model);
  return Pipeline(std::move(ds), std::move(model), std::move(pool), SimParams{}, c.real("epsilon"));
}

GatewayConfig gateway_config(const CliConfig& c) {
  GatewayConfig g;
  g.endpoint_url = c.str("gateway.endpoint");
  g.model_name = c.str("gateway.model");
  g.api_key = c.str("gateway.api_key");
  g.temperature = c.real("gateway.temperature");
  g.max_output_tokens = static_cast<int>(c.integer("gateway.max_tokens"));
  g.request_timeout = c.real("gateway.timeout");
  g.max_retries = static_cast<int>(c.integer("gateway.retries"));
  g.max_concurrent_requests = static_cast<int>(c.integer("gateway.concurrency"));
  g.backoff_base = c.real("gateway.backoff");
  g.cache_dir = c.str("gateway.cache_dir");
  return g;
}

std::unique_ptr<LlmGateway> make_gateway(const CliConfig& c) {
  const auto backend = parse_backend(c.str("gateway.backend"));
  auto g = gateway_config(c);
  if (backend == BackendKind::kHttp && (g.endpoint_url.empty() || g.model_name.empty()))
    throw ConfigError("the http backend needs gateway.endpoint and gateway.model (or XICM_LLM_ENDPOINT and "
                      "XICM_LLM_MODEL)");
  return std::make_unique<LlmGateway>(std::move(g), backend);
}

BenchConfig bench_config(const CliConfig& c) {
  BenchConfig b;
  b.tasks = resolve_task_names(c.str("bench.tasks"));
  b.runs = static_cast<int>(c.integer("bench.runs"));
  b.rollouts_per_run = static_cast<int>(c.integer("bench.rollouts"));
  b.seeds = c.u64_list("bench.seeds");
  b.k = static_cast<std::size_t>(c.integer("k"));
  b.feature_mode = parse_feature_mode(c.str("feature_mode"));
  b.selection = parse_selection_mode(c.str("bench.selection"));
  b.backend = parse_backend(c.str("gateway.backend"));
  b.workers = static_cast<int>(c.integer("bench.workers"));
  return b;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

json quantized_json(const QuantizedPose& q) {
  const auto c = q.components();
  return json(std::vector<int>(c.begin(), c.end()));
}

// A query is either a library task (scene sampled from the seed) or bare
// text, which gets a blank first frame and no objects.
struct Query {
  const TaskSpec* task = nullptr;
  std::string language;
  SceneState scene;
  Observation first;
  std::vector<ObjectRecord> objects;
};

Query resolve_query(const Pipeline& p, const std::string& task_name, const std::string& text, std::uint64_t seed) {
  Query q;
  if (!task_name.empty()) {
    q.task = &find_task(task_name);
  } else if (!text.empty()) {
    for (const auto& t : all_tasks())
      if (t.language == text || t.name == text) q.task = &t;
  } else {
    throw ConfigError("give --task <name> or --query <text>");
  }
  if (q.task) {
    q.language = text.empty() ? q.task->language : text;
    q.scene = q.task->sample_scene(seed, p.params());
    q.first.rgb = render_scene(q.scene, p.params());
    q.objects = q.scene.object_records();
  } else {
    q.language = text;
    const int s = p.params().image_size;
    q.first.rgb = {s, s, std::vector<std::uint8_t>(static_cast<std::size_t>(s) * s * 3, 0)};
  }
  q.first.joint_velocities.assign(7, 0.0);
  return q;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_simgen(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto tasks = resolve_task_names(c.str("simgen.tasks"));
  for (const auto& t : tasks)
    if (find_task(t).level != TaskLevel::kSeen)
      throw ConfigError("simgen only records seen tasks; '" + t + "' is unseen");
  const auto ds = generate_seen_dataset(tasks, static_cast<int>(c.integer("simgen.episodes")),
                                        static_cast<std::uint64_t>(c.integer("seed")));
  save_dataset(ds, dataset_path(c));
  ctx.out << "wrote " << ds.demos.size() << " demonstrations of " << tasks.size() << " tasks to "
          << dataset_path(c).string() << "\n";
  return 0;
}

int cmd_ingest(Context& ctx) {
  const auto ds = load_dataset(dataset_path(ctx.cfg));
  std::map<std::string, int> per_task;
  for (const auto& d : ds.demos) ++per_task[d.task_name];
  json j = {{"dataset", dataset_path(ctx.cfg).string()},
            {"demonstrations", ds.demos.size()},
            {"tasks", per_task},
            {"digest", dataset_digest(ds)}};
  ctx.out << j.dump() << "\n";
  return 0;
}

int cmd_extract_keyframes(Context& ctx, const std::string& out_path) {
  const auto ds = load_dataset(dataset_path(ctx.cfg));
  const double eps = ctx.cfg.real("epsilon");
  std::string text;
  for (const auto& d : ds.demos) {
    const auto seq = extract_keyframes(d, eps);
    json frames = json::array();
    for (const auto& k : seq.keyframes) {
      QuantizedPose q = quantize_pose(k.action, ds.workspace);
      if (ds.extras.gripper_open_value == 0) q.gripper = 1 - q.gripper;
      frames.push_back({{"t", k.timestep},
                        {"pos", k.action.position()},
                        {"rpy", k.action.rpy()},
                        {"gripper_open", k.action.gripper_open()},
                        {"tokens", quantized_json(q)}});
    }
    text += json{{"demo_id", seq.demo_id}, {"keyframes", std::move(frames)}}.dump() + "\n";
  }
  if (out_path.empty() || out_path == "-") {
    ctx.out << text;
  } else {
    write_text(out_path, text);
    ctx.out << "wrote key-actions of " << ds.demos.size() << " demonstrations to " << out_path << "\n";
  }
  return 0;
}

int cmd_embed(Context& ctx) {
  const auto ds = load_dataset(dataset_path(ctx.cfg));
  const auto model = load_or_train(ctx.cfg, ds);
  const auto table = embed_dataset(ds, model, parse_feature_mode(ctx.cfg.str("feature_mode")));
  export_features(table, features_path(ctx.cfg));
  ctx.out << "wrote " << table.features.size() << " features (" << to_string(table.mode) << ", "
          << table.vis_dim << "+" << table.lang_dim << ") to " << features_path(ctx.cfg).string() << "\n";
  return 0;
}

int cmd_train(Context& ctx) {
  const auto ds = load_dataset(dataset_path(ctx.cfg));
  const auto model = train_dynamics_predictor(ds, predictor_config(ctx.cfg));
  model.save(model_path(ctx.cfg));
  ctx.out << json{{"model", model_path(ctx.cfg).string()},
                  {"samples", ds.demos.size()},
                  {"final_loss", model.final_training_loss()},
                  {"baseline_loss", model.baseline_loss()}}
                 .dump()
          << "\n";
  return 0;
}

int cmd_select(Context& ctx, const std::string& task, const std::string& text) {
  const auto p = make_pipeline(ctx.cfg);
  const auto q = resolve_query(p, task, text, static_cast<std::uint64_t>(ctx.cfg.integer("seed")));
  const auto sel = p.select(p.query_feature(q.first, q.language),
                            {static_cast<std::size_t>(ctx.cfg.integer("k")), SelectionMode::kDynamics}, 0);
  for (std::size_t i = 0; i < sel.indices.size(); ++i) {
    char score[32];
    std::snprintf(score, sizeof score, "%.6f", sel.scores[i]);
    ctx.out << i + 1 << "\t" << p.dataset().demos[sel.indices[i]].id << "\t" << score << "\n";
  }
  return 0;
}

int cmd_prompt(Context& ctx, const std::string& task, const std::string& text, bool dry_run) {
  const auto p = make_pipeline(ctx.cfg);
  const auto seed = static_cast<std::uint64_t>(ctx.cfg.integer("seed"));
  const auto q = resolve_query(p, task, text, seed);
  const EpisodeOptions opts{static_cast<std::size_t>(ctx.cfg.integer("k")),
                            parse_selection_mode(ctx.cfg.str("bench.selection"))};
  const auto bundle = p.build(p.select(p.query_feature(q.first, q.language), opts, seed), q.language, q.objects);
  if (dry_run) {
    ctx.out << bundle.rendered;
    return 0;
  }
  ctx.out << json{{"prompt_digest", sha256_hex(bundle.rendered)},
                  {"system", bundle.system_text},
                  {"user", bundle.user_text()},
                  {"demo_ids", [&] {
                     std::vector<std::string> ids;
                     for (const auto& b : bundle.demo_blocks) ids.push_back(b.demo_id);
                     return ids;
                   }()}}
                 .dump(2)
          << "\n";
  return 0;
}

int cmd_predict(Context& ctx, const std::string& task, const std::string& text) {
  const auto p = make_pipeline(ctx.cfg);
  const auto seed = static_cast<std::uint64_t>(ctx.cfg.integer("seed"));
  const auto q = resolve_query(p, task, text, seed);
  const auto gw = make_gateway(ctx.cfg);
  const EpisodeOptions opts{static_cast<std::size_t>(ctx.cfg.integer("k")),
                            parse_selection_mode(ctx.cfg.str("bench.selection"))};
  const auto bundle = p.build(p.select(p.query_feature(q.first, q.language), opts, seed), q.language, q.objects);
  ScriptedResponder scripted = [&](const PromptBundle&) -> std::string {
    if (!q.task) throw ConfigError("the scripted backend needs a library task");
    return oracle_response(*q.task, q.scene, p.params(), p.dataset().extras.gripper_open_value);
  };
  const auto rec = gw->complete(bundle, scripted);
  const auto pred = parse_prediction(rec.response_text, p.dataset().workspace.grid_resolution);
  for (const auto& w : pred.parse_warnings) spdlog::warn("{}", w);
  for (const auto& a : pred.actions) ctx.out << textualize_action(a) << "\n";
  spdlog::info("{} actions from {} in {:.3f} s after {} attempt(s)", pred.actions.size(), to_string(rec.backend),
               rec.latency, rec.attempt_count);
  return 0;
}

int cmd_rollout(Context& ctx, const std::string& task) {
  if (task.empty()) throw ConfigError("rollout needs --task <name>");
  const auto p = make_pipeline(ctx.cfg);
  const auto gw = make_gateway(ctx.cfg);
  const auto seed = static_cast<std::uint64_t>(ctx.cfg.integer("seed"));
  const EpisodeOptions opts{static_cast<std::size_t>(ctx.cfg.integer("k")),
                            parse_selection_mode(ctx.cfg.str("bench.selection"))};
  const auto tr = p.run_episode(find_task(task), seed, *gw, opts);
  json actions = json::array();
  if (tr.prediction)
    for (const auto& a : tr.prediction->actions) actions.push_back(quantized_json(a));
  const auto& r = tr.result;
  ctx.out << json{{"task", r.task},
                  {"episode_seed", r.episode_seed},
                  {"success", r.success},
                  {"steps_executed", r.steps_executed},
                  {"failure_reason", r.failure_reason ? json(to_string(*r.failure_reason)) : json(nullptr)},
                  {"actions", std::move(actions)}}
                 .dump()
          << "\n";
  return 0;
}

int cmd_bench(Context& ctx, bool quiet) {
  const auto p = make_pipeline(ctx.cfg);
  const auto gw = make_gateway(ctx.cfg);
  const auto report = run_benchmark(p, *gw, bench_config(ctx.cfg));
  write_report(report, ctx.cfg.str("bench.out"));
  if (!quiet) ctx.out << render_markdown(report);
  return 0;
}

int cmd_ablate(Context& ctx, bool quiet) {
  const auto p = make_pipeline(ctx.cfg);
  const auto gw = make_gateway(ctx.cfg);
  const auto ab = ablate_selection(p, *gw, bench_config(ctx.cfg));
  const std::filesystem::path dir = ctx.cfg.str("bench.out");
  write_text(dir / "ablation.json", to_json(ab).dump(2) + "\n");
  write_text(dir / "ablation.md", render_markdown(ab));
  if (!quiet) ctx.out << render_markdown(ab);
  return 0;
}

int cmd_sweep(Context& ctx) {
  const auto p = make_pipeline(ctx.cfg);
  const auto gw = make_gateway(ctx.cfg);
  std::vector<std::size_t> ks;
  for (auto k : ctx.cfg.u64_list("sweep.k_values")) ks.push_back(static_cast<std::size_t>(k));
  const auto points = sweep_k(p, *gw, bench_config(ctx.cfg), ks);
  const std::filesystem::path dir = ctx.cfg.str("bench.out");
  const auto csv = sweep_csv(points);
  write_text(dir / "sweep.csv", csv);
  ctx.out << csv;
  return 0;
}

int cmd_report(Context& ctx, const std::string& in, const std::string& format) {
  std::ifstream f(in, std::ios::binary);
  if (!f) throw IoError("cannot read report " + in);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw Error("malformed report " + in + ": " + e.what());
  }
  const auto report = report_from_json(j);
  if (format == "md") ctx.out << render_markdown(report);
  else if (format == "csv") ctx.out << render_csv(report);
  else ctx.out << to_json(report).dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Error reporting

std::string full_message(const std::exception& e) {
  std::string msg = e.what();
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    msg += " <- " + full_message(inner);
  } catch (...) {
  }
  return msg;
}

void error_line(std::ostream& err, std::string_view kind, const std::string& message, int code) {
  err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
}

// Routes spdlog to the given stream for the duration of one dispatch.
class LogScope {
 public:
  LogScope(std::ostream& err) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
    auto logger = std::make_shared<spdlog::logger>("xicm", sink);
    logger->set_pattern("[%l] %v");
    logger->set_level(spdlog::level::info);
    spdlog::set_default_logger(logger);
  }
  ~LogScope() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  LogScope log_scope(err);
  Context ctx{CliConfig{}, out};

  CLI::App app{"In-context manipulation pipeline: demonstrations, dynamics-guided selection, prompting and "
               "toy-simulator benchmarks.",
               "xicm"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  struct Binding {
    CLI::Option* option;
    std::string key;
    std::string* value;
  };
  std::deque<std::string> storage;
  std::vector<Binding> bindings;
  auto bind = [&](CLI::App* sub, const std::string& flag, const std::string& key) {
    storage.emplace_back();
    const auto& e = ctx.cfg.entry(key);
    auto* opt = sub->add_option(flag, storage.back(),
                                e.help + " [" + key + ", default '" + e.value + "']");
    bindings.push_back({opt, key, &storage.back()});
  };

  std::string config_file;
  bool print_config = false, quiet = false;
  app.add_option("--config", config_file, "key=value config file");
  bind(&app, "--seed", "seed");
  app.add_flag("--print-config", print_config, "print every setting with its source and exit");
  app.add_flag("-q,--quiet", quiet, "only log warnings and errors");

  auto* simgen = app.add_subcommand("simgen", "generate seen-task demonstrations in the toy simulator");
  bind(simgen, "--tasks", "simgen.tasks");
  bind(simgen, "--episodes", "simgen.episodes");
  bind(simgen, "--out", "dataset");

  auto* ingest = app.add_subcommand("ingest", "load and validate a dataset; print counts and digest");
  bind(ingest, "--dataset", "dataset");

  std::string kf_out;
  auto* extract = app.add_subcommand("extract-keyframes", "write the key-actions of every demonstration");
  bind(extract, "--dataset", "dataset");
  bind(extract, "--epsilon", "epsilon");
  extract->add_option("--out", kf_out, "output JSONL file (default: stdout)");

  auto* embed = app.add_subcommand("embed", "compute dynamics features for the dataset");
  bind(embed, "--dataset", "dataset");
  bind(embed, "--model", "model");
  bind(embed, "--feature-mode", "feature_mode");
  bind(embed, "--out", "features");

  auto* train = app.add_subcommand("train-dynamics", "train the dynamics predictor");
  bind(train, "--dataset", "dataset");
  bind(train, "--out", "model");
  bind(train, "--epochs", "dynamics.epochs");
  bind(train, "--lr", "dynamics.lr");
  bind(train, "--hidden", "dynamics.hidden");
  bind(train, "--batch", "dynamics.batch");
  bind(train, "--train-seed", "dynamics.seed");

  std::string task, query, report_in = "report/report.json", report_format = "md";
  bool dry_run = false;
  auto add_query = [&](CLI::App* sub) {
    bind(sub, "--dataset", "dataset");
    bind(sub, "--model", "model");
    bind(sub, "--features", "features");
    bind(sub, "--feature-mode", "feature_mode");
    bind(sub, "--k", "k");
    sub->add_option("--task", task, "library task to query (scene sampled from --seed)");
    sub->add_option("--query", query, "instruction text; matches a library task when the wording is identical");
  };
  auto* select = app.add_subcommand("select", "rank seen demonstrations for a query");
  add_query(select);
  auto* prompt = app.add_subcommand("prompt", "build the in-context prompt for a query");
  add_query(prompt);
  bind(prompt, "--selection", "bench.selection");
  prompt->add_flag("--dry-run", dry_run, "print the rendered prompt and stop");
  auto* predict = app.add_subcommand("predict", "ask the backend for key-actions for a query");
  add_query(predict);
  bind(predict, "--selection", "bench.selection");
  bind(predict, "--backend", "gateway.backend");
  auto* rollout = app.add_subcommand("rollout", "run one seeded episode of a task");
  add_query(rollout);
  bind(rollout, "--selection", "bench.selection");
  bind(rollout, "--backend", "gateway.backend");

  auto add_bench = [&](CLI::App* sub) {
    bind(sub, "--dataset", "dataset");
    bind(sub, "--model", "model");
    bind(sub, "--features", "features");
    bind(sub, "--feature-mode", "feature_mode");
    bind(sub, "--k", "k");
    bind(sub, "--tasks", "bench.tasks");
    bind(sub, "--runs", "bench.runs");
    bind(sub, "--rollouts", "bench.rollouts");
    bind(sub, "--seeds", "bench.seeds");
    bind(sub, "--backend", "gateway.backend");
    bind(sub, "--workers", "bench.workers");
    bind(sub, "--out", "bench.out");
  };
  auto* bench = app.add_subcommand("bench", "run the seeded benchmark protocol and write report.{json,csv,md}");
  add_bench(bench);
  bind(bench, "--selection", "bench.selection");
  auto* ablate = app.add_subcommand("ablate", "dynamics-guided versus random selection on the same episodes");
  add_bench(ablate);
  auto* sweep = app.add_subcommand("sweep-k", "benchmark once per K and write sweep.csv");
  add_bench(sweep);
  bind(sweep, "--selection", "bench.selection");
  bind(sweep, "--k-values", "sweep.k_values");
  auto* report = app.add_subcommand("report", "re-render a report.json");
  report->add_option("--in", report_in, "report.json to read");
  report->add_option("--format", report_format, "md, csv or json")->check(CLI::IsMember({"md", "csv", "json"}));

  std::vector<const char*> argv{"xicm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    const CLI::App* failing = &app;
    for (const auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    error_line(err, "UsageError", e.what(), 2);
    return 2;
  }

  try {
    if (quiet) spdlog::set_level(spdlog::level::warn);
    if (!config_file.empty()) ctx.cfg.apply_file(config_file);
    ctx.cfg.apply_env([](const std::string& name) -> std::optional<std::string> {
      const char* v = std::getenv(name.c_str());
      return v ? std::optional<std::string>(v) : std::nullopt;
    });
    for (const auto& b : bindings)
      if (b.option->count() > 0) ctx.cfg.set(b.key, *b.value, ConfigSource::kFlag);
    ctx.cfg.validate();
    if (print_config) {
      out << ctx.cfg.dump();
      return 0;
    }
    if (app.get_subcommands().empty()) {
      err << app.help();
      error_line(err, "UsageError", "a subcommand is required", 2);
      return 2;
    }

    if (simgen->parsed()) return cmd_simgen(ctx);
    if (ingest->parsed()) return cmd_ingest(ctx);
    if (extract->parsed()) return cmd_extract_keyframes(ctx, kf_out);
    if (embed->parsed()) return cmd_embed(ctx);
    if (train->parsed()) return cmd_train(ctx);
    if (select->parsed()) return cmd_select(ctx, task, query);
    if (prompt->parsed()) return cmd_prompt(ctx, task, query, dry_run);
    if (predict->parsed()) return cmd_predict(ctx, task, query);
    if (rollout->parsed()) return cmd_rollout(ctx, task);
    if (bench->parsed()) return cmd_bench(ctx, quiet);
    if (ablate->parsed()) return cmd_ablate(ctx, quiet);
    if (sweep->parsed()) return cmd_sweep(ctx);
    if (report->parsed()) return cmd_report(ctx, report_in, report_format);
    return 2;
  } catch (const ConfigError& e) {
    error_line(err, e.kind(), full_message(e), 2);
    return 2;
  } catch (const Error& e) {
    error_line(err, e.kind(), full_message(e), 1);
    return 1;
  } catch (const std::exception& e) {
    error_line(err, "InternalError", full_message(e), 1);
    return 1;
  }
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace xicm
