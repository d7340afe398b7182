#include "xicm/dynamics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "xicm/errors.hpp"
#include "xicm/rng.hpp"

namespace xicm {

// ---------------------------------------------------------------------------
// Front-end features

std::vector<float> baseline_vis_feature(const Image& img) {
  std::vector<double> sum(kVisDim, 0.0);
  std::vector<int> count(kPoolGrid * kPoolGrid, 0);
  if (img.width > 0 && img.height > 0) {
    for (int r = 0; r < img.height; ++r) {
      const int cr = r * kPoolGrid / img.height;
      for (int c = 0; c < img.width; ++c) {
        const int cc = c * kPoolGrid / img.width;
        const int cell = cr * kPoolGrid + cc;
        const std::size_t px = (static_cast<std::size_t>(r) * img.width + c) * 3;
        for (int ch = 0; ch < 3; ++ch) sum[cell * 3 + ch] += img.data[px + ch];
        ++count[cell];
      }
    }
  }
  std::vector<float> out(kVisDim, 0.0f);
  for (int cell = 0; cell < kPoolGrid * kPoolGrid; ++cell) {
    if (count[cell] == 0) continue;
    for (int ch = 0; ch < 3; ++ch)
      out[cell * 3 + ch] = static_cast<float>(sum[cell * 3 + ch] / (255.0 * count[cell]));
  }
  return out;
}

std::vector<float> baseline_vis_feature(const Observation& obs) { return baseline_vis_feature(obs.rgb); }

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<float> lang_feature(std::string_view text) {
  std::vector<double> acc(kLangDim, 0.0);
  auto tokens = tokenize(text);
  auto add = [&](const std::string& key) { acc[hash_bytes(key) % kLangDim] += 1.0; };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add("u:" + tokens[i]);
    if (i + 1 < tokens.size()) add("b:" + tokens[i] + " " + tokens[i + 1]);
  }
  double norm = std::sqrt(std::inner_product(acc.begin(), acc.end(), acc.begin(), 0.0));
  std::vector<float> out(kLangDim, 0.0f);
  if (norm > 0.0)
    for (int i = 0; i < kLangDim; ++i) out[i] = static_cast<float>(acc[i] / norm);
  return out;
}

// ---------------------------------------------------------------------------
// Feature modes

namespace {
struct ModeName {
  FeatureMode mode;
  const char* name;
};
constexpr ModeName kModeNames[] = {
    {FeatureMode::kVisOut, "vis_out"},         {FeatureMode::kVisIn, "vis_in"},
    {FeatureMode::kLang, "lang"},              {FeatureMode::kVisOutLang, "vis_out+lang"},
    {FeatureMode::kVisInLang, "vis_in+lang"},  {FeatureMode::kVisInVisOut, "vis_in+vis_out"},
    {FeatureMode::kAll, "all"},
};
}  // namespace

std::string to_string(FeatureMode mode) {
  for (const auto& m : kModeNames)
    if (m.mode == mode) return m.name;
  return "unknown";
}

FeatureMode parse_feature_mode(std::string_view name) {
  for (const auto& m : kModeNames)
    if (name == m.name) return m.mode;
  if (name == "lang+vis_out") return FeatureMode::kVisOutLang;
  if (name == "lang+vis_in") return FeatureMode::kVisInLang;
  throw ConfigError("unknown feature mode '" + std::string(name) + "'");
}

bool uses_vis_in(FeatureMode m) {
  return m == FeatureMode::kVisIn || m == FeatureMode::kVisInLang || m == FeatureMode::kVisInVisOut ||
         m == FeatureMode::kAll;
}
bool uses_vis_out(FeatureMode m) {
  return m == FeatureMode::kVisOut || m == FeatureMode::kVisOutLang || m == FeatureMode::kVisInVisOut ||
         m == FeatureMode::kAll;
}
bool uses_lang(FeatureMode m) {
  return m == FeatureMode::kLang || m == FeatureMode::kVisOutLang || m == FeatureMode::kVisInLang ||
         m == FeatureMode::kAll;
}

// ---------------------------------------------------------------------------
// Predictor

DynamicsPredictor::DynamicsPredictor(const PredictorConfig& config) : config_(config) {
  if (config.vis_dim <= 0 || config.lang_dim < 0 || config.hidden <= 0)
    throw ConfigError("predictor dimensions must be positive");
  const auto in = input_dim();
  const auto h = static_cast<std::size_t>(config.hidden);
  const auto out = static_cast<std::size_t>(config.vis_dim);
  Rng rng(derive_seed(config.seed, "predictor-init", 0));
  const double s1 = std::sqrt(6.0 / static_cast<double>(in + h));
  const double s2 = config.init_scale * std::sqrt(6.0 / static_cast<double>(h + out));
  w1_.resize(h * in);
  for (auto& w : w1_) w = rng.uniform(-s1, s1);
  b1_.assign(h, 0.0);
  w2_.resize(out * h);
  for (auto& w : w2_) w = rng.uniform(-s2, s2);
  b2_.assign(out, 0.0);
}

std::size_t DynamicsPredictor::parameter_count() const {
  return w1_.size() + b1_.size() + w2_.size() + b2_.size();
}

namespace {

// Forward pass for one sample; fills the hidden activations.
void forward(const std::vector<double>& w1, const std::vector<double>& b1, const std::vector<double>& w2,
             const std::vector<double>& b2, std::span<const double> vis, std::span<const double> lang,
             std::vector<double>& hidden, std::vector<double>& out) {
  const std::size_t h = b1.size();
  const std::size_t dv = b2.size();
  const std::size_t in = vis.size() + lang.size();
  hidden.assign(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    const double* row = &w1[j * in];
    double acc = b1[j];
    for (std::size_t i = 0; i < vis.size(); ++i) acc += row[i] * vis[i];
    const double* lrow = row + vis.size();
    for (std::size_t i = 0; i < lang.size(); ++i)
      if (lang[i] != 0.0) acc += lrow[i] * lang[i];
    hidden[j] = std::tanh(acc);
  }
  out.assign(dv, 0.0);
  for (std::size_t k = 0; k < dv; ++k) {
    const double* row = &w2[k * h];
    double acc = b2[k] + vis[k];
    for (std::size_t j = 0; j < h; ++j) acc += row[j] * hidden[j];
    out[k] = acc;
  }
}

}  // namespace

std::vector<double> DynamicsPredictor::predict(std::span<const double> vis_in, std::span<const double> lang) const {
  if (vis_in.size() != static_cast<std::size_t>(config_.vis_dim) ||
      lang.size() != static_cast<std::size_t>(config_.lang_dim))
    throw DimensionError("predictor input has dimensions " + std::to_string(vis_in.size()) + "+" +
                         std::to_string(lang.size()) + ", expected " + std::to_string(config_.vis_dim) + "+" +
                         std::to_string(config_.lang_dim));
  std::vector<double> hidden, out;
  forward(w1_, b1_, w2_, b2_, vis_in, lang, hidden, out);
  return out;
}

double DynamicsPredictor::loss(std::span<const TrainingSample> batch, std::vector<double>* grad) const {
  if (batch.empty()) return 0.0;
  const std::size_t h = b1_.size();
  const std::size_t dv = b2_.size();
  const std::size_t in = input_dim();
  const double scale = 1.0 / static_cast<double>(batch.size() * dv);

  std::vector<double> g_w1, g_b1, g_w2, g_b2;
  if (grad) {
    g_w1.assign(w1_.size(), 0.0);
    g_b1.assign(h, 0.0);
    g_w2.assign(w2_.size(), 0.0);
    g_b2.assign(dv, 0.0);
  }
  std::vector<double> hidden, out, dy(dv), dh(h);
  double total = 0.0;
  for (const auto& s : batch) {
    if (s.vis_in.size() != dv || s.lang.size() != in - dv || s.vis_target.size() != dv)
      throw DimensionError("training sample does not match predictor dimensions");
    forward(w1_, b1_, w2_, b2_, s.vis_in, s.lang, hidden, out);
    for (std::size_t k = 0; k < dv; ++k) {
      const double r = out[k] - s.vis_target[k];
      total += r * r;
      dy[k] = 2.0 * r * scale;
    }
    if (!grad) continue;
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t k = 0; k < dv; ++k) {
      g_b2[k] += dy[k];
      double* grow = &g_w2[k * h];
      const double* wrow = &w2_[k * h];
      for (std::size_t j = 0; j < h; ++j) {
        grow[j] += dy[k] * hidden[j];
        dh[j] += wrow[j] * dy[k];
      }
    }
    for (std::size_t j = 0; j < h; ++j) {
      const double d = dh[j] * (1.0 - hidden[j] * hidden[j]);
      g_b1[j] += d;
      double* grow = &g_w1[j * in];
      for (std::size_t i = 0; i < dv; ++i) grow[i] += d * s.vis_in[i];
      for (std::size_t i = 0; i < s.lang.size(); ++i)
        if (s.lang[i] != 0.0) grow[dv + i] += d * s.lang[i];
    }
  }
  if (grad) {
    grad->clear();
    grad->reserve(parameter_count());
    grad->insert(grad->end(), g_w1.begin(), g_w1.end());
    grad->insert(grad->end(), g_b1.begin(), g_b1.end());
    grad->insert(grad->end(), g_w2.begin(), g_w2.end());
    grad->insert(grad->end(), g_b2.begin(), g_b2.end());
  }
  return total * scale;
}

std::vector<double> DynamicsPredictor::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  p.insert(p.end(), w1_.begin(), w1_.end());
  p.insert(p.end(), b1_.begin(), b1_.end());
  p.insert(p.end(), w2_.begin(), w2_.end());
  p.insert(p.end(), b2_.begin(), b2_.end());
  return p;
}

void DynamicsPredictor::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw DimensionError("parameter vector has the wrong length");
  auto it = params.begin();
  for (auto* v : {&w1_, &b1_, &w2_, &b2_}) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(v->size()), v->begin());
    it += static_cast<std::ptrdiff_t>(v->size());
  }
}

void DynamicsPredictor::save(const std::filesystem::path& path) const {
  nlohmann::json j{
      {"format", "xicm-dynamics-mlp-v1"},
      {"config",
       {{"vis_dim", config_.vis_dim},
        {"lang_dim", config_.lang_dim},
        {"hidden", config_.hidden},
        {"learning_rate", config_.learning_rate},
        {"epochs", config_.epochs},
        {"batch_size", config_.batch_size},
        {"seed", config_.seed},
        {"init_scale", config_.init_scale}}},
      {"final_training_loss", final_loss_},
      {"baseline_loss", baseline_loss_},
      {"epochs_trained", epochs_trained_},
      {"w1", w1_},
      {"b1", b1_},
      {"w2", w2_},
      {"b2", b2_},
  };
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

DynamicsPredictor DynamicsPredictor::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  DynamicsPredictor p;
  try {
    auto j = nlohmann::json::parse(in);
    if (j.at("format") != "xicm-dynamics-mlp-v1") throw Error("unsupported model format");
    const auto& c = j.at("config");
    p.config_.vis_dim = c.at("vis_dim").get<int>();
    p.config_.lang_dim = c.at("lang_dim").get<int>();
    p.config_.hidden = c.at("hidden").get<int>();
    p.config_.learning_rate = c.at("learning_rate").get<double>();
    p.config_.epochs = c.at("epochs").get<int>();
    p.config_.batch_size = c.at("batch_size").get<int>();
    p.config_.seed = c.at("seed").get<std::uint64_t>();
    p.config_.init_scale = c.at("init_scale").get<double>();
    p.final_loss_ = j.at("final_training_loss").get<double>();
    p.baseline_loss_ = j.at("baseline_loss").get<double>();
    p.epochs_trained_ = j.at("epochs_trained").get<int>();
    p.w1_ = j.at("w1").get<std::vector<double>>();
    p.b1_ = j.at("b1").get<std::vector<double>>();
    p.w2_ = j.at("w2").get<std::vector<double>>();
    p.b2_ = j.at("b2").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed model file " + path.string() + ": " + e.what());
  }
  const auto h = static_cast<std::size_t>(p.config_.hidden);
  const auto dv = static_cast<std::size_t>(p.config_.vis_dim);
  if (p.w1_.size() != h * p.input_dim() || p.b1_.size() != h || p.w2_.size() != dv * h || p.b2_.size() != dv)
    throw Error("model file " + path.string() + " has inconsistent weight shapes");
  return p;
}

std::vector<TrainingSample> make_training_samples(const Dataset& dataset) {
  std::vector<TrainingSample> out;
  out.reserve(dataset.size());
  for (const auto& d : dataset.demos) {
    auto vin = baseline_vis_feature(d.observations.front());
    auto vt = baseline_vis_feature(d.observations.back());
    auto lang = lang_feature(d.language);
    out.push_back({{vin.begin(), vin.end()}, {lang.begin(), lang.end()}, {vt.begin(), vt.end()}});
  }
  return out;
}

double constant_mean_loss(std::span<const TrainingSample> samples) {
  if (samples.empty()) return 0.0;
  const std::size_t dv = samples.front().vis_target.size();
  std::vector<double> mean(dv, 0.0);
  for (const auto& s : samples)
    for (std::size_t k = 0; k < dv; ++k) mean[k] += s.vis_target[k];
  for (auto& m : mean) m /= static_cast<double>(samples.size());
  double total = 0.0;
  for (const auto& s : samples)
    for (std::size_t k = 0; k < dv; ++k) total += (s.vis_target[k] - mean[k]) * (s.vis_target[k] - mean[k]);
  return total / static_cast<double>(samples.size() * dv);
}

DynamicsPredictor train_dynamics_predictor(std::span<const TrainingSample> samples, const PredictorConfig& config) {
  if (samples.size() < 2) throw Error("training needs at least 2 demonstrations");
  if (config.epochs < 1 || config.batch_size < 1 || !(config.learning_rate > 0.0))
    throw ConfigError("epochs, batch size and learning rate must be positive");
  DynamicsPredictor model(config);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(config.seed, "predictor-shuffle", 0));

  std::vector<double> params = model.parameters();
  std::vector<double> grad;
  std::vector<TrainingSample> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);
      const double l = model.loss(batch, &grad);
      if (!std::isfinite(l)) throw TrainingDiverged(epoch);
      for (std::size_t p = 0; p < params.size(); ++p) params[p] -= config.learning_rate * grad[p];
      model.set_parameters(params);
    }
    model.epochs_trained_ = epoch + 1;
  }
  model.final_loss_ = model.loss(samples);
  if (!std::isfinite(model.final_loss_)) throw TrainingDiverged(config.epochs);
  model.baseline_loss_ = constant_mean_loss(samples);
  spdlog::debug("dynamics predictor: final loss {:.6g}, constant-mean loss {:.6g}", model.final_loss_,
                model.baseline_loss_);
  return model;
}

DynamicsPredictor train_dynamics_predictor(const Dataset& dataset, const PredictorConfig& config) {
  auto samples = make_training_samples(dataset);
  return train_dynamics_predictor(samples, config);
}

// ---------------------------------------------------------------------------
// Features and selection

DynamicsFeature dynamics_feature(std::string id, const Observation& first, std::string_view language,
                                 const DynamicsPredictor& predictor, FeatureMode mode) {
  DynamicsFeature f;
  f.demo_id = std::move(id);
  const auto vis_in = baseline_vis_feature(first);
  const auto lang = lang_feature(language);
  if (uses_vis_in(mode)) f.vis.insert(f.vis.end(), vis_in.begin(), vis_in.end());
  if (uses_vis_out(mode)) {
    std::vector<double> vd(vis_in.begin(), vis_in.end());
    std::vector<double> ld(lang.begin(), lang.end());
    for (double v : predictor.predict(vd, ld)) f.vis.push_back(static_cast<float>(v));
  }
  if (uses_lang(mode)) f.lang = lang;
  return f;
}

DynamicsFeature dynamics_feature(const Demonstration& demo, const DynamicsPredictor& predictor, FeatureMode mode) {
  return dynamics_feature(demo.id, demo.observations.front(), demo.language, predictor, mode);
}

double cosine_similarity(const DynamicsFeature& a, const DynamicsFeature& b) {
  if (a.vis.size() != b.vis.size() || a.lang.size() != b.lang.size())
    throw DimensionError("feature dimensions differ: " + std::to_string(a.vis.size()) + "+" +
                         std::to_string(a.lang.size()) + " vs " + std::to_string(b.vis.size()) + "+" +
                         std::to_string(b.lang.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  auto acc = [&](const std::vector<float>& x, const std::vector<float>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      dot += static_cast<double>(x[i]) * y[i];
      na += static_cast<double>(x[i]) * x[i];
      nb += static_cast<double>(y[i]) * y[i];
    }
  };
  acc(a.vis, b.vis);
  acc(a.lang, b.lang);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

SelectionResult select_top_k(const DynamicsFeature& query, std::span<const DynamicsFeature> pool, std::size_t k) {
  if (k < 1 || k > pool.size())
    throw RangeError("K must lie in [1, " + std::to_string(pool.size()) + "], got " + std::to_string(k));
  std::vector<double> scores(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) scores[i] = cosine_similarity(query, pool[i]);
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  SelectionResult r;
  r.indices.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  for (auto i : r.indices) r.scores.push_back(scores[i]);
  return r;
}

void FeatureTable::check() const {
  const bool want_vis = uses_vis_in(mode) || uses_vis_out(mode);
  if (want_vis != (vis_dim > 0)) throw DimensionError("vis dimension does not match mode " + to_string(mode));
  if (uses_lang(mode) != (lang_dim > 0)) throw DimensionError("lang dimension does not match mode " + to_string(mode));
  for (const auto& f : features) {
    if (f.vis.size() != vis_dim || f.lang.size() != lang_dim)
      throw DimensionError("feature '" + f.demo_id + "' has dimensions " + std::to_string(f.vis.size()) + "+" +
                           std::to_string(f.lang.size()) + ", table declares " + std::to_string(vis_dim) + "+" +
                           std::to_string(lang_dim));
  }
}

std::optional<std::size_t> FeatureTable::find(std::string_view id) const {
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].demo_id == id) return i;
  return std::nullopt;
}

FeatureTable embed_dataset(const Dataset& dataset, const DynamicsPredictor& predictor, FeatureMode mode) {
  FeatureTable t;
  t.mode = mode;
  for (const auto& d : dataset.demos) t.features.push_back(dynamics_feature(d, predictor, mode));
  const auto dv = static_cast<std::uint32_t>(predictor.config().vis_dim);
  t.vis_dim = (uses_vis_in(mode) ? dv : 0) + (uses_vis_out(mode) ? dv : 0);
  t.lang_dim = uses_lang(mode) ? static_cast<std::uint32_t>(kLangDim) : 0;
  t.check();
  return t;
}

}  // namespace xicm
