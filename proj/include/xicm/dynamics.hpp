#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xicm/types.hpp"

namespace xicm {

inline constexpr int kPoolGrid = 8;
inline constexpr int kVisDim = kPoolGrid * kPoolGrid * 3;  // 192
inline constexpr int kLangDim = 256;

/// Mean-pools the image onto an 8x8 grid per channel, scaled to [0, 1].
/// Layout: cell-major (row, column), then channel.
std::vector<float> baseline_vis_feature(const Observation& obs);
std::vector<float> baseline_vis_feature(const Image& img);

/// Lowercase alphanumeric tokens of the text.
std::vector<std::string> tokenize(std::string_view text);

/// Hashed bag of unigrams and bigrams, L2-normalized. Empty text gives the
/// zero vector.
std::vector<float> lang_feature(std::string_view text);

/// Which components of [vis_in, vis_out, lang] go into a feature.
enum class FeatureMode : std::uint8_t {
  kVisOut = 1,
  kVisIn = 2,
  kLang = 3,
  kVisOutLang = 4,
  kVisInLang = 5,
  kVisInVisOut = 6,
  kAll = 7,
};

std::string to_string(FeatureMode mode);
/// Accepts the names produced by to_string. Throws ConfigError.
FeatureMode parse_feature_mode(std::string_view name);
bool uses_vis_in(FeatureMode mode);
bool uses_vis_out(FeatureMode mode);
bool uses_lang(FeatureMode mode);

struct PredictorConfig {
  int vis_dim = kVisDim;
  int lang_dim = kLangDim;
  int hidden = 64;
  double learning_rate = 0.05;
  int epochs = 300;
  int batch_size = 16;
  std::uint64_t seed = 7;
  double init_scale = 0.1;
};

/// One training pair: initial-frame feature and language feature in, final
/// frame feature out.
struct TrainingSample {
  std::vector<double> vis_in;
  std::vector<double> lang;
  std::vector<double> vis_target;
};

/// Predicts the final-frame visual feature from the initial frame and the
/// task description:
///
///   y = vis_in + W2 * tanh(W1 * [vis_in; lang] + b1) + b2
///
/// The residual path makes "nothing moves" the starting hypothesis.
class DynamicsPredictor {
 public:
  DynamicsPredictor() = default;
  /// Small random weights drawn from the config seed.
  explicit DynamicsPredictor(const PredictorConfig& config);

  const PredictorConfig& config() const { return config_; }
  std::size_t input_dim() const { return static_cast<std::size_t>(config_.vis_dim + config_.lang_dim); }
  std::size_t parameter_count() const;

  std::vector<double> predict(std::span<const double> vis_in, std::span<const double> lang) const;

  /// Mean squared error over all outputs of the batch. When `grad` is given it
  /// receives d(loss)/d(parameters) in parameters() order.
  double loss(std::span<const TrainingSample> batch, std::vector<double>* grad = nullptr) const;

  /// Flat copy of W1, b1, W2, b2 (row-major).
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  double final_training_loss() const { return final_loss_; }
  double baseline_loss() const { return baseline_loss_; }
  int epochs_trained() const { return epochs_trained_; }

  void save(const std::filesystem::path& path) const;
  static DynamicsPredictor load(const std::filesystem::path& path);

  friend DynamicsPredictor train_dynamics_predictor(std::span<const TrainingSample> samples,
                                                    const PredictorConfig& config);

 private:
  PredictorConfig config_;
  std::vector<double> w1_, b1_, w2_, b2_;
  double final_loss_ = 0.0;
  double baseline_loss_ = 0.0;
  int epochs_trained_ = 0;
};

/// Training pairs (first frame, language) -> last frame for every demonstration.
std::vector<TrainingSample> make_training_samples(const Dataset& dataset);

/// MSE of predicting every target with the per-component mean target.
double constant_mean_loss(std::span<const TrainingSample> samples);

/// Plain mini-batch gradient descent with a fixed step and seeded shuffling.
/// Throws Error when fewer than two samples are given and TrainingDiverged
/// when the loss stops being finite.
DynamicsPredictor train_dynamics_predictor(std::span<const TrainingSample> samples,
                                           const PredictorConfig& config);
DynamicsPredictor train_dynamics_predictor(const Dataset& dataset, const PredictorConfig& config);

struct DynamicsFeature {
  std::string demo_id;  // "query" for the unseen task
  std::vector<float> vis;
  std::vector<float> lang;

  std::size_t dim() const { return vis.size() + lang.size(); }
  bool operator==(const DynamicsFeature&) const = default;
};

/// Feature of a demonstration or query from its first observation and its
/// language. Parts excluded by `mode` are empty.
DynamicsFeature dynamics_feature(std::string id, const Observation& first, std::string_view language,
                                 const DynamicsPredictor& predictor, FeatureMode mode);
DynamicsFeature dynamics_feature(const Demonstration& demo, const DynamicsPredictor& predictor,
                                 FeatureMode mode);

/// Cosine over the concatenated [vis, lang] vector; 0 when either norm is 0.
/// Throws DimensionError when the part sizes differ.
double cosine_similarity(const DynamicsFeature& a, const DynamicsFeature& b);

struct SelectionResult {
  std::vector<std::size_t> indices;
  std::vector<double> scores;  // descending
};

/// Exact top-K by cosine; equal scores keep ascending pool order.
/// Throws RangeError unless 1 <= k <= pool.size().
SelectionResult select_top_k(const DynamicsFeature& query, std::span<const DynamicsFeature> pool,
                             std::size_t k);

/// A homogeneous set of features, as stored on disk.
struct FeatureTable {
  FeatureMode mode = FeatureMode::kVisOutLang;
  std::uint32_t vis_dim = 0;   // length of every feature's vis part (384 in mode all)
  std::uint32_t lang_dim = 0;  // length of every feature's lang part
  std::string source = "xicm-mlp";
  std::vector<DynamicsFeature> features;

  /// Throws DimensionError if a feature disagrees with the header.
  void check() const;
  /// Index of the feature with this id, if any.
  std::optional<std::size_t> find(std::string_view id) const;
  bool operator==(const FeatureTable&) const = default;
};

FeatureTable embed_dataset(const Dataset& dataset, const DynamicsPredictor& predictor, FeatureMode mode);

/// Binary layout, little-endian:
///   "XICMFEAT" | u32 version | u8 mode | u32 vis_dim | u32 lang_dim |
///   u32 count | u32 len + source bytes |
///   count x (u32 len + id bytes | (vis_dim + lang_dim) x f32)
void export_features(const FeatureTable& table, const std::filesystem::path& path);
/// Throws FormatError (with byte offset) on truncation, bad header or NaN.
FeatureTable import_features(const std::filesystem::path& path);
FeatureTable decode_features(std::string_view bytes);
std::string encode_features(const FeatureTable& table);

}  // namespace xicm
