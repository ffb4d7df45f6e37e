#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vauth/signal.hpp"

namespace vauth {

inline constexpr std::size_t kFeatureLength = 1001;
inline constexpr std::size_t kFeatureCenter = 500;  // 0-based position of h(t_m)

struct FeatureVector {
  std::vector<double> values = std::vector<double>(kFeatureLength, 0.0);

  double center_value() const { return values[kFeatureCenter]; }
  bool operator==(const FeatureVector&) const = default;
};

/// Samples h around its peak t_m = argmax |h| (earliest on ties): 500 points at
/// n * t_m / 500 for n = 0..499, then h(t_m), then 500 points at
/// t_m + n * (t_e - t_m) / 500 for n = 1..500, with t_e the last lag index.
/// Fractional positions are linearly interpolated. A side of zero width is
/// left as zeros.
FeatureVector build_feature_vector(const CrossCorrelation& h);

struct LabeledExample {
  FeatureVector fv;
  int label = 0;  // 1 for a genuine pair
  std::size_t acc_id = 0;
  std::size_t mic_id = 0;
};

/// Produces the feature vector of one (acc, mic) pair, or nothing when the
/// pipeline has no surviving segments for it.
using FeatureExtractor =
    std::function<std::optional<FeatureVector>(const SampledSignal& acc, const SampledSignal& mic)>;

struct TrainingSetStats {
  std::size_t base_examples = 0;
  std::size_t base_positives = 0;
  std::size_t negatives = 0;
  std::size_t positives = 0;  // after replication
  std::size_t failed_pairs = 0;
};

/// All-vs-all pairing of the recordings; pair (i, j) is labeled 1 iff i == j.
/// Positives appear `replication` times in total. Pairs without a feature
/// vector are recorded with a zero vector. Both lists must hold `expected`
/// recordings (44 for the phoneme bank).
std::vector<LabeledExample> build_training_set(const std::vector<SampledSignal>& acc_recordings,
                                               const std::vector<SampledSignal>& mic_recordings,
                                               std::size_t replication, const FeatureExtractor& extract,
                                               TrainingSetStats* stats = nullptr, std::size_t expected = 44);

void export_training_csv(const std::vector<LabeledExample>& examples, const std::filesystem::path& path);

struct TrainConfig {
  double c = 1.0;
  // Multiply each vector by the sign of its center value before training and
  // scoring, so the classifier is blind to sensor polarity.
  bool sign_canonical = false;
  double tolerance = 1e-3;               // stop when the maximal KKT violation is below this
  std::size_t max_iterations = 1000000;  // pair updates
};

struct Calibration {
  double slope = 1.0;
  double intercept = 0.0;

  bool operator==(const Calibration&) const = default;
};

struct ModelMeta {
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
  double training_accuracy = 0.0;
  std::uint32_t config_digest = 0;
  std::string created;  // ISO-8601 UTC

  bool operator==(const ModelMeta&) const = default;
};

/// Linear decision function w . x + b with a logistic probability map.
struct ClassifierModel {
  std::vector<double> weights = std::vector<double>(kFeatureLength, 0.0);
  double bias = 0.0;
  Calibration calibration;
  bool sign_canonical = false;
  ModelMeta meta;

  /// w·fv + bias, or w·(s·fv) + bias with s the sign of the center value
  /// when sign_canonical is set.
  double decision_value(const FeatureVector& fv) const;
  bool operator==(const ClassifierModel&) const = default;
};

struct MatchDecision {
  bool is_match = false;
  double score = 0.0;        // decision value (margin)
  double probability = 0.0;  // calibrated, in [0, 1]
  double max_xcorr = 0.0;    // center of the feature vector

  bool operator==(const MatchDecision&) const = default;
};

/// Soft-margin linear SVM trained by SMO on the dual, followed by a logistic
/// fit of the training decision values. Features are used as given unless
/// config.sign_canonical is set.
/// Throws DegenerateTrainingSet unless both labels occur.
ClassifierModel train_classifier(const std::vector<LabeledExample>& examples, const TrainConfig& config = {});

double training_accuracy(const ClassifierModel& model, const std::vector<LabeledExample>& examples);

MatchDecision classify(const ClassifierModel& model, const FeatureVector& fv);

/// Binary rule v = 1 iff m > th.
bool threshold_rule(double m, double th);

/// Decision from the threshold rule instead of a trained model; the score is
/// m - th and the probability is m clamped to [0, 1].
MatchDecision threshold_decision(const FeatureVector& fv, double th);

inline constexpr std::uint32_t kModelVersion = 1;

void save_model(const ClassifierModel& model, const std::filesystem::path& path);
/// Throws ModelFormatError on a bad magic, version, length or checksum.
ClassifierModel load_model(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_model(const ClassifierModel& model);
ClassifierModel deserialize_model(const std::vector<std::uint8_t>& bytes);

/// Upper bound on max |xcorr(f, g)| of two signals split into slots of equal
/// width, from per-slot pair scores m_ij and energy products e_ij = |f_i| |g_j|:
/// max over slot offsets d of sum_{j - i = d} m_ij e_ij / (|f| |g|).
/// The bound holds when each slot's content fills at most half of the slot,
/// so that only one offset contributes at any lag.
double segment_composition_bound(const std::vector<SampledSignal>& f_slots,
                                 const std::vector<SampledSignal>& g_slots);

}  // namespace vauth
