#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vauth/config.hpp"
#include "vauth/decision.hpp"
#include "vauth/segment_analysis.hpp"
#include "vauth/signal.hpp"

namespace vauth {

enum class NoMatchReason { NoEnvelope, NoSurvivingSegments, ClassifierReject };

std::string_view to_string(NoMatchReason r);
NoMatchReason parse_no_match_reason(std::string_view s);

struct MatchReport {
  bool is_match = false;
  std::optional<NoMatchReason> reason;  // set exactly when is_match is false
  std::optional<MatchDecision> decision;  // absent when no feature vector was built
  SampledSignal cleaned_mic;  // surviving microphone segments at the working rate; empty on no match
  std::vector<SegmentDiagnostic> segments;
  std::vector<std::pair<std::string, double>> stage_timings_ms;
  std::ptrdiff_t alignment_shift = 0;
  std::string config_digest;
};

/// Everything the pipeline computes before the final decision.
struct Analysis {
  std::ptrdiff_t alignment_shift = 0;
  EnergyEnvelope envelope;
  std::vector<SegmentPair> segments;
  std::optional<Assembled> surviving;
  std::optional<FeatureVector> features;
  std::optional<NoMatchReason> early_exit;  // NoEnvelope or NoSurvivingSegments
  std::vector<std::pair<std::string, double>> stage_timings_ms;
};

/// Pre-processing, segmentation, per-segment rules and the feature vector.
/// Throws InputError for inputs shorter than config.min_input_sec or all-zero.
Analysis analyze(const SampledSignal& acc, const SampledSignal& mic, const PipelineConfig& config);

/// Full matching run. The model is ignored in threshold mode.
MatchReport match(const SampledSignal& acc, const SampledSignal& mic, const ClassifierModel& model,
                  const PipelineConfig& config);

/// Feature extractor backed by analyze(), for build_training_set.
FeatureExtractor pipeline_feature_extractor(const PipelineConfig& config);

/// Training settings the pipeline uses: sign-canonical scoring, defaults otherwise.
TrainConfig pipeline_train_config();

/// Training set from paired recordings (acc i with mic j, label i == j)
/// through analyze(), then SMO training. `stats` receives the counts.
ClassifierModel train_from_recordings(const std::vector<SampledSignal>& accs, const std::vector<SampledSignal>& mics,
                                      const PipelineConfig& config, std::size_t replication = 5,
                                      const TrainConfig& train = pipeline_train_config(),
                                      TrainingSetStats* stats = nullptr);

/// Decision and verdict list, the parts of a report that must agree between
/// two runs of the same pair.
bool same_outcome(const MatchReport& a, const MatchReport& b);

struct BatchCell {
  std::size_t acc_id = 0;
  std::size_t mic_id = 0;
  bool genuine = false;
  bool matched = false;
  std::optional<NoMatchReason> reason;
};

/// One row of the TP/FP table: pairs whose acc belongs to `acc_group` and mic
/// to `mic_group`.
struct BatchTableRow {
  std::string acc_group;
  std::string mic_group;
  std::size_t genuine_trials = 0;
  std::size_t genuine_matched = 0;
  std::size_t false_trials = 0;
  std::size_t false_matched = 0;
  double tp_rate() const;
  double fp_rate() const;
};

struct BatchResult {
  std::vector<BatchCell> cells;  // row-major, acc index outer
  double tp_rate = 0.0;          // NaN when there are no genuine pairs
  double fp_rate = 0.0;          // NaN when there are no false pairs
  std::vector<BatchTableRow> table;  // per group pair, then "all"/"all"

  std::string format_table() const;
};

/// All-vs-all matching: acc i against mic j, genuine iff i == j. `groups`
/// optionally labels each index (e.g. vowel/consonant) for the table.
/// Pairs are evaluated on up to `threads` workers; results keep input order.
BatchResult batch_match(const std::vector<SampledSignal>& accs, const std::vector<SampledSignal>& mics,
                        const ClassifierModel& model, const PipelineConfig& config,
                        const std::vector<std::string>& groups = {}, unsigned threads = 0);

}  // namespace vauth
