#include "vauth/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "vauth/errors.hpp"
#include "vauth/signal_core.hpp"

namespace vauth {
namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<std::pair<std::string, double>>& out) : out_(out) {}

  void lap(const char* stage) {
    const auto now = std::chrono::steady_clock::now();
    out_.emplace_back(stage, std::chrono::duration<double, std::milli>(now - last_).count());
    last_ = now;
  }

 private:
  std::vector<std::pair<std::string, double>>& out_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void check_input(const SampledSignal& s, const char* name, const PipelineConfig& config) {
  if (s.duration_sec() < config.min_input_sec) {
    throw InputError(fmt::format("{} channel lasts {:.3f} s, below the {:.3f} s minimum", name, s.duration_sec(),
                                 config.min_input_sec));
  }
  if (all_zero(s.samples())) throw InputError(fmt::format("{} channel is all zeros", name));
}

SampledSignal scaled(const SampledSignal& s, double gain) {
  std::vector<double> out(s.vector());
  for (auto& v : out) v *= gain;
  return SampledSignal(std::move(out), s.rate_hz());
}

}  // namespace

std::string_view to_string(NoMatchReason r) {
  switch (r) {
    case NoMatchReason::NoEnvelope:
      return "NoEnvelope";
    case NoMatchReason::NoSurvivingSegments:
      return "NoSurvivingSegments";
    case NoMatchReason::ClassifierReject:
      return "ClassifierReject";
  }
  return "Unknown";
}

NoMatchReason parse_no_match_reason(std::string_view s) {
  for (auto r : {NoMatchReason::NoEnvelope, NoMatchReason::NoSurvivingSegments, NoMatchReason::ClassifierReject}) {
    if (to_string(r) == s) return r;
  }
  throw InvalidConfig("unknown no-match reason '" + std::string(s) + "'");
}

Analysis analyze(const SampledSignal& acc, const SampledSignal& mic, const PipelineConfig& config) {
  check_input(acc, "accelerometer", config);
  check_input(mic, "microphone", config);
  Analysis out;
  StageClock clock(out.stage_timings_ms);
  const double rate = config.target_rate_hz;

  const auto acc_hp = highpass_filter(acc, config.highpass_hz);
  auto acc_rs = resample(acc_hp, rate);
  auto mic_rs = resample(mic, rate);
  clock.lap("filter_resample");

  const auto window = static_cast<std::size_t>(std::llround(config.spike_window_sec * rate));
  const auto acc_clipped = clip_spikes(acc_rs, window, config.spike_k_sigma);
  const auto mic_clipped = clip_spikes(mic_rs, window, config.spike_k_sigma);
  clock.lap("clip_spikes");

  const double acc_peak = peak_abs(acc_clipped.samples());
  const double mic_peak = peak_abs(mic_clipped.samples());
  if (mic_peak == 0.0) throw InputError("microphone channel is silent after resampling");
  if (acc_peak == 0.0) {
    out.early_exit = NoMatchReason::NoEnvelope;
    return out;
  }
  const auto acc_n = scaled(acc_clipped, 1.0 / acc_peak);
  const auto mic_n = scaled(mic_clipped, 1.0 / mic_peak);
  auto aligned = align(acc_n, mic_n);
  out.alignment_shift = aligned.shift;
  clock.lap("align");

  EnvelopeParams env_params;
  env_params.frame_len = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.envelope_frame_sec * rate)));
  env_params.threshold_frac = config.envelope_threshold;
  env_params.close_gap_frames =
      static_cast<std::size_t>(std::llround(config.envelope_close_gap_sec / config.envelope_frame_sec));
  const double floor_rel = config.acc_noise_floor_rms / acc_peak;
  env_params.absolute_floor = floor_rel * floor_rel;
  out.envelope = energy_envelope(aligned.f_aligned, env_params);
  clock.lap("envelope");
  if (out.envelope.active_frames() == 0) {
    out.early_exit = NoMatchReason::NoEnvelope;
    return out;
  }
  const auto mic_masked = apply_envelope(out.envelope, aligned.g_aligned);

  out.segments = segment_signals(aligned.f_aligned, mic_masked, out.envelope);
  for (auto& seg : out.segments) seg = filter_segment(std::move(seg), config.rules);
  clock.lap("segments");

  try {
    out.surviving = assemble_surviving(out.segments, aligned.f_aligned.size(), rate);
  } catch (const NoSurvivingSegments&) {
    out.early_exit = NoMatchReason::NoSurvivingSegments;
    return out;
  }
  // Correlate only the span covered by kept segments, so silence or dropped
  // content outside it does not stretch the lag axis of the feature vector.
  std::size_t span_begin = aligned.f_aligned.size(), span_end = 0;
  for (const auto& seg : out.segments) {
    if (seg.verdict != Verdict::Kept) continue;
    span_begin = std::min(span_begin, seg.begin_sample);
    span_end = std::max(span_end, seg.end_sample);
  }
  out.features = build_feature_vector(xcorr_normalized(out.surviving->acc.slice(span_begin, span_end),
                                                       out.surviving->mic.slice(span_begin, span_end)));
  clock.lap("features");
  return out;
}

MatchReport match(const SampledSignal& acc, const SampledSignal& mic, const ClassifierModel& model,
                  const PipelineConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  auto analysis = analyze(acc, mic, config);
  MatchReport report;
  report.config_digest = digest_hex(config_digest(config));
  report.alignment_shift = analysis.alignment_shift;
  for (const auto& seg : analysis.segments) report.segments.push_back(diagnose(seg));
  report.stage_timings_ms = std::move(analysis.stage_timings_ms);

  if (analysis.early_exit) {
    report.reason = analysis.early_exit;
  } else {
    const auto decision_start = std::chrono::steady_clock::now();
    report.decision = config.mode == DecisionMode::Classifier
                          ? classify(model, *analysis.features)
                          : threshold_decision(*analysis.features, config.decision_threshold);
    report.stage_timings_ms.emplace_back(
        "decision", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - decision_start).count());
    report.is_match = report.decision->is_match;
    if (report.is_match) {
      report.cleaned_mic = std::move(analysis.surviving->mic);
    } else {
      report.reason = NoMatchReason::ClassifierReject;
    }
  }
  if (!report.is_match) report.cleaned_mic = SampledSignal::empty(config.target_rate_hz);
  report.stage_timings_ms.emplace_back(
      "total", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count());
  return report;
}

FeatureExtractor pipeline_feature_extractor(const PipelineConfig& config) {
  return [config](const SampledSignal& acc, const SampledSignal& mic) { return analyze(acc, mic, config).features; };
}

TrainConfig pipeline_train_config() {
  TrainConfig t;
  t.sign_canonical = true;
  return t;
}

ClassifierModel train_from_recordings(const std::vector<SampledSignal>& accs, const std::vector<SampledSignal>& mics,
                                      const PipelineConfig& config, std::size_t replication, const TrainConfig& train,
                                      TrainingSetStats* stats) {
  const auto examples = build_training_set(accs, mics, replication, pipeline_feature_extractor(config), stats);
  auto model = train_classifier(examples, train);
  model.meta.config_digest = config_digest(config);
  return model;
}

bool same_outcome(const MatchReport& a, const MatchReport& b) {
  return a.is_match == b.is_match && a.reason == b.reason && a.decision == b.decision && a.segments == b.segments &&
         a.alignment_shift == b.alignment_shift;
}

double BatchTableRow::tp_rate() const {
  return genuine_trials ? static_cast<double>(genuine_matched) / static_cast<double>(genuine_trials)
                        : std::numeric_limits<double>::quiet_NaN();
}

double BatchTableRow::fp_rate() const {
  return false_trials ? static_cast<double>(false_matched) / static_cast<double>(false_trials)
                      : std::numeric_limits<double>::quiet_NaN();
}

std::string BatchResult::format_table() const {
  std::ostringstream os;
  os << fmt::format("{:<12} {:<12} {:>8} {:>8} {:>8} {:>8}\n", "acc", "mic", "TP%", "FP%", "genuine", "false");
  auto pct = [](double v) { return std::isnan(v) ? std::string("-") : fmt::format("{:.1f}", 100.0 * v); };
  for (const auto& row : table) {
    os << fmt::format("{:<12} {:<12} {:>8} {:>8} {:>8} {:>8}\n", row.acc_group, row.mic_group, pct(row.tp_rate()),
                      pct(row.fp_rate()), row.genuine_trials, row.false_trials);
  }
  return os.str();
}

BatchResult batch_match(const std::vector<SampledSignal>& accs, const std::vector<SampledSignal>& mics,
                        const ClassifierModel& model, const PipelineConfig& config,
                        const std::vector<std::string>& groups, unsigned threads) {
  BatchResult result;
  const std::size_t na = accs.size();
  const std::size_t nm = mics.size();
  result.cells.resize(na * nm);
  if (na == 0 || nm == 0) {
    result.tp_rate = result.fp_rate = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  if (!groups.empty() && groups.size() < std::max(na, nm)) {
    throw InputError("group labels must cover every recording");
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < result.cells.size(); k = next++) {
      auto& cell = result.cells[k];
      cell.acc_id = k / nm;
      cell.mic_id = k % nm;
      cell.genuine = cell.acc_id == cell.mic_id;
      const auto report = match(accs[cell.acc_id], mics[cell.mic_id], model, config);
      cell.matched = report.is_match;
      cell.reason = report.reason;
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, result.cells.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<std::string> order;
  auto group_of = [&](std::size_t i) { return groups.empty() ? std::string("all") : groups[i]; };
  if (!groups.empty()) {
    for (const auto& g : groups) {
      if (std::find(order.begin(), order.end(), g) == order.end()) order.push_back(g);
    }
    for (const auto& ga : order) {
      for (const auto& gm : order) result.table.push_back({ga, gm});
    }
  }
  BatchTableRow all{"all", "all"};
  for (const auto& cell : result.cells) {
    auto tally = [&](BatchTableRow& row) {
      if (cell.genuine) {
        ++row.genuine_trials;
        row.genuine_matched += cell.matched ? 1 : 0;
      } else {
        ++row.false_trials;
        row.false_matched += cell.matched ? 1 : 0;
      }
    };
    tally(all);
    if (!groups.empty()) {
      for (auto& row : result.table) {
        if (row.acc_group == group_of(cell.acc_id) && row.mic_group == group_of(cell.mic_id)) tally(row);
      }
    }
  }
  result.table.push_back(all);
  result.tp_rate = all.tp_rate();
  result.fp_rate = all.fp_rate();
  return result;
}

}  // namespace vauth
