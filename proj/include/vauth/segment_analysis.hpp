#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "vauth/pitch.hpp"
#include "vauth/signal.hpp"

namespace vauth {

enum class Verdict {
  Kept,
  DroppedTooShort,
  DroppedNoPulses,
  DroppedPitchRange,
  DroppedPitchMismatch,
  DroppedLowCorrelation,
};

std::string_view to_string(Verdict v);
/// Inverse of to_string; throws InvalidConfig for an unknown name.
Verdict parse_verdict(std::string_view s);

/// Thresholds of the per-segment rules.
struct RuleConfig {
  double min_segment_sec = 0.020;
  double min_pulse_run_sec = 0.020;
  double f0_min_hz = 80.0;             // rule 3 window on the accelerometer mean f0
  double f0_max_hz = 1.0 / 0.003;
  double pitch_distance_max = 0.25;
  double corr_gate = 0.25;             // max |xcorr| at or below this drops the segment
  double extract_f0_min_hz = 60.0;     // pulse search range, wider than the rule 3 window
  double extract_f0_max_hz = 500.0;
  PitchParams pitch;

  bool operator==(const RuleConfig&) const = default;
};

/// One envelope region of the aligned pair.
struct SegmentPair {
  std::size_t index = 0;
  std::size_t begin_sample = 0;  // position in the aligned signals
  std::size_t end_sample = 0;    // exclusive
  double start_sec = 0.0;
  double end_sec = 0.0;
  SampledSignal acc;  // normalized to unit peak unless all-zero
  SampledSignal mic;
  GlottalPulseTrain acc_pulses;
  GlottalPulseTrain mic_pulses;
  Verdict verdict = Verdict::Kept;
  double max_xcorr = 0.0;       // signed value at max |xcorr|; 0 until rule 5 runs
  double pitch_distance = -1.0; // -1 until rule 4 runs
};

/// Flat record of a judged segment, without the sample data.
struct SegmentDiagnostic {
  std::size_t index = 0;
  double start_sec = 0.0;
  double end_sec = 0.0;
  Verdict verdict = Verdict::Kept;
  double max_xcorr = 0.0;
  double pitch_distance = -1.0;
  double acc_f0_hz = 0.0;
  double mic_f0_hz = 0.0;
  double acc_longest_run_sec = 0.0;
  std::size_t acc_pulses = 0;
  std::size_t mic_pulses = 0;

  bool operator==(const SegmentDiagnostic&) const = default;
};

SegmentDiagnostic diagnose(const SegmentPair& pair);

/// One pair per maximal active run of `env`, in time order. Each channel of a
/// segment is scaled to unit peak on its own. Requires equal length and rate.
std::vector<SegmentPair> segment_signals(const SampledSignal& acc, const SampledSignal& mic,
                                         const EnergyEnvelope& env);

/// Applies the rules in order and records the first failure.
SegmentPair filter_segment(SegmentPair pair, const RuleConfig& config);

struct Assembled {
  SampledSignal acc;
  SampledSignal mic;
};

/// Places every Kept segment at its original position and zeros the rest.
/// Throws NoSurvivingSegments when nothing is kept.
Assembled assemble_surviving(const std::vector<SegmentPair>& pairs, std::size_t total_samples, double rate_hz);

}  // namespace vauth
