#include "vauth/segment_analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "vauth/errors.hpp"
#include "vauth/signal_core.hpp"

namespace vauth {
namespace {

constexpr std::array<std::pair<Verdict, std::string_view>, 6> kVerdictNames{{
    {Verdict::Kept, "Kept"},
    {Verdict::DroppedTooShort, "DroppedTooShort"},
    {Verdict::DroppedNoPulses, "DroppedNoPulses"},
    {Verdict::DroppedPitchRange, "DroppedPitchRange"},
    {Verdict::DroppedPitchMismatch, "DroppedPitchMismatch"},
    {Verdict::DroppedLowCorrelation, "DroppedLowCorrelation"},
}};

SampledSignal unit_peak(SampledSignal s) {
  if (all_zero(s.samples())) return s;
  return normalize_unity(s);
}

GlottalPulseTrain pulses_or_empty(const SampledSignal& s, const RuleConfig& config) {
  try {
    return extract_glottal_pulses(s, config.extract_f0_min_hz, config.extract_f0_max_hz, config.pitch);
  } catch (const SegmentTooShort&) {
    return {};
  }
}

}  // namespace

std::string_view to_string(Verdict v) {
  for (const auto& [verdict, name] : kVerdictNames) {
    if (verdict == v) return name;
  }
  return "Unknown";
}

Verdict parse_verdict(std::string_view s) {
  for (const auto& [verdict, name] : kVerdictNames) {
    if (name == s) return verdict;
  }
  throw InvalidConfig("unknown verdict '" + std::string(s) + "'");
}

SegmentDiagnostic diagnose(const SegmentPair& pair) {
  SegmentDiagnostic d;
  d.index = pair.index;
  d.start_sec = pair.start_sec;
  d.end_sec = pair.end_sec;
  d.verdict = pair.verdict;
  d.max_xcorr = pair.max_xcorr;
  d.pitch_distance = pair.pitch_distance;
  d.acc_f0_hz = pair.acc_pulses.mean_f0_hz();
  d.mic_f0_hz = pair.mic_pulses.mean_f0_hz();
  d.acc_longest_run_sec = pair.acc_pulses.longest_run_sec;
  d.acc_pulses = pair.acc_pulses.pulse_times.size();
  d.mic_pulses = pair.mic_pulses.pulse_times.size();
  return d;
}

std::vector<SegmentPair> segment_signals(const SampledSignal& acc, const SampledSignal& mic,
                                         const EnergyEnvelope& env) {
  if (acc.size() != mic.size() || acc.rate_hz() != mic.rate_hz()) {
    throw InvalidSignal("segment_signals needs aligned channels of equal length and rate");
  }
  std::vector<SegmentPair> pairs;
  const std::size_t n = acc.size();
  std::size_t f = 0;
  while (f < env.mask.size()) {
    if (!env.mask[f]) {
      ++f;
      continue;
    }
    std::size_t g = f;
    while (g < env.mask.size() && env.mask[g]) ++g;
    const std::size_t begin = std::min(n, f * env.frame_len);
    const std::size_t end = std::min(n, g * env.frame_len);
    f = g;
    if (end <= begin) continue;
    SegmentPair p;
    p.index = pairs.size();
    p.begin_sample = begin;
    p.end_sample = end;
    p.start_sec = static_cast<double>(begin) / acc.rate_hz();
    p.end_sec = static_cast<double>(end) / acc.rate_hz();
    p.acc = unit_peak(acc.slice(begin, end));
    p.mic = unit_peak(mic.slice(begin, end));
    pairs.push_back(std::move(p));
  }
  return pairs;
}

SegmentPair filter_segment(SegmentPair pair, const RuleConfig& config) {
  if (pair.end_sec - pair.start_sec < config.min_segment_sec) {
    pair.verdict = Verdict::DroppedTooShort;
    return pair;
  }

  pair.acc_pulses = pulses_or_empty(pair.acc, config);
  pair.mic_pulses = pulses_or_empty(pair.mic, config);
  const auto no_run = [&](const GlottalPulseTrain& t) {
    return t.empty() || t.longest_run_sec < config.min_pulse_run_sec;
  };
  if (no_run(pair.acc_pulses) || no_run(pair.mic_pulses)) {
    pair.verdict = Verdict::DroppedNoPulses;
    return pair;
  }

  const double cycle = pair.acc_pulses.mean_cycle_sec;
  if (cycle < 1.0 / config.f0_max_hz || cycle > 1.0 / config.f0_min_hz) {
    pair.verdict = Verdict::DroppedPitchRange;
    return pair;
  }

  pair.pitch_distance = pitch_distance(pair.acc_pulses, pair.mic_pulses);
  if (pair.pitch_distance > config.pitch_distance_max) {
    pair.verdict = Verdict::DroppedPitchMismatch;
    return pair;
  }

  const auto h = xcorr_normalized(pair.acc, pair.mic);
  pair.max_xcorr = h.values[h.argmax_abs()];
  if (std::abs(pair.max_xcorr) <= config.corr_gate) {
    pair.verdict = Verdict::DroppedLowCorrelation;
    return pair;
  }
  pair.verdict = Verdict::Kept;
  return pair;
}

Assembled assemble_surviving(const std::vector<SegmentPair>& pairs, std::size_t total_samples, double rate_hz) {
  std::vector<double> acc(total_samples, 0.0);
  std::vector<double> mic(total_samples, 0.0);
  std::size_t kept = 0;
  for (const auto& p : pairs) {
    if (p.verdict != Verdict::Kept) continue;
    if (p.end_sample > total_samples || p.acc.size() != p.end_sample - p.begin_sample) {
      throw InvalidSignal("segment " + std::to_string(p.index) + " does not fit the assembled length");
    }
    std::copy(p.acc.vector().begin(), p.acc.vector().end(), acc.begin() + static_cast<std::ptrdiff_t>(p.begin_sample));
    std::copy(p.mic.vector().begin(), p.mic.vector().end(), mic.begin() + static_cast<std::ptrdiff_t>(p.begin_sample));
    ++kept;
  }
  if (kept == 0) throw NoSurvivingSegments("all " + std::to_string(pairs.size()) + " segments were dropped");
  return {SampledSignal(std::move(acc), rate_hz), SampledSignal(std::move(mic), rate_hz)};
}

}  // namespace vauth
