#pragma once

#include <cstddef>
#include <vector>

#include "vauth/signal.hpp"

namespace vauth {

/// Glottal closure instants detected in one segment.
///
/// `cycles[i] = pulse_times[i+1] - pulse_times[i]` for every consecutive pair,
/// including pairs that straddle an unvoiced gap. Statistics (mean cycle,
/// pitch distance) only use cycles inside a voiced run; `run_ends` marks
/// where each run stops.
struct GlottalPulseTrain {
  std::vector<double> pulse_times;  // seconds, strictly increasing
  std::vector<double> cycles;       // seconds
  std::vector<std::size_t> run_ends;  // exclusive end index into pulse_times of each run
  double longest_run_sec = 0.0;
  double mean_cycle_sec = 0.0;  // 0 when no in-run cycle exists

  bool empty() const { return pulse_times.empty(); }
  /// Whether cycles[i] lies inside a voiced run.
  bool cycle_in_run(std::size_t i) const;
  double mean_f0_hz() const { return mean_cycle_sec > 0.0 ? 1.0 / mean_cycle_sec : 0.0; }
};

/// Parameters of the autocorrelation periodicity detector.
struct PitchParams {
  double window_sec = 0.040;
  double hop_sec = 0.010;
  double voicing_threshold = 0.45;
  double silence_threshold = 0.03;  // frame peak relative to segment peak
  double tie_tolerance = 0.02;      // candidates this close to the best are ties; shortest period wins
  double octave_cost = 0.01;        // score penalty per octave of candidate period
  double search_fraction = 0.25;    // pulse search window around the predicted instant, in periods

  bool operator==(const PitchParams&) const = default;
};

/// Per-frame periodicity estimate, exposed for diagnostics and tests.
struct PitchFrame {
  double center_sec = 0.0;
  double period_sec = 0.0;  // 0 when unvoiced
  double strength = 0.0;    // corrected normalized autocorrelation at the chosen lag
  bool voiced = false;
};

/// Frame-level periodicity track of a segment, candidate periods limited to
/// [1/f0_max, 1/f0_min]. Throws SegmentTooShort when the segment is shorter
/// than one analysis window.
std::vector<PitchFrame> track_periodicity(const SampledSignal& segment, double f0_min_hz, double f0_max_hz,
                                          const PitchParams& params = {});

/// Detects glottal pulses: voiced frames are linked into runs and, inside each
/// run, pulses are placed on waveform maxima nearest the predicted period grid.
GlottalPulseTrain extract_glottal_pulses(const SampledSignal& segment, double f0_min_hz, double f0_max_hz,
                                         const PitchParams& params = {});

/// Builds a train from explicit pulse instants forming a single run.
GlottalPulseTrain make_pulse_train(std::vector<double> pulse_times);

/// Mean relative cycle difference |a - b| / max(a, b) over cycles paired by
/// nearest-pulse association within half a cycle. Computed in both
/// directions and averaged so the result is symmetric. Returns 1 when no
/// cycle can be paired. Throws NoPitch when either train is empty.
double pitch_distance(const GlottalPulseTrain& a, const GlottalPulseTrain& b);

}  // namespace vauth
