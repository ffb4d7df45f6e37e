#include "vauth/pitch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "vauth/errors.hpp"

namespace vauth {
namespace {

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  }
  return w;
}

// Autocorrelation r[0..max_lag] of x.
std::vector<double> autocorr(std::span<const double> x, std::size_t max_lag) {
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag && lag < x.size(); ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < x.size(); ++i) acc += x[i] * x[i + lag];
    r[lag] = acc;
  }
  return r;
}

// Vertex of the parabola through (-1, a), (0, b), (1, c): {offset, value}.
std::pair<double, double> parabolic_peak(double a, double b, double c) {
  const double denom = a - 2.0 * b + c;
  if (denom >= 0.0) return {0.0, b};
  const double offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  return {offset, b - 0.25 * (a - c) * offset};
}

struct VoicedRun {
  std::size_t first_frame = 0;
  std::size_t last_frame = 0;
};

}  // namespace

bool GlottalPulseTrain::cycle_in_run(std::size_t i) const {
  if (i + 1 >= pulse_times.size()) return false;
  // cycle i joins pulses i and i+1; it is in a run unless a run ends at i+1.
  return !std::binary_search(run_ends.begin(), run_ends.end(), i + 1);
}

std::vector<PitchFrame> track_periodicity(const SampledSignal& segment, double f0_min_hz, double f0_max_hz,
                                          const PitchParams& params) {
  if (!(f0_min_hz > 0.0) || !(f0_min_hz < f0_max_hz)) {
    throw InvalidSignal("pitch range requires 0 < f0_min < f0_max");
  }
  const double rate = segment.rate_hz();
  const auto window = static_cast<std::size_t>(std::llround(params.window_sec * rate));
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.hop_sec * rate)));
  const auto x = segment.samples();
  if (window < 4 || x.size() < window) {
    throw SegmentTooShort("segment of " + std::to_string(x.size()) + " samples is shorter than the " +
                          std::to_string(window) + "-sample analysis window");
  }
  const auto lag_min = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(rate / f0_max_hz)));
  const auto lag_max = std::min<std::size_t>(window / 2, static_cast<std::size_t>(std::ceil(rate / f0_min_hz)));
  const std::size_t frames = (x.size() - window) / hop + 1;

  const auto w = hann(window);
  auto rw = autocorr(w, lag_max + 1);
  const double rw0 = rw[0];
  for (auto& v : rw) v /= rw0;

  const double global_peak = peak_abs(x);
  std::vector<PitchFrame> track(frames);
  std::vector<double> buf(window);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * hop;
    PitchFrame& pf = track[f];
    pf.center_sec = (static_cast<double>(start) + static_cast<double>(window) / 2.0) / rate;
    if (global_peak == 0.0 || lag_min >= lag_max) continue;

    double mean = 0.0;
    for (std::size_t i = 0; i < window; ++i) mean += x[start + i];
    mean /= static_cast<double>(window);
    double local_peak = 0.0;
    for (std::size_t i = 0; i < window; ++i) {
      const double v = x[start + i] - mean;
      local_peak = std::max(local_peak, std::abs(v));
      buf[i] = v * w[i];
    }
    if (local_peak < params.silence_threshold * global_peak) continue;
    const auto ra = autocorr(buf, lag_max + 1);
    if (ra[0] <= 0.0) continue;
    std::vector<double> r(lag_max + 2, 0.0);
    for (std::size_t lag = 0; lag <= lag_max + 1; ++lag) {
      r[lag] = rw[lag] > 1e-6 ? (ra[lag] / ra[0]) / rw[lag] : 0.0;
    }

    // Local maxima inside the candidate lag range, refined by a parabola.
    struct Candidate {
      double lag;
      double value;
    };
    std::vector<Candidate> candidates;
    for (std::size_t lag = std::max<std::size_t>(lag_min, 1); lag <= lag_max; ++lag) {
      if (r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] > 0.0) {
        const auto [offset, value] = parabolic_peak(r[lag - 1], r[lag], r[lag + 1]);
        candidates.push_back({static_cast<double>(lag) + offset, value});
      }
    }
    if (candidates.empty()) continue;
    // Corrected values above 1 at long lags are window-correction artifacts.
    // Capping them and charging an octave cost keeps multiples of the period
    // from outscoring the period itself.
    auto score = [&](const Candidate& c) {
      return std::min(c.value, 1.0) - params.octave_cost * std::log2(c.lag * f0_min_hz / rate);
    };
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) best = std::max(best, score(c));
    const Candidate* chosen = nullptr;
    for (const auto& c : candidates) {
      if (score(c) >= best - params.tie_tolerance) {
        chosen = &c;
        break;
      }
    }
    pf.strength = std::min(chosen->value, 1.0);
    pf.period_sec = chosen->lag / rate;
    pf.voiced = chosen->value > params.voicing_threshold;
    if (!pf.voiced) pf.period_sec = 0.0;
  }
  return track;
}

GlottalPulseTrain extract_glottal_pulses(const SampledSignal& segment, double f0_min_hz, double f0_max_hz,
                                         const PitchParams& params) {
  const auto track = track_periodicity(segment, f0_min_hz, f0_max_hz, params);
  const auto x = segment.samples();
  const double rate = segment.rate_hz();
  const auto n = static_cast<std::ptrdiff_t>(x.size());

  std::vector<VoicedRun> runs;
  for (std::size_t f = 0; f < track.size(); ++f) {
    if (!track[f].voiced) continue;
    if (!runs.empty() && runs.back().last_frame + 1 == f) {
      runs.back().last_frame = f;
    } else {
      runs.push_back({f, f});
    }
  }

  GlottalPulseTrain train;
  for (const auto& run : runs) {
    const double t_begin = std::max(0.0, track[run.first_frame].center_sec - params.hop_sec / 2.0);
    const double t_end = std::min(segment.duration_sec(), track[run.last_frame].center_sec + params.hop_sec / 2.0);
    const auto i_begin = static_cast<std::ptrdiff_t>(std::ceil(t_begin * rate));
    const auto i_end = std::min<std::ptrdiff_t>(n, static_cast<std::ptrdiff_t>(std::floor(t_end * rate)) + 1);
    if (i_end - i_begin < 2) continue;

    auto period_at = [&](double t) {
      if (t <= track[run.first_frame].center_sec) return track[run.first_frame].period_sec;
      if (t >= track[run.last_frame].center_sec) return track[run.last_frame].period_sec;
      for (std::size_t f = run.first_frame; f < run.last_frame; ++f) {
        const double c0 = track[f].center_sec;
        const double c1 = track[f + 1].center_sec;
        if (t <= c1) {
          const double a = (t - c0) / (c1 - c0);
          return (1.0 - a) * track[f].period_sec + a * track[f + 1].period_sec;
        }
      }
      return track[run.last_frame].period_sec;
    };

    // Dominant polarity of the run decides whether pulses sit on maxima or minima.
    double hi = 0.0;
    double lo = 0.0;
    for (auto i = i_begin; i < i_end; ++i) {
      hi = std::max(hi, x[static_cast<std::size_t>(i)]);
      lo = std::min(lo, x[static_cast<std::size_t>(i)]);
    }
    const double sign = hi >= -lo ? 1.0 : -1.0;
    auto value = [&](std::ptrdiff_t i) { return sign * x[static_cast<std::size_t>(i)]; };

    auto refined_time = [&](std::ptrdiff_t i) {
      if (i <= 0 || i >= n - 1) return static_cast<double>(i) / rate;
      const auto [offset, v] = parabolic_peak(value(i - 1), value(i), value(i + 1));
      (void)v;
      return (static_cast<double>(i) + offset) / rate;
    };

    auto best_in = [&](double t_lo, double t_hi) -> std::ptrdiff_t {
      const auto a = std::max(i_begin, static_cast<std::ptrdiff_t>(std::ceil(t_lo * rate)));
      const auto b = std::min(i_end - 1, static_cast<std::ptrdiff_t>(std::floor(t_hi * rate)));
      if (a > b) return -1;
      std::ptrdiff_t best = a;
      for (auto i = a + 1; i <= b; ++i) {
        if (value(i) > value(best)) best = i;
      }
      return best;
    };

    std::ptrdiff_t anchor = i_begin;
    for (auto i = i_begin + 1; i < i_end; ++i) {
      if (value(i) > value(anchor)) anchor = i;
    }

    std::vector<std::ptrdiff_t> forward{anchor};
    for (;;) {
      const double t = static_cast<double>(forward.back()) / rate;
      const double period = period_at(t);
      const double predicted = t + period;
      const auto next = best_in(predicted - params.search_fraction * period, predicted + params.search_fraction * period);
      if (next <= forward.back()) break;
      forward.push_back(next);
    }
    std::vector<std::ptrdiff_t> backward;
    for (;;) {
      const std::ptrdiff_t current = backward.empty() ? anchor : backward.back();
      const double t = static_cast<double>(current) / rate;
      const double period = period_at(t);
      const double predicted = t - period;
      const auto prev = best_in(predicted - params.search_fraction * period, predicted + params.search_fraction * period);
      if (prev < 0 || prev >= current) break;
      backward.push_back(prev);
    }

    std::vector<double> times;
    for (auto it = backward.rbegin(); it != backward.rend(); ++it) times.push_back(refined_time(*it));
    for (auto i : forward) times.push_back(refined_time(i));
    // Parabolic refinement never reorders samples at least one apart, but guard anyway.
    times.erase(std::unique(times.begin(), times.end(), [](double a, double b) { return b <= a; }), times.end());
    if (!train.pulse_times.empty() && !times.empty() && times.front() <= train.pulse_times.back()) continue;

    train.pulse_times.insert(train.pulse_times.end(), times.begin(), times.end());
    train.run_ends.push_back(train.pulse_times.size());
    if (times.size() >= 2) train.longest_run_sec = std::max(train.longest_run_sec, times.back() - times.front());
  }

  double in_run_sum = 0.0;
  std::size_t in_run_count = 0;
  for (std::size_t i = 0; i + 1 < train.pulse_times.size(); ++i) {
    train.cycles.push_back(train.pulse_times[i + 1] - train.pulse_times[i]);
    if (train.cycle_in_run(i)) {
      in_run_sum += train.cycles.back();
      ++in_run_count;
    }
  }
  train.mean_cycle_sec = in_run_count ? in_run_sum / static_cast<double>(in_run_count) : 0.0;
  return train;
}

GlottalPulseTrain make_pulse_train(std::vector<double> pulse_times) {
  GlottalPulseTrain train;
  train.pulse_times = std::move(pulse_times);
  for (std::size_t i = 1; i < train.pulse_times.size(); ++i) {
    if (!(train.pulse_times[i] > train.pulse_times[i - 1])) {
      throw InvalidSignal("pulse times must be strictly increasing");
    }
  }
  if (!train.pulse_times.empty()) train.run_ends.push_back(train.pulse_times.size());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < train.pulse_times.size(); ++i) {
    train.cycles.push_back(train.pulse_times[i + 1] - train.pulse_times[i]);
    sum += train.cycles.back();
  }
  if (!train.cycles.empty()) {
    train.mean_cycle_sec = sum / static_cast<double>(train.cycles.size());
    train.longest_run_sec = train.pulse_times.back() - train.pulse_times.front();
  }
  return train;
}

namespace {

struct DirectedDistance {
  double sum = 0.0;
  std::size_t pairs = 0;
};

DirectedDistance directed_distance(const GlottalPulseTrain& a, const GlottalPulseTrain& b) {
  DirectedDistance d;
  const auto& tb = b.pulse_times;
  for (std::size_t i = 0; i < a.cycles.size(); ++i) {
    if (!a.cycle_in_run(i)) continue;
    const double ta = a.pulse_times[i];
    const double ca = a.cycles[i];
    auto it = std::lower_bound(tb.begin(), tb.end(), ta);
    std::size_t j = static_cast<std::size_t>(it - tb.begin());
    if (j == tb.size() || (j > 0 && std::abs(tb[j - 1] - ta) <= std::abs(tb[j] - ta))) {
      if (j > 0) --j;
    }
    if (j >= tb.size() || std::abs(tb[j] - ta) > ca / 2.0 || !b.cycle_in_run(j)) continue;
    const double cb = b.cycles[j];
    d.sum += std::abs(ca - cb) / std::max(ca, cb);
    ++d.pairs;
  }
  return d;
}

}  // namespace

double pitch_distance(const GlottalPulseTrain& a, const GlottalPulseTrain& b) {
  if (a.empty() || b.empty()) throw NoPitch("pitch distance needs two non-empty pulse trains");
  const auto ab = directed_distance(a, b);
  const auto ba = directed_distance(b, a);
  if (ab.pairs == 0 && ba.pairs == 0) return 1.0;
  if (ab.pairs == 0) return ba.sum / static_cast<double>(ba.pairs);
  if (ba.pairs == 0) return ab.sum / static_cast<double>(ab.pairs);
  return 0.5 * (ab.sum / static_cast<double>(ab.pairs) + ba.sum / static_cast<double>(ba.pairs));
}

}  // namespace vauth
