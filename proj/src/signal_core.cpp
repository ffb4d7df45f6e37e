#include "vauth/signal_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "vauth/errors.hpp"
#include "vauth/fft.hpp"

namespace vauth {

// ---------------------------------------------------------------------------
// SampledSignal and friends

SampledSignal::SampledSignal(std::vector<double> samples, double rate_hz)
    : samples_(std::move(samples)), rate_hz_(rate_hz) {
  if (!(rate_hz_ > 0.0) || !std::isfinite(rate_hz_)) {
    throw InvalidSignal("rate_hz must be positive, got " + std::to_string(rate_hz_));
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      throw InvalidSignal("non-finite sample at index " + std::to_string(i));
    }
  }
}

SampledSignal SampledSignal::empty(double rate_hz) { return SampledSignal({}, rate_hz); }

SampledSignal SampledSignal::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, samples_.size());
  begin = std::min(begin, end);
  return SampledSignal(std::vector<double>(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                           samples_.begin() + static_cast<std::ptrdiff_t>(end)),
                       rate_hz_);
}

double energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

double peak_abs(std::span<const double> x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::sqrt(energy(x) / static_cast<double>(x.size()));
}

bool all_zero(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
}

std::size_t EnergyEnvelope::active_frames() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

std::size_t CrossCorrelation::argmax_abs() const {
  std::size_t best = 0;
  double best_v = -1.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double a = std::abs(values[k]);
    if (a > best_v) {
      best_v = a;
      best = k;
    }
  }
  return best;
}

double CrossCorrelation::max_abs() const {
  return values.empty() ? 0.0 : std::abs(values[argmax_abs()]);
}

// ---------------------------------------------------------------------------
// FIR design

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser_beta(double attenuation_db) {
  if (attenuation_db > 50.0) return 0.1102 * (attenuation_db - 8.7);
  if (attenuation_db >= 21.0) {
    return 0.5842 * std::pow(attenuation_db - 21.0, 0.4) + 0.07886 * (attenuation_db - 21.0);
  }
  return 0.0;
}

// Kaiser window evaluated at u in [-1, 1].
double kaiser(double u, double beta, double i0_beta) {
  if (std::abs(u) > 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u)) / i0_beta;
}

// Number of taps minus one, rounded up to even so the filter has a center tap.
std::size_t kaiser_order(double attenuation_db, double transition_hz, double rate_hz) {
  const double dw = 2.0 * std::numbers::pi * transition_hz / rate_hz;
  auto order = static_cast<std::size_t>(std::ceil((attenuation_db - 8.0) / (2.285 * dw)));
  order = std::max<std::size_t>(order, 2);
  if (order % 2 == 1) ++order;
  return order;
}

}  // namespace

std::vector<double> design_lowpass(const FirSpec& spec, double rate_hz) {
  const std::size_t order = kaiser_order(spec.attenuation_db, spec.transition_hz, rate_hz);
  const double beta = kaiser_beta(spec.attenuation_db);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  const double fc = spec.cutoff_hz / rate_hz;  // cycles per sample
  const double half = static_cast<double>(order) / 2.0;
  std::vector<double> taps(order + 1);
  for (std::size_t n = 0; n <= order; ++n) {
    const double t = static_cast<double>(n) - half;
    taps[n] = 2.0 * fc * sinc(2.0 * fc * t) * kaiser(t / half, beta, i0_beta);
  }
  const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
  for (auto& v : taps) v /= sum;
  return taps;
}

std::vector<double> design_highpass(const FirSpec& spec, double rate_hz) {
  auto taps = design_lowpass(spec, rate_hz);
  for (auto& v : taps) v = -v;
  taps[taps.size() / 2] += 1.0;
  return taps;
}

double fir_gain(std::span<const double> taps, double freq_hz, double rate_hz) {
  const double w = 2.0 * std::numbers::pi * freq_hz / rate_hz;
  double re = 0.0;
  double im = 0.0;
  for (std::size_t n = 0; n < taps.size(); ++n) {
    re += taps[n] * std::cos(w * static_cast<double>(n));
    im -= taps[n] * std::sin(w * static_cast<double>(n));
  }
  return std::hypot(re, im);
}

std::vector<double> apply_fir_zero_phase(std::span<const double> x, std::span<const double> taps) {
  if (x.empty()) return {};
  const std::size_t delay = taps.size() / 2;
  std::vector<double> out(x.size(), 0.0);
  if (x.size() * taps.size() <= 4'000'000) {
    // out[i] = sum_j taps[j] * x[i + delay - j]
    for (std::size_t i = 0; i < x.size(); ++i) {
      double acc = 0.0;
      const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(i + delay);
      const std::ptrdiff_t j_lo = std::max<std::ptrdiff_t>(0, base - static_cast<std::ptrdiff_t>(x.size()) + 1);
      const std::ptrdiff_t j_hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(taps.size()) - 1, base);
      for (std::ptrdiff_t j = j_lo; j <= j_hi; ++j) acc += taps[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(base - j)];
      out[i] = acc;
    }
    return out;
  }
  const auto full = fft::convolve(x, taps);
  std::copy_n(full.begin() + static_cast<std::ptrdiff_t>(delay), x.size(), out.begin());
  return out;
}

SampledSignal highpass_filter(const SampledSignal& signal, double cutoff_hz) {
  const double nyquist = signal.rate_hz() / 2.0;
  if (!(cutoff_hz > 0.0) || cutoff_hz >= nyquist) {
    throw InvalidCutoff("cutoff " + std::to_string(cutoff_hz) + " Hz outside (0, " + std::to_string(nyquist) + ")");
  }
  FirSpec spec;
  spec.cutoff_hz = cutoff_hz;
  spec.transition_hz = std::min(cutoff_hz, 2.0 * (nyquist - cutoff_hz));
  spec.attenuation_db = 40.0;
  const auto taps = design_highpass(spec, signal.rate_hz());
  return SampledSignal(apply_fir_zero_phase(signal.samples(), taps), signal.rate_hz());
}

SampledSignal lowpass_filter(const SampledSignal& signal, double cutoff_hz) {
  const double nyquist = signal.rate_hz() / 2.0;
  if (!(cutoff_hz > 0.0) || cutoff_hz >= nyquist) {
    throw InvalidCutoff("cutoff " + std::to_string(cutoff_hz) + " Hz outside (0, " + std::to_string(nyquist) + ")");
  }
  FirSpec spec;
  spec.cutoff_hz = cutoff_hz;
  spec.transition_hz = std::min(0.2 * cutoff_hz, 2.0 * (nyquist - cutoff_hz));
  spec.attenuation_db = 60.0;
  const auto taps = design_lowpass(spec, signal.rate_hz());
  return SampledSignal(apply_fir_zero_phase(signal.samples(), taps), signal.rate_hz());
}

// ---------------------------------------------------------------------------
// Resampling

namespace {

bool is_integral(double v) { return std::abs(v - std::round(v)) < 1e-9 && v < 9.0e15; }

constexpr std::size_t kMaxExactPhases = 4096;

}  // namespace

SampledSignal resample(const SampledSignal& signal, double target_rate_hz) {
  if (!(target_rate_hz > 0.0) || !std::isfinite(target_rate_hz)) {
    throw InvalidRate("target rate must be positive");
  }
  const double src = signal.rate_hz();
  if (target_rate_hz == src) return signal;
  const auto x = signal.samples();
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) * target_rate_hz / src));
  if (x.empty() || out_len == 0) return SampledSignal::empty(target_rate_hz);

  // Rational ratio L/M when both rates are integers.
  std::uint64_t up = 0;
  std::uint64_t down = 0;
  if (is_integral(src) && is_integral(target_rate_hz)) {
    const auto s = static_cast<std::uint64_t>(std::llround(src));
    const auto t = static_cast<std::uint64_t>(std::llround(target_rate_hz));
    const auto g = std::gcd(s, t);
    up = t / g;
    down = s / g;
  }
  const bool exact = up != 0 && up <= kMaxExactPhases;
  const std::size_t phases = exact ? static_cast<std::size_t>(up) : kMaxExactPhases;

  const double lower = std::min(src, target_rate_hz);
  const double attenuation = 60.0;
  const double transition = 0.05 * lower;
  const double cutoff = 0.475 * lower;
  const double beta = kaiser_beta(attenuation);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  // half-length of the kernel in input samples
  const double half_sec = (attenuation - 8.0) / (2.285 * 2.0 * std::numbers::pi * transition) / 2.0;
  const double half = half_sec * src;
  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(half)) + 1;
  const std::size_t width = static_cast<std::size_t>(2 * reach + 1);
  const double scale = 2.0 * cutoff / src;

  // table[p][d + reach] = h(p / phases - d), taps of each phase normalized to unit DC gain.
  // One extra phase (== phase 0 shifted) supports interpolation in the inexact path.
  std::vector<double> table((phases + 1) * width);
  for (std::size_t p = 0; p <= phases; ++p) {
    const double frac = static_cast<double>(p) / static_cast<double>(phases);
    double sum = 0.0;
    for (std::ptrdiff_t d = -reach; d <= reach; ++d) {
      const double tau = frac - static_cast<double>(d);
      const double v = scale * sinc(scale * tau) * kaiser(tau / half, beta, i0_beta);
      table[p * width + static_cast<std::size_t>(d + reach)] = v;
      sum += v;
    }
    for (std::size_t j = 0; j < width; ++j) table[p * width + j] /= sum;
  }

  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> out(out_len);
  for (std::size_t m = 0; m < out_len; ++m) {
    std::ptrdiff_t k0 = 0;
    std::size_t phase = 0;
    double interp = 0.0;
    if (exact) {
      const std::uint64_t num = static_cast<std::uint64_t>(m) * down;
      k0 = static_cast<std::ptrdiff_t>(num / up);
      phase = static_cast<std::size_t>(num % up);
    } else {
      const double pos = static_cast<double>(m) * src / target_rate_hz;
      k0 = static_cast<std::ptrdiff_t>(std::floor(pos));
      const double fpos = (pos - static_cast<double>(k0)) * static_cast<double>(phases);
      phase = std::min(static_cast<std::size_t>(fpos), phases - 1);
      interp = fpos - static_cast<double>(phase);
    }
    const double* row = &table[phase * width];
    const double* next = &table[(phase + 1) * width];
    double acc = 0.0;
    for (std::ptrdiff_t d = -reach; d <= reach; ++d) {
      const std::ptrdiff_t k = k0 + d;
      if (k < 0 || k >= n) continue;
      const auto j = static_cast<std::size_t>(d + reach);
      const double h = exact ? row[j] : (1.0 - interp) * row[j] + interp * next[j];
      acc += h * x[static_cast<std::size_t>(k)];
    }
    out[m] = acc;
  }
  return SampledSignal(std::move(out), target_rate_hz);
}

// ---------------------------------------------------------------------------
// Spike clipping

SpikeClipResult clip_spikes_detailed(const SampledSignal& signal, std::size_t window_len, double k_sigma) {
  if (window_len < 8) throw InvalidSignal("clip_spikes window must be at least 8 samples");
  const auto x = signal.samples();
  const std::size_t n = x.size();
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = x[i] * x[i];

  std::vector<unsigned char> flagged(n, 0);
  std::vector<double> bound(n, 0.0);
  std::vector<double> s1(n + 1);
  std::vector<double> s2(n + 1);
  std::vector<double> cnt(n + 1);
  const std::size_t half = window_len / 2;
  constexpr int kMaxRounds = 32;

  for (int round = 0; round < kMaxRounds; ++round) {
    s1[0] = s2[0] = cnt[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double keep = flagged[i] ? 0.0 : 1.0;
      s1[i + 1] = s1[i] + keep * e[i];
      s2[i + 1] = s2[i] + keep * e[i] * e[i];
      cnt[i + 1] = cnt[i] + keep;
    }
    std::size_t newly = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i > half ? i - half : 0;
      const std::size_t hi = std::min(n, i + (window_len - half));
      const double c = cnt[hi] - cnt[lo];
      double mean = 0.0;
      double var = 0.0;
      if (c > 0.0) {
        mean = (s1[hi] - s1[lo]) / c;
        var = std::max(0.0, (s2[hi] - s2[lo]) / c - mean * mean);
      }
      bound[i] = mean + k_sigma * std::sqrt(var);
      if (!flagged[i] && e[i] > bound[i]) {
        flagged[i] = 1;
        ++newly;
      }
    }
    if (newly == 0) break;
  }

  std::vector<double> out(x.begin(), x.end());
  SpikeClipResult result;
  for (std::size_t i = 0; i < n; ++i) {
    if (flagged[i] && e[i] > bound[i]) {
      out[i] = std::copysign(std::sqrt(bound[i]), x[i]);
      ++result.clipped;
    }
  }
  result.signal = SampledSignal(std::move(out), signal.rate_hz());
  return result;
}

SampledSignal clip_spikes(const SampledSignal& signal, std::size_t window_len, double k_sigma) {
  return clip_spikes_detailed(signal, window_len, k_sigma).signal;
}

SampledSignal normalize_unity(const SampledSignal& signal) {
  const double peak = peak_abs(signal.samples());
  if (peak == 0.0) throw DegenerateSignal("cannot normalize an all-zero signal");
  std::vector<double> out(signal.samples().begin(), signal.samples().end());
  for (auto& v : out) v /= peak;
  return SampledSignal(std::move(out), signal.rate_hz());
}

// ---------------------------------------------------------------------------
// Alignment and correlation

std::vector<double> correlate_direct(std::span<const double> f, std::span<const double> g) {
  if (f.empty() || g.empty()) return {};
  const auto nf = static_cast<std::ptrdiff_t>(f.size());
  const auto ng = static_cast<std::ptrdiff_t>(g.size());
  std::vector<double> c(f.size() + g.size() - 1, 0.0);
  for (std::ptrdiff_t lag = -(nf - 1); lag <= ng - 1; ++lag) {
    const std::ptrdiff_t t_lo = std::max<std::ptrdiff_t>(0, -lag);
    const std::ptrdiff_t t_hi = std::min<std::ptrdiff_t>(nf, ng - lag);
    double acc = 0.0;
    for (std::ptrdiff_t t = t_lo; t < t_hi; ++t) acc += f[static_cast<std::size_t>(t)] * g[static_cast<std::size_t>(t + lag)];
    c[static_cast<std::size_t>(lag + nf - 1)] = acc;
  }
  return c;
}

namespace {

std::vector<double> correlate_auto(std::span<const double> f, std::span<const double> g) {
  if (std::max(f.size(), g.size()) <= kDirectXcorrLimit) return correlate_direct(f, g);
  return fft::correlate(f, g);
}

void require_same_rate(const SampledSignal& f, const SampledSignal& g, const char* what) {
  if (f.rate_hz() != g.rate_hz()) throw InvalidSignal(std::string(what) + ": sampling rates differ");
}

}  // namespace

Alignment apply_shift(const SampledSignal& f, const SampledSignal& g, std::ptrdiff_t shift) {
  const auto nf = static_cast<std::ptrdiff_t>(f.size());
  const auto ng = static_cast<std::ptrdiff_t>(g.size());
  const std::ptrdiff_t f_begin = shift >= 0 ? 0 : -shift;
  const std::ptrdiff_t g_begin = shift >= 0 ? shift : 0;
  const std::ptrdiff_t len = std::min(nf - f_begin, ng - g_begin);
  if (len <= 0) throw AlignmentFailed("no overlap at shift " + std::to_string(shift));
  Alignment a;
  a.shift = shift;
  a.f_aligned = f.slice(static_cast<std::size_t>(f_begin), static_cast<std::size_t>(f_begin + len));
  a.g_aligned = g.slice(static_cast<std::size_t>(g_begin), static_cast<std::size_t>(g_begin + len));
  return a;
}

Alignment align(const SampledSignal& f, const SampledSignal& g) {
  require_same_rate(f, g, "align");
  if (f.is_empty() || g.is_empty()) throw AlignmentFailed("empty input");
  const auto c = correlate_auto(f.samples(), g.samples());
  const auto zero = static_cast<std::ptrdiff_t>(f.size()) - 1;
  std::ptrdiff_t best_lag = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < c.size(); ++k) {
    const std::ptrdiff_t lag = static_cast<std::ptrdiff_t>(k) - zero;
    if (c[k] > best || (c[k] == best && std::abs(lag) < std::abs(best_lag))) {
      best = c[k];
      best_lag = lag;
    }
  }
  return apply_shift(f, g, best_lag);
}

CrossCorrelation xcorr_normalized(const SampledSignal& f, const SampledSignal& g) {
  require_same_rate(f, g, "xcorr_normalized");
  if (f.is_empty() || g.is_empty()) throw DegenerateSignal("xcorr of an empty signal");
  const double ef = energy(f.samples());
  const double eg = energy(g.samples());
  if (ef == 0.0 || eg == 0.0) throw DegenerateSignal("xcorr of an all-zero signal");
  CrossCorrelation h;
  h.values = correlate_auto(f.samples(), g.samples());
  h.zero_lag_index = static_cast<std::ptrdiff_t>(f.size()) - 1;
  const double norm = std::sqrt(ef * eg);
  for (auto& v : h.values) v /= norm;
  return h;
}

// ---------------------------------------------------------------------------
// Energy envelope

EnergyEnvelope energy_envelope(const SampledSignal& signal, const EnvelopeParams& params) {
  if (params.frame_len < 1) throw InvalidSignal("envelope frame_len must be >= 1");
  if (!(params.threshold_frac > 0.0 && params.threshold_frac < 1.0)) {
    throw InvalidSignal("envelope threshold_frac must be in (0, 1)");
  }
  const auto x = signal.samples();
  const std::size_t frames = (x.size() + params.frame_len - 1) / params.frame_len;
  std::vector<double> frame_energy(frames, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t begin = f * params.frame_len;
    const std::size_t end = std::min(x.size(), begin + params.frame_len);
    frame_energy[f] = energy(x.subspan(begin, end - begin)) / static_cast<double>(end - begin);
  }
  EnergyEnvelope env;
  env.frame_len = params.frame_len;
  env.rate_hz = signal.rate_hz();
  env.mask.assign(frames, 0);
  const double max_e = frames ? *std::max_element(frame_energy.begin(), frame_energy.end()) : 0.0;
  if (max_e <= 0.0) return env;
  const double threshold = std::max(params.threshold_frac * max_e, params.absolute_floor);
  for (std::size_t f = 0; f < frames; ++f) env.mask[f] = frame_energy[f] > threshold ? 1 : 0;

  // Closing: fill inactive runs shorter than close_gap_frames that sit between active frames.
  std::size_t f = 0;
  while (f < frames) {
    if (env.mask[f] == 1) {
      ++f;
      continue;
    }
    const std::size_t gap_begin = f;
    while (f < frames && env.mask[f] == 0) ++f;
    const bool interior = gap_begin > 0 && f < frames;
    if (interior && f - gap_begin < params.close_gap_frames) {
      std::fill(env.mask.begin() + static_cast<std::ptrdiff_t>(gap_begin),
                env.mask.begin() + static_cast<std::ptrdiff_t>(f), 1);
    }
  }
  return env;
}

EnergyEnvelope energy_envelope(const SampledSignal& signal, std::size_t frame_len, double threshold_frac) {
  EnvelopeParams p;
  p.frame_len = frame_len;
  p.threshold_frac = threshold_frac;
  return energy_envelope(signal, p);
}

SampledSignal apply_envelope(const EnergyEnvelope& env, const SampledSignal& signal) {
  const std::size_t expected = (signal.size() + env.frame_len - 1) / env.frame_len;
  const auto diff = static_cast<std::ptrdiff_t>(expected) - static_cast<std::ptrdiff_t>(env.mask.size());
  if (std::abs(diff) > 1) {
    throw EnvelopeMismatch("envelope has " + std::to_string(env.mask.size()) + " frames, signal needs " +
                           std::to_string(expected));
  }
  std::vector<double> out(signal.samples().begin(), signal.samples().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t f = i / env.frame_len;
    if (f >= env.mask.size() || env.mask[f] == 0) out[i] = 0.0;
  }
  return SampledSignal(std::move(out), signal.rate_hz());
}

}  // namespace vauth
