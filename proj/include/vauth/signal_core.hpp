#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vauth/signal.hpp"

// Time-domain DSP primitives for the pre-processing stage. Every function is a
// pure function of its arguments.
namespace vauth {

/// Kaiser-windowed sinc FIR design.
struct FirSpec {
  double cutoff_hz = 0.0;      // -6 dB point
  double transition_hz = 0.0;  // full transition band width
  double attenuation_db = 60.0;
};

/// Linear-phase lowpass taps (odd length, unit DC gain).
std::vector<double> design_lowpass(const FirSpec& spec, double rate_hz);
/// Linear-phase highpass taps (odd length, spectral inversion of the lowpass).
std::vector<double> design_highpass(const FirSpec& spec, double rate_hz);
/// Magnitude response of `taps` at `freq_hz`.
double fir_gain(std::span<const double> taps, double freq_hz, double rate_hz);
/// Zero-phase application of an odd-length linear-phase FIR. Output length
/// equals input length; the group delay is removed.
std::vector<double> apply_fir_zero_phase(std::span<const double> x, std::span<const double> taps);

/// Highpass with stopband edge at cutoff/2 and passband edge at 1.5 x cutoff.
/// Throws InvalidCutoff unless 0 < cutoff_hz < rate/2.
SampledSignal highpass_filter(const SampledSignal& signal, double cutoff_hz);
/// Lowpass counterpart, used by the synthesizer's body channel.
SampledSignal lowpass_filter(const SampledSignal& signal, double cutoff_hz);

/// Bandlimited rational resampling with a polyphase Kaiser-sinc bank. The
/// anti-alias passband ends at 0.45 x min(rate) and the stopband starts at
/// the lower Nyquist frequency.
SampledSignal resample(const SampledSignal& signal, double target_rate_hz);

struct SpikeClipResult {
  SampledSignal signal;
  std::size_t clipped = 0;  // number of samples clamped
};

/// Clamps samples whose energy (x^2) exceeds the running mean energy plus
/// k_sigma running standard deviations over a centered window. Statistics are
/// re-estimated with flagged samples excluded until no new sample is flagged,
/// and flagged samples are clamped to the final bound with their sign kept.
SpikeClipResult clip_spikes_detailed(const SampledSignal& signal, std::size_t window_len, double k_sigma);
SampledSignal clip_spikes(const SampledSignal& signal, std::size_t window_len, double k_sigma = 6.0);

/// Scales to max |x| = 1. Throws DegenerateSignal for an all-zero input.
SampledSignal normalize_unity(const SampledSignal& signal);

struct Alignment {
  std::ptrdiff_t shift = 0;  // g lags f by `shift` samples
  SampledSignal f_aligned;
  SampledSignal g_aligned;
};

/// Finds the lag maximizing the cross-correlation and truncates both signals
/// to their overlap. Ties go to the smallest |shift|.
Alignment align(const SampledSignal& f, const SampledSignal& g);

/// Shifts the pair by a known lag and truncates to the common overlap.
Alignment apply_shift(const SampledSignal& f, const SampledSignal& g, std::ptrdiff_t shift);

struct EnvelopeParams {
  std::size_t frame_len = 80;         // 10 ms at 8 kHz
  double threshold_frac = 0.05;       // relative to the loudest frame
  std::size_t close_gap_frames = 2;   // fill inactive gaps shorter than this
  double absolute_floor = 0.0;        // mean frame energy must also exceed this
};

/// Marks frames whose mean energy exceeds threshold_frac x the maximum frame
/// energy (and the absolute floor), then fills short inactive gaps.
EnergyEnvelope energy_envelope(const SampledSignal& signal, const EnvelopeParams& params);
EnergyEnvelope energy_envelope(const SampledSignal& signal, std::size_t frame_len, double threshold_frac);

/// Zeros every sample under an inactive frame. Throws EnvelopeMismatch when the
/// envelope and signal durations differ by more than one frame.
SampledSignal apply_envelope(const EnergyEnvelope& env, const SampledSignal& signal);

/// Normalized cross-correlation over all lags. Uses the direct form up to
/// kDirectXcorrLimit samples and an FFT product above it.
CrossCorrelation xcorr_normalized(const SampledSignal& f, const SampledSignal& g);

inline constexpr std::size_t kDirectXcorrLimit = 4096;

/// Direct O(N*M) raw cross-correlation, same lag layout as fft::correlate.
std::vector<double> correlate_direct(std::span<const double> f, std::span<const double> g);

}  // namespace vauth
