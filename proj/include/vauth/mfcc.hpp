#pragma once

#include <cstddef>
#include <vector>

#include "vauth/signal.hpp"

namespace vauth {

struct MfccParams {
  std::size_t hop_samples = 256;
  std::size_t window_samples = 512;
  std::size_t n_coeffs = 77;
  std::size_t n_mel_bands = 30;
  double rate_hz = 16000.0;
};

/// frames x coefficients, row-major.
struct MfccMatrix {
  std::size_t frames = 0;
  std::size_t coeffs = 0;
  std::vector<double> data;

  double at(std::size_t frame, std::size_t coeff) const { return data[frame * coeffs + coeff]; }
  double& at(std::size_t frame, std::size_t coeff) { return data[frame * coeffs + coeff]; }
};

/// Throws InvalidConfig when hop > window, a count is zero, or the rate is not
/// positive.
void validate(const MfccParams& p);

/// Triangular HTK-style Mel filterbank, n_mel_bands x (window/2 + 1).
std::vector<std::vector<double>> mel_filterbank(const MfccParams& p);

/// Hann-windowed STFT power -> Mel filterbank -> log(P + eps) - log(eps) ->
/// orthonormal DCT-II. Silence therefore maps to all-zero coefficients.
/// Only min(n_coeffs, n_mel_bands) coefficients are kept, since higher ones
/// carry no band information. frames = floor((len - window) / hop) + 1.
/// Throws SignalTooShort when the signal is shorter than one window.
MfccMatrix mfcc_extract(const SampledSignal& signal, const MfccParams& p);

/// Inverse DCT, exp, Mel pseudo-inverse to a magnitude spectrogram, then
/// phase_iters rounds of Griffin-Lim starting from zero phase.
SampledSignal mfcc_invert(const MfccMatrix& coeffs, const MfccParams& p, int phase_iters = 32);

/// Mean per-frame Pearson correlation of 64-band log Mel spectra of two
/// signals at p's STFT settings, over frames of `reference` within 40 dB of
/// its loudest frame.
double envelope_correlation(const SampledSignal& reference, const SampledSignal& other, const MfccParams& p);

}  // namespace vauth
